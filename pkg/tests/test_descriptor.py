import math

import numpy as np
import pytest

from reldesc.core import AnchorBank, EmbeddingSet, LabelTable
from reldesc.descriptor import (
    DescriptorKind,
    RelationDescriptorSet,
    compute_rd,
    embedding_distance,
    euclidean_distance_matrix,
    load_descriptors,
    rd_distance,
    rd_distance_matrix,
    store_descriptors,
)
from reldesc.errors import AnchorMismatchError, DimensionMismatchError, ZeroRowError


def make_embeddings(features):
    features = np.asarray(features, dtype=np.float32)
    table = LabelTable([f"s{i}" for i in range(features.shape[0])], [0] * features.shape[0])
    return EmbeddingSet(features, table)


def seeded_pair(seed=0, d=8, c=16, n=4):
    rng = np.random.default_rng(seed)
    bank = AnchorBank(rng.standard_normal((d, c)).astype(np.float32))
    emb = make_embeddings(rng.standard_normal((n, d)))
    return bank, emb


class TestComputeRd:
    def test_aligned_anchor(self):
        bank = AnchorBank(np.eye(2, dtype=np.float32), normalized=True)
        rd = compute_rd(bank, make_embeddings([[1.0, 0.0]]))
        np.testing.assert_allclose(rd.values[0], [1.0, 0.0], atol=1e-6)
        assert rd.kind is DescriptorKind.FULL_COSINE
        assert rd.anchor_digest == bank.digest()

    def test_diagonal_direction(self):
        bank = AnchorBank(np.eye(2, dtype=np.float32), normalized=True)
        s = 1.0 / math.sqrt(2.0)
        rd = compute_rd(bank, make_embeddings([[s, s]]))
        np.testing.assert_allclose(rd.values[0], [s, s], atol=1e-6)

    def test_matches_scalar_triple_loop(self):
        bank, emb = seeded_pair(seed=42, d=8, c=16, n=4)
        rd = compute_rd(bank, emb)
        w = bank.weights.astype(np.float64)
        z = emb.features.astype(np.float64)
        for i in range(4):
            for j in range(16):
                num = sum(z[i, k] * w[k, j] for k in range(8))
                wn = math.sqrt(sum(w[k, j] ** 2 for k in range(8)))
                zn = math.sqrt(sum(z[i, k] ** 2 for k in range(8)))
                assert abs(rd.values[i, j] - num / (wn * zn)) < 1e-6

    def test_unnormalized_bank_normalized_first(self):
        rng = np.random.default_rng(1)
        raw = rng.standard_normal((6, 5)).astype(np.float32) * 4.0
        emb = make_embeddings(rng.standard_normal((3, 6)))
        rd_raw = compute_rd(AnchorBank(raw), emb)
        rd_norm = compute_rd(AnchorBank(raw).normalize(), emb)
        np.testing.assert_array_equal(rd_raw.values, rd_norm.values)
        assert rd_raw.anchor_digest == rd_norm.anchor_digest

    def test_dimension_mismatch(self):
        bank, _ = seeded_pair(d=8)
        emb = make_embeddings(np.ones((2, 5)))
        with pytest.raises(DimensionMismatchError):
            compute_rd(bank, emb)

    def test_scale_invariance(self):
        bank, emb = seeded_pair(seed=3)
        scaled = make_embeddings(emb.features * 37.5)
        a = compute_rd(bank, emb).values
        b = compute_rd(bank, scaled).values
        assert np.max(np.abs(a - b)) < 1e-6

    def test_entries_bounded(self):
        for seed in range(5):
            bank, emb = seeded_pair(seed=seed, d=12, c=20, n=10)
            rd = compute_rd(bank, emb)
            assert np.max(np.abs(rd.values)) <= 1.0 + 1e-6


class TestEmbeddingDistance:
    def test_identity(self):
        z = np.array([1.0, 2.0, 3.0])
        assert embedding_distance(z, z) == 0.0

    def test_three_four_five(self):
        assert embedding_distance([0.0, 0.0], [3.0, 4.0]) == 5.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            embedding_distance([1.0], [1.0, 2.0])

    def test_symmetry_and_triangle_inequality(self):
        rng = np.random.default_rng(9)
        pts = rng.standard_normal((1000, 3, 6))
        for a, b, c in pts:
            ab = embedding_distance(a, b)
            assert ab == embedding_distance(b, a)
            assert ab <= embedding_distance(a, c) + embedding_distance(c, b) + 1e-12


class TestRdDistance:
    def test_zero_for_equal(self):
        r = np.array([0.5, -0.5, 0.25], dtype=np.float32)
        assert rd_distance(r, r) == 0.0

    def test_bound_saturation(self):
        a = np.ones(4, dtype=np.float32)
        b = -np.ones(4, dtype=np.float32)
        assert rd_distance(a, b) == pytest.approx(4.0, abs=1e-12)  # 2 * sqrt(4)

    def test_matches_definitional_oracle(self):
        rng = np.random.default_rng(21)
        a = rng.uniform(-1, 1, 32)
        b = rng.uniform(-1, 1, 32)
        expected = math.sqrt(sum((float(x) - float(y)) ** 2 for x, y in zip(a, b)))
        assert abs(rd_distance(a, b) - expected) < 1e-9

    def test_digest_mismatch_raises(self):
        r = np.ones(3, dtype=np.float32)
        with pytest.raises(AnchorMismatchError):
            rd_distance(r, r, digest_a=1, digest_b=2)

    def test_bound_holds_on_seeded_full_descriptors(self):
        bank, emb = seeded_pair(seed=5, d=10, c=7, n=12)
        rd = compute_rd(bank, emb)
        bound = 2.0 * math.sqrt(rd.dim) + 1e-6
        d = rd_distance_matrix(rd, rd)
        assert np.max(d) <= bound

    def test_metric_properties_on_seeded_sets(self):
        bank, emb = seeded_pair(seed=8, d=6, c=9, n=15)
        rd = compute_rd(bank, emb)
        d = rd_distance_matrix(rd, rd)
        assert np.all(d >= 0.0)
        np.testing.assert_array_equal(d, d.T)
        n = d.shape[0]
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    assert d[i, j] <= d[i, k] + d[k, j] + 1e-12


class TestRdDistanceMatrix:
    def test_zero_diagonal_when_probe_is_gallery(self):
        bank, emb = seeded_pair(seed=13)
        rd = compute_rd(bank, emb)
        d = rd_distance_matrix(rd, rd)
        np.testing.assert_array_equal(np.diag(d), np.zeros(len(emb)))

    def test_single_pair_equals_rd_distance(self):
        bank, emb = seeded_pair(seed=14, n=2)
        rd = compute_rd(bank, emb)
        one = RelationDescriptorSet(rd.values[:1], rd.kind, rd.anchor_digest)
        other = RelationDescriptorSet(rd.values[1:], rd.kind, rd.anchor_digest)
        m = rd_distance_matrix(one, other)
        assert m.shape == (1, 1)
        assert m[0, 0] == rd_distance(rd.values[0], rd.values[1])

    def test_bit_identical_to_per_pair_loop(self):
        rng = np.random.default_rng(99)
        a = RelationDescriptorSet(
            rng.uniform(-1, 1, (16, 24)).astype(np.float32), DescriptorKind.FULL_COSINE, 1
        )
        b = RelationDescriptorSet(
            rng.uniform(-1, 1, (32, 24)).astype(np.float32), DescriptorKind.FULL_COSINE, 1
        )
        m = rd_distance_matrix(a, b)
        for i in range(16):
            for j in range(32):
                assert m[i, j] == rd_distance(a.values[i], b.values[j])

    def test_threads_do_not_change_output(self):
        rng = np.random.default_rng(50)
        a = rng.standard_normal((40, 12))
        b = rng.standard_normal((25, 12))
        base = euclidean_distance_matrix(a, b, threads=1)
        for threads in (2, 4, 8):
            np.testing.assert_array_equal(euclidean_distance_matrix(a, b, threads=threads), base)

    def test_anchor_mismatch(self):
        bank, emb = seeded_pair(seed=15)
        other_bank, _ = seeded_pair(seed=16)
        rd_a = compute_rd(bank, emb)
        rd_b = compute_rd(other_bank, emb)
        with pytest.raises(AnchorMismatchError):
            rd_distance_matrix(rd_a, rd_b)


class TestDescriptorIO:
    def test_roundtrip_with_sidecar(self, tmp_path):
        bank, emb = seeded_pair(seed=17)
        rd = compute_rd(bank, emb)
        path = tmp_path / "rd.rdm"
        store_descriptors(rd, path)
        loaded = load_descriptors(path)
        np.testing.assert_array_equal(loaded.values, rd.values)
        assert loaded.kind is rd.kind
        assert loaded.anchor_digest == rd.anchor_digest

    def test_zero_row_rejected(self):
        # zero rows cannot even enter an EmbeddingSet; check the guard directly
        from reldesc.descriptor import unit_rows

        with pytest.raises(ZeroRowError):
            unit_rows(np.array([[0.0, 0.0, 0.0, 0.0]]))
