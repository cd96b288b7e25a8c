import numpy as np
import pytest

from reldesc.core import (
    AnchorBank,
    EmbeddingSet,
    LabelTable,
    checksum,
    fnv1a,
    load_labels,
    load_matrix,
    matrix_bytes,
    normalize_columns,
    normalize_rows,
    store_labels,
    store_matrix,
)
from reldesc.errors import (
    BadMagicError,
    DescriptorError,
    LengthMismatchError,
    NonFiniteError,
    ShapeMismatchError,
    ZeroColumnError,
    ZeroRowError,
)


class TestMatrixIO:
    def test_identity_roundtrip(self, tmp_path):
        m = np.eye(2, dtype=np.float32)
        path = tmp_path / "id.rdm"
        store_matrix(m, path)
        loaded = load_matrix(path)
        assert loaded.dtype == np.float32
        np.testing.assert_array_equal(loaded, m)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.rdm"
        path.write_bytes(b"XXXX" + b"\x00" * 16)
        with pytest.raises(BadMagicError):
            load_matrix(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_matrix(tmp_path / "nope.rdm")

    def test_truncated_payload(self, tmp_path):
        m = np.ones((4, 4), dtype=np.float32)
        path = tmp_path / "trunc.rdm"
        store_matrix(m, path)
        blob = path.read_bytes()
        path.write_bytes(blob[:-4])
        with pytest.raises(ShapeMismatchError):
            load_matrix(path)

    def test_trailing_bytes_rejected(self, tmp_path):
        m = np.ones((2, 2), dtype=np.float32)
        path = tmp_path / "extra.rdm"
        store_matrix(m, path)
        path.write_bytes(path.read_bytes() + b"\x00\x00")
        with pytest.raises(ShapeMismatchError):
            load_matrix(path)

    def test_nonfinite_rejected(self, tmp_path):
        m = np.ones((2, 2), dtype=np.float32)
        path = tmp_path / "nan.rdm"
        store_matrix(m, path)
        blob = bytearray(path.read_bytes())
        blob[13:17] = np.array([np.nan], dtype="<f4").tobytes()
        path.write_bytes(bytes(blob))
        with pytest.raises(NonFiniteError):
            load_matrix(path)

    def test_store_rejects_nan(self, tmp_path):
        m = np.array([[np.nan]], dtype=np.float32)
        with pytest.raises(NonFiniteError):
            store_matrix(m, tmp_path / "x.rdm")

    def test_seeded_roundtrip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(123)
        m = rng.standard_normal((32, 128)).astype(np.float32)
        path = tmp_path / "m.rdm"
        store_matrix(m, path)
        loaded = load_matrix(path)
        assert checksum(loaded) == checksum(m)
        assert loaded.tobytes() == m.tobytes()

    def test_f64_roundtrip(self, tmp_path):
        rng = np.random.default_rng(7)
        m = rng.standard_normal((5, 3))
        path = tmp_path / "m64.rdm"
        store_matrix(m, path)
        loaded = load_matrix(path)
        assert loaded.dtype == np.float64
        np.testing.assert_array_equal(loaded, m)

    def test_f32_and_f64_same_values_different_sizes(self, tmp_path):
        m64 = np.array([[1.5, -2.25], [0.125, 42.0]])
        m32 = m64.astype(np.float32)
        p32, p64 = tmp_path / "a.rdm", tmp_path / "b.rdm"
        store_matrix(m32, p32)
        store_matrix(m64, p64)
        assert p64.stat().st_size - 13 == 2 * (p32.stat().st_size - 13)
        np.testing.assert_allclose(load_matrix(p32), load_matrix(p64), rtol=1e-7)

    def test_scalar_roundtrip(self, tmp_path):
        path = tmp_path / "s.rdm"
        store_matrix(np.array([[42.0]], dtype=np.float32), path)
        assert load_matrix(path)[0, 0] == 42.0

    def test_stored_file_checksum_stable(self, tmp_path):
        rng = np.random.default_rng(5)
        m = rng.standard_normal((8, 8)).astype(np.float32)
        p1, p2 = tmp_path / "r1.rdm", tmp_path / "r2.rdm"
        store_matrix(m, p1)
        store_matrix(m, p2)
        assert p1.read_bytes() == p2.read_bytes()
        assert fnv1a(p1.read_bytes()) == checksum(m)


class TestChecksum:
    def test_equal_matrices_equal_digests(self):
        m = np.arange(6, dtype=np.float32).reshape(2, 3)
        assert checksum(m) == checksum(m.copy())

    def test_single_scalar_change_changes_digest(self):
        rng = np.random.default_rng(11)
        m = rng.standard_normal((4, 4)).astype(np.float32)
        other = m.copy()
        other[2, 2] += 1.0
        assert checksum(m) != checksum(other)

    def test_empty_matrix_digest_is_header_only(self):
        m = np.zeros((0, 0), dtype=np.float32)
        assert checksum(m) == fnv1a(matrix_bytes(m))
        assert len(matrix_bytes(m)) == 13

    def test_dtype_affects_digest(self):
        m = np.ones((2, 2), dtype=np.float32)
        assert checksum(m) != checksum(m.astype(np.float64))


class TestNormalization:
    def test_three_four_five(self):
        m = np.array([[3.0], [4.0]], dtype=np.float32)
        np.testing.assert_allclose(normalize_columns(m), [[0.6], [0.8]], atol=1e-7)

    def test_orthonormal_unchanged(self):
        m = np.eye(3, dtype=np.float32)
        np.testing.assert_allclose(normalize_columns(m), m, atol=1e-7)

    def test_zero_column_raises(self):
        m = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=np.float32)
        with pytest.raises(ZeroColumnError):
            normalize_columns(m)

    def test_rows(self):
        m = np.array([[0.0, 2.0]], dtype=np.float32)
        np.testing.assert_allclose(normalize_rows(m), [[0.0, 1.0]], atol=1e-7)

    def test_unit_rows_unchanged(self):
        m = np.array([[1.0, 0.0], [0.0, 1.0]], dtype=np.float32)
        np.testing.assert_allclose(normalize_rows(m), m, atol=1e-7)

    def test_zero_row_raises(self):
        with pytest.raises(ZeroRowError):
            normalize_rows(np.zeros((1, 3), dtype=np.float32))

    def test_input_not_modified(self):
        m = np.array([[3.0], [4.0]], dtype=np.float32)
        before = m.copy()
        normalize_columns(m)
        np.testing.assert_array_equal(m, before)

    def test_idempotent_within_tolerance(self):
        rng = np.random.default_rng(3)
        m = rng.standard_normal((16, 8)).astype(np.float32) * 5.0
        once = normalize_columns(m)
        twice = normalize_columns(once)
        assert np.max(np.abs(twice - once)) < 1e-7

    def test_direction_preserved(self):
        rng = np.random.default_rng(4)
        m = rng.standard_normal((16, 8)).astype(np.float32) * 3.0
        normed = normalize_columns(m).astype(np.float64)
        raw = m.astype(np.float64)
        for j in range(m.shape[1]):
            cos = raw[:, j] @ normed[:, j] / (
                np.linalg.norm(raw[:, j]) * np.linalg.norm(normed[:, j])
            )
            assert abs(cos - 1.0) < 1e-7


class TestLabelTable:
    def test_roundtrip(self, tmp_path):
        table = LabelTable(["a", "b", "c"], [0, 1, 1], [0, None, 2], ["bag", None, None])
        path = tmp_path / "labels.csv"
        store_labels(table, path)
        loaded = load_labels(path)
        assert loaded == table

    def test_duplicate_sample_id_rejected(self):
        with pytest.raises(DescriptorError):
            LabelTable(["a", "a"], [0, 1])

    def test_length_mismatch_rejected(self):
        with pytest.raises(LengthMismatchError):
            LabelTable(["a", "b"], [0])

    def test_bad_line_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("only,three,fields\n")
        with pytest.raises(DescriptorError):
            load_labels(path)


class TestContainers:
    def test_embedding_set_row_count_must_match(self):
        with pytest.raises(LengthMismatchError):
            EmbeddingSet(np.ones((3, 2), dtype=np.float32), LabelTable(["a"], [0]))

    def test_embedding_set_zero_row_rejected(self):
        feats = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=np.float32)
        with pytest.raises(ZeroRowError):
            EmbeddingSet(feats, LabelTable(["a", "b"], [0, 1]))

    def test_anchor_bank_normalized_flag_checked(self):
        with pytest.raises(ZeroColumnError):
            AnchorBank(np.array([[2.0], [0.0]], dtype=np.float32), normalized=True)

    def test_anchor_bank_normalize(self):
        bank = AnchorBank(np.array([[3.0], [4.0]], dtype=np.float32))
        normed = bank.normalize()
        assert normed.normalized
        np.testing.assert_allclose(normed.weights, [[0.6], [0.8]], atol=1e-7)
        # already-normalized banks pass through untouched
        assert normed.normalize() is normed
