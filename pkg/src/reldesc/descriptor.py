"""Relation descriptors: cosine-similarity profiles against an anchor bank.

A sample's descriptor is the vector of cosine similarities between its
embedding and every anchor column. Distances between descriptors are plain
Euclidean; for full cosine descriptors with m anchors this distance is
bounded by 2*sqrt(m). Descriptors carry the digest of the bank that produced
them so that comparing descriptors from different banks is a hard error.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import AnchorBank, EmbeddingSet, as_matrix, load_matrix, store_matrix
from .errors import AnchorMismatchError, DescriptorError, DimensionMismatchError, ZeroRowError

COSINE_SLACK = 1e-6


def unit_rows(features: np.ndarray) -> np.ndarray:
    """Rows scaled to unit norm, computed and returned in float64."""
    z = np.asarray(features, dtype=np.float64)
    norms = np.sqrt(np.sum(z * z, axis=1))
    if z.shape[0] and np.any(norms <= 1e-12):
        raise ZeroRowError(f"embedding row {int(np.argmax(norms <= 1e-12))} has zero norm")
    return z / norms[:, None]


class DescriptorKind(Enum):
    FULL_COSINE = "full_cosine"
    SVD_REDUCED = "svd_reduced"


@dataclass
class RelationDescriptorSet:
    """Per-sample similarity profiles (n_samples x m) plus provenance."""

    values: np.ndarray
    kind: DescriptorKind
    anchor_digest: int

    def __post_init__(self):
        self.values = as_matrix(self.values)
        if self.kind is DescriptorKind.FULL_COSINE and self.values.size:
            peak = float(np.max(np.abs(self.values)))
            if peak > 1.0 + COSINE_SLACK:
                raise DescriptorError(
                    f"full cosine descriptor entry {peak} outside [-1, 1] tolerance"
                )

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def row(self, i: int) -> np.ndarray:
        return self.values[i]


def compute_rd(bank: AnchorBank, emb: EmbeddingSet) -> RelationDescriptorSet:
    """Cosine similarity of every embedding row against every anchor column.

    A non-normalized bank is column-normalized first; the descriptor records
    the digest of the normalized bank it was actually computed against.
    """
    bank = bank.normalize()
    if bank.dim != emb.dim:
        raise DimensionMismatchError(
            f"bank dimension {bank.dim} != embedding dimension {emb.dim}"
        )
    z = unit_rows(emb.features)
    w = bank.weights.astype(np.float64)
    values = (z @ w).astype(np.float32)
    # unit-norm rounding can push |cos| a hair past 1; clip within tolerance
    np.clip(values, -1.0, 1.0, out=values)
    return RelationDescriptorSet(values, DescriptorKind.FULL_COSINE, bank.digest())


def embedding_distance(z_a: np.ndarray, z_b: np.ndarray) -> float:
    """Euclidean distance between two feature vectors."""
    z_a = np.asarray(z_a, dtype=np.float64).ravel()
    z_b = np.asarray(z_b, dtype=np.float64).ravel()
    if z_a.shape != z_b.shape:
        raise DimensionMismatchError(f"{z_a.shape[0]}-dim vs {z_b.shape[0]}-dim")
    d = z_a - z_b
    return float(np.sqrt(np.sum(d * d)))


def rd_distance(
    r_a: np.ndarray,
    r_b: np.ndarray,
    *,
    digest_a: int | None = None,
    digest_b: int | None = None,
) -> float:
    """Euclidean distance between two descriptor rows.

    When both digests are supplied they must match; descriptors computed
    against different anchor banks are not comparable.
    """
    if digest_a is not None and digest_b is not None and digest_a != digest_b:
        raise AnchorMismatchError(
            f"anchor digests differ: {digest_a:016x} vs {digest_b:016x}"
        )
    return embedding_distance(r_a, r_b)


def euclidean_distance_matrix(
    a: np.ndarray, b: np.ndarray, threads: int = 1
) -> np.ndarray:
    """All-pairs Euclidean distances, bit-identical to per-pair calls.

    Each output row i is computed by one fixed-order reduction over the
    columns of (b - a[i]); the thread count partitions rows only and never
    changes any value.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise DimensionMismatchError(f"incompatible shapes {a.shape} and {b.shape}")
    out = np.empty((a.shape[0], b.shape[0]), dtype=np.float64)

    def fill(i: int) -> None:
        d = b - a[i]
        out[i] = np.sqrt(np.sum(d * d, axis=1))

    if threads <= 1 or a.shape[0] < 2:
        for i in range(a.shape[0]):
            fill(i)
    else:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, range(a.shape[0])))
    return out


def rd_distance_matrix(
    probe: RelationDescriptorSet, gallery: RelationDescriptorSet, threads: int = 1
) -> np.ndarray:
    """Batched rd_distance: entry (i, j) = distance(probe row i, gallery row j)."""
    if probe.anchor_digest != gallery.anchor_digest:
        raise AnchorMismatchError(
            f"anchor digests differ: {probe.anchor_digest:016x} vs "
            f"{gallery.anchor_digest:016x}"
        )
    if probe.dim != gallery.dim:
        raise DimensionMismatchError(f"{probe.dim}-dim vs {gallery.dim}-dim descriptors")
    return euclidean_distance_matrix(probe.values, gallery.values, threads=threads)


def store_descriptors(rd: RelationDescriptorSet, path: str | os.PathLike) -> None:
    """Write descriptor values as RDM1 plus a `.meta` sidecar with provenance."""
    store_matrix(rd.values, path)
    with open(str(path) + ".meta", "w", encoding="utf-8") as fh:
        fh.write(f"kind={rd.kind.value}\n")
        fh.write(f"anchor_digest={rd.anchor_digest:016x}\n")


def load_descriptors(path: str | os.PathLike) -> RelationDescriptorSet:
    values = load_matrix(path)
    meta: dict[str, str] = {}
    with open(str(path) + ".meta", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                key, _, value = line.partition("=")
                meta[key] = value
    try:
        kind = DescriptorKind(meta["kind"])
        digest = int(meta["anchor_digest"], 16)
    except (KeyError, ValueError) as exc:
        raise DescriptorError(f"{path}.meta: missing or invalid descriptor metadata") from exc
    return RelationDescriptorSet(values, kind, digest)
