"""SVD compression of a selected anchor bank.

The selected bank is column-normalized first, so the quantity being
compressed is exactly the cosine descriptor basis. Factorizing W = U S V^T
and keeping the first k scaled left singular vectors (U[:, :k] * S[:k])
preserves all pairwise descriptor distances whenever k covers the numerical
rank, because the dropped right factor V is orthogonal. Reduced anchors are
deliberately NOT re-normalized: that would destroy the isometry.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass

import numpy as np

from .core import AnchorBank, EmbeddingSet, as_matrix, checksum, load_matrix, store_matrix
from .descriptor import (
    DescriptorKind,
    RelationDescriptorSet,
    compute_rd,
    euclidean_distance_matrix,
    unit_rows,
)
from .errors import (
    AnchorMismatchError,
    DescriptorError,
    DimensionMismatchError,
    KOutOfRangeError,
    NonFiniteError,
)

RANK_CUTOFF = 1e-8


@dataclass
class SvdFactors:
    """Full factorization m = U @ diag_rect(S) @ V.T with a fixed sign gauge."""

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray


def svd(m: np.ndarray) -> SvdFactors:
    """Full SVD with singular values descending and a deterministic sign
    convention: the largest-magnitude entry of each U column is nonnegative
    (paired V columns are flipped to match; unpaired columns of either factor
    get the same gauge independently).
    """
    m = as_matrix(m)
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise DescriptorError("svd requires at least one row and one column")
    a = m.astype(np.float64)
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise NonFiniteError(f"svd did not converge: {exc}") from exc
    v = vt.T
    r = s.shape[0]
    for i in range(u.shape[1]):
        peak = int(np.argmax(np.abs(u[:, i])))
        if u[peak, i] < 0.0:
            u[:, i] = -u[:, i]
            if i < r:
                v[:, i] = -v[:, i]
    for i in range(r, v.shape[1]):
        peak = int(np.argmax(np.abs(v[:, i])))
        if v[peak, i] < 0.0:
            v[:, i] = -v[:, i]
    return SvdFactors(u, s, v)


def reconstruct(factors: SvdFactors, shape: tuple[int, int]) -> np.ndarray:
    """U @ diag_rect(S) @ V.T at the given shape."""
    d, n = shape
    sigma = np.zeros((d, n))
    k = factors.S.shape[0]
    sigma[:k, :k][np.diag_indices(k)] = factors.S
    return factors.U @ sigma @ factors.V.T


def numerical_rank(s: np.ndarray, cutoff: float = RANK_CUTOFF) -> int:
    """Count of singular values above cutoff * s_max."""
    s = np.asarray(s, dtype=np.float64)
    if s.size == 0 or s[0] <= 0.0:
        return 0
    return int(np.sum(s > cutoff * s[0]))


@dataclass
class ReducedAnchors:
    """First k scaled left singular directions of a normalized anchor bank."""

    weights: np.ndarray
    k: int
    source_digest: int
    singular_values: np.ndarray

    def __post_init__(self):
        self.weights = as_matrix(self.weights)
        if self.weights.shape[1] != self.k:
            raise DescriptorError(f"weights have {self.weights.shape[1]} columns, k={self.k}")

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    def digest(self) -> int:
        return checksum(self.weights)


def reduce_anchors(selected: AnchorBank, k: int, clip_to_rank: bool = False) -> ReducedAnchors:
    """Compress a selected bank to its top-k scaled left singular vectors.

    `clip_to_rank` additionally drops trailing directions below the numerical
    rank cutoff; the default keeps exactly k columns even when some are
    numerically null (a warning is emitted in that case).
    """
    selected = selected.normalize()
    limit = min(selected.dim, selected.count)
    if not 1 <= k <= limit:
        raise KOutOfRangeError(f"k={k} outside [1, {limit}]")
    factors = svd(selected.weights)
    rank = numerical_rank(factors.S)
    if k > rank:
        if clip_to_rank and rank >= 1:
            k = rank
        else:
            warnings.warn(
                f"k={k} exceeds numerical rank {rank}; trailing directions are null",
                RuntimeWarning,
                stacklevel=2,
            )
    weights = factors.U[:, :k] * factors.S[:k]
    return ReducedAnchors(
        weights.astype(np.float32),
        k,
        checksum(selected.weights),
        factors.S.copy(),
    )


def reduced_rd(reduced: ReducedAnchors, emb: EmbeddingSet) -> RelationDescriptorSet:
    """Descriptors against reduced anchors: row i = weights^T (z_i / ||z_i||).

    Entries are a rotation of the full cosine profile, so they are not
    bounded by 1.
    """
    if reduced.dim != emb.dim:
        raise DimensionMismatchError(
            f"reduced dimension {reduced.dim} != embedding dimension {emb.dim}"
        )
    z = unit_rows(emb.features)
    values = (z @ reduced.weights.astype(np.float64)).astype(np.float32)
    return RelationDescriptorSet(values, DescriptorKind.SVD_REDUCED, reduced.digest())


@dataclass
class IsometryReport:
    max_rel_error: float
    mean_rel_error: float
    pairs_evaluated: int
    pairs_skipped: int


def isometry_report(
    selected: AnchorBank, reduced: ReducedAnchors, emb: EmbeddingSet
) -> IsometryReport:
    """Relative pairwise-distance error between full and reduced descriptors.

    Pairs whose full-descriptor distance is exactly zero (identical
    embeddings) are skipped and counted instead of dividing by zero.
    """
    selected = selected.normalize()
    if reduced.source_digest != checksum(selected.weights):
        raise AnchorMismatchError("reduced anchors were not produced from this bank")
    full = compute_rd(selected, emb)
    red = reduced_rd(reduced, emb)
    df = euclidean_distance_matrix(full.values, full.values)
    dr = euclidean_distance_matrix(red.values, red.values)
    iu = np.triu_indices(len(emb), k=1)
    base = df[iu]
    other = dr[iu]
    nonzero = base > 0.0
    skipped = int(np.sum(~nonzero))
    rel = np.abs(other[nonzero] - base[nonzero]) / base[nonzero]
    if rel.size == 0:
        return IsometryReport(0.0, 0.0, 0, skipped)
    return IsometryReport(float(np.max(rel)), float(np.mean(rel)), int(rel.size), skipped)


def store_reduced(reduced: ReducedAnchors, path: str | os.PathLike) -> None:
    store_matrix(reduced.weights, path)
    values = ",".join(repr(float(s)) for s in reduced.singular_values)
    with open(str(path) + ".meta", "w", encoding="utf-8") as fh:
        fh.write(f"k={reduced.k}\n")
        fh.write(f"source_digest={reduced.source_digest:016x}\n")
        fh.write(f"singular_values={values}\n")


def load_reduced(path: str | os.PathLike) -> ReducedAnchors:
    weights = load_matrix(path)
    meta: dict[str, str] = {}
    with open(str(path) + ".meta", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                key, _, value = line.partition("=")
                meta[key] = value
    try:
        k = int(meta["k"])
        source_digest = int(meta["source_digest"], 16)
        singular_values = np.array(
            [float(x) for x in meta["singular_values"].split(",") if x], dtype=np.float64
        )
    except (KeyError, ValueError) as exc:
        raise DescriptorError(f"{path}.meta: missing or invalid reduced-anchor metadata") from exc
    return ReducedAnchors(weights, k, source_digest, singular_values)
