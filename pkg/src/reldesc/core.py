"""Matrix storage, normalization primitives, and the container types.

Matrices are plain 2-D numpy arrays (float32 or float64). Files use the RDM1
binary layout:

    bytes 0..3   magic "RDM1" (0x52 0x44 0x4D 0x31)
    bytes 4..7   rows, u32 little-endian
    bytes 8..11  cols, u32 little-endian
    byte  12     dtype code: 0 = float32, 1 = float64
    bytes 13..   row-major little-endian payload

Storage dtype is float32 by convention; reductions and inner products
elsewhere in the package accumulate in float64. Label files are UTF-8 text,
one `sample_id,label,view,covariate` line per embedding row (view and
covariate may be empty).
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadMagicError,
    DescriptorError,
    LengthMismatchError,
    NonFiniteError,
    ShapeMismatchError,
    ZeroColumnError,
    ZeroRowError,
)

RDM1_MAGIC = b"RDM1"

_DTYPE_CODES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_CODE_FOR_KIND = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


def fnv1a(data: bytes, state: int = FNV_OFFSET) -> int:
    """64-bit FNV-1a over `data`, continuing from `state`."""
    for byte in data:
        state = ((state ^ byte) * FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return state


def _header_bytes(m: np.ndarray) -> bytes:
    code = _CODE_FOR_KIND[np.dtype(m.dtype)]
    return RDM1_MAGIC + struct.pack("<IIB", m.shape[0], m.shape[1], code)


def matrix_bytes(m: np.ndarray) -> bytes:
    """Canonical RDM1 serialization (header + row-major LE payload)."""
    m = as_matrix(m)
    payload = np.ascontiguousarray(m).astype(m.dtype.newbyteorder("<")).tobytes()
    return _header_bytes(m) + payload


def checksum(m: np.ndarray) -> int:
    """FNV-1a 64-bit digest over the canonical serialization of `m`."""
    return fnv1a(matrix_bytes(m))


def as_matrix(m: np.ndarray) -> np.ndarray:
    """Validate that `m` is a finite 2-D float32/float64 array."""
    m = np.asarray(m)
    if m.ndim != 2:
        raise ShapeMismatchError(f"expected a 2-D matrix, got ndim={m.ndim}")
    if np.dtype(m.dtype) not in _CODE_FOR_KIND:
        raise DescriptorError(f"unsupported dtype {m.dtype}; use float32 or float64")
    if m.size and not np.all(np.isfinite(m)):
        raise NonFiniteError("matrix contains NaN or Inf entries")
    return m


def store_matrix(m: np.ndarray, path: str | os.PathLike) -> None:
    """Write `m` to `path` in RDM1 format."""
    data = matrix_bytes(m)
    with open(path, "wb") as fh:
        fh.write(data)


def load_matrix(path: str | os.PathLike) -> np.ndarray:
    """Read an RDM1 file back into a numpy array.

    Raises FileNotFoundError, BadMagicError, ShapeMismatchError, or
    NonFiniteError depending on what is wrong with the file.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 13 or blob[:4] != RDM1_MAGIC:
        raise BadMagicError(f"{path}: not an RDM1 matrix file")
    rows, cols, code = struct.unpack("<IIB", blob[4:13])
    if code not in _DTYPE_CODES:
        raise BadMagicError(f"{path}: unknown dtype code {code}")
    dtype = _DTYPE_CODES[code]
    expected = rows * cols * dtype.itemsize
    payload = blob[13:]
    if len(payload) != expected:
        raise ShapeMismatchError(
            f"{path}: payload is {len(payload)} bytes, expected {expected} "
            f"for {rows}x{cols} {dtype.name}"
        )
    m = np.frombuffer(payload, dtype=dtype).reshape(rows, cols)
    m = m.astype(dtype.newbyteorder("="))
    if m.size and not np.all(np.isfinite(m)):
        raise NonFiniteError(f"{path}: payload contains NaN or Inf entries")
    return m


def normalize_columns(m: np.ndarray) -> np.ndarray:
    """Return a copy of `m` with unit-L2 columns. Input is not modified."""
    m = as_matrix(m)
    norms = np.sqrt(np.sum(m.astype(np.float64) ** 2, axis=0))
    if np.any(norms <= 1e-12):
        bad = int(np.argmax(norms <= 1e-12))
        raise ZeroColumnError(f"column {bad} has zero norm")
    out = m.astype(np.float64) / norms
    return out.astype(m.dtype)


def normalize_rows(m: np.ndarray) -> np.ndarray:
    """Row-wise analogue of normalize_columns."""
    m = as_matrix(m)
    norms = np.sqrt(np.sum(m.astype(np.float64) ** 2, axis=1))
    if np.any(norms <= 1e-12):
        bad = int(np.argmax(norms <= 1e-12))
        raise ZeroRowError(f"row {bad} has zero norm")
    out = m.astype(np.float64) / norms[:, None]
    return out.astype(m.dtype)


@dataclass(frozen=True)
class LabelRow:
    sample_id: str
    label: int
    view: int | None = None
    covariate: str | None = None


@dataclass
class LabelTable:
    """Per-sample metadata: unique sample_id, integer identity, optional tags."""

    sample_ids: list[str]
    labels: list[int]
    views: list[int | None] = field(default_factory=list)
    covariates: list[str | None] = field(default_factory=list)

    def __post_init__(self):
        n = len(self.sample_ids)
        if not self.views:
            self.views = [None] * n
        if not self.covariates:
            self.covariates = [None] * n
        if not (len(self.labels) == len(self.views) == len(self.covariates) == n):
            raise LengthMismatchError("label table columns have unequal lengths")
        if len(set(self.sample_ids)) != n:
            raise DescriptorError("sample_id values must be unique")

    def __len__(self) -> int:
        return len(self.sample_ids)

    def row(self, i: int) -> LabelRow:
        return LabelRow(self.sample_ids[i], self.labels[i], self.views[i], self.covariates[i])

    def label_array(self) -> np.ndarray:
        return np.asarray(self.labels, dtype=np.int64)

    def render(self) -> str:
        lines = []
        for i in range(len(self)):
            sid = self.sample_ids[i]
            if "," in sid:
                raise DescriptorError(f"sample_id {sid!r} must not contain commas")
            cov = self.covariates[i] or ""
            if "," in cov:
                raise DescriptorError(f"covariate {cov!r} must not contain commas")
            view = "" if self.views[i] is None else str(self.views[i])
            lines.append(f"{sid},{self.labels[i]},{view},{cov}")
        return "\n".join(lines) + ("\n" if lines else "")


def store_labels(table: LabelTable, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(table.render())


def load_labels(path: str | os.PathLike) -> LabelTable:
    sample_ids, labels, views, covariates = [], [], [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise DescriptorError(f"{path}:{lineno}: expected 4 comma-separated fields")
            sid, label, view, cov = parts
            try:
                labels.append(int(label))
            except ValueError:
                raise DescriptorError(f"{path}:{lineno}: label {label!r} is not an integer")
            sample_ids.append(sid)
            views.append(int(view) if view else None)
            covariates.append(cov if cov else None)
    return LabelTable(sample_ids, labels, views, covariates)


@dataclass
class EmbeddingSet:
    """Feature matrix (n_samples x d) with one label row per feature row."""

    features: np.ndarray
    labels: LabelTable

    def __post_init__(self):
        self.features = as_matrix(self.features)
        if self.features.shape[0] != len(self.labels):
            raise LengthMismatchError(
                f"{self.features.shape[0]} feature rows vs {len(self.labels)} label rows"
            )
        norms = np.sqrt(np.sum(self.features.astype(np.float64) ** 2, axis=1))
        if self.features.shape[0] and np.any(norms <= 1e-12):
            bad = int(np.argmax(norms <= 1e-12))
            raise ZeroRowError(f"embedding row {bad} has zero norm")

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def __len__(self) -> int:
        return self.features.shape[0]


@dataclass
class AnchorBank:
    """Anchor matrix (d x C); one anchor vector per column.

    `normalized` records whether every column already has unit L2 norm.
    """

    weights: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        self.weights = as_matrix(self.weights)
        if self.normalized:
            norms = np.sqrt(np.sum(self.weights.astype(np.float64) ** 2, axis=0))
            if np.any(np.abs(norms - 1.0) > 1e-6):
                raise ZeroColumnError("normalized flag set but columns are not unit norm")

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    @property
    def count(self) -> int:
        return self.weights.shape[1]

    def normalize(self) -> "AnchorBank":
        """Return a column-normalized copy (self when already normalized)."""
        if self.normalized:
            return self
        return AnchorBank(normalize_columns(self.weights), normalized=True)

    def digest(self) -> int:
        return checksum(self.weights)
