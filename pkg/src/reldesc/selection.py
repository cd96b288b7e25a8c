"""Diverse anchor selection.

The greedy farthest-anchor rule picks the column with the largest summed
Euclidean distance to all others first, then repeatedly takes the unselected
column farthest from the barycenter (arithmetic mean) of everything selected
so far. Geometry lives on the unit sphere: distances are always computed on
column-normalized weights, and ties break toward the smallest column index so
the output is deterministic.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import AnchorBank
from .errors import (
    DescriptorError,
    IndexOutOfRangeError,
    NOutOfRangeError,
    TooFewIndicesError,
)
from .rng import SplitMix64


class SelectionMethod(Enum):
    FAS = "fas"
    RANDOM = "random"


@dataclass
class Selection:
    """Ordered anchor column indices with a diversity diagnostic."""

    indices: list[int]
    method: SelectionMethod
    seed: int | None
    divergence: float

    def __post_init__(self):
        if len(set(self.indices)) != len(self.indices):
            raise DescriptorError("selection indices must be unique")

    def __len__(self) -> int:
        return len(self.indices)


def _check_n(n: int, count: int) -> None:
    if not 1 <= n <= count:
        raise NOutOfRangeError(f"n={n} outside [1, {count}]")


def fas_select(bank: AnchorBank, n: int) -> Selection:
    """Greedy farthest-anchor selection of `n` columns."""
    _check_n(n, bank.count)
    w = bank.normalize().weights.astype(np.float64)

    # summed pairwise distances pick the seed column
    sq = np.sum(w * w, axis=0)
    gram = w.T @ w
    pair = np.sqrt(np.maximum(sq[:, None] + sq[None, :] - 2.0 * gram, 0.0))
    np.fill_diagonal(pair, 0.0)
    first = int(np.argmax(pair.sum(axis=1)))

    selected = [first]
    remaining = np.ones(bank.count, dtype=bool)
    remaining[first] = False
    for _ in range(1, n):
        barycenter = w[:, selected].mean(axis=1)
        diff = w - barycenter[:, None]
        dist = np.sqrt(np.sum(diff * diff, axis=0))
        dist[~remaining] = -np.inf
        pick = int(np.argmax(dist))
        selected.append(pick)
        remaining[pick] = False

    divergence = _mean_pairwise_distance(w[:, selected]) if n >= 2 else 0.0
    return Selection(selected, SelectionMethod.FAS, None, divergence)


def random_select(bank: AnchorBank, n: int, seed: int) -> Selection:
    """Uniform sample of `n` distinct columns via a partial Fisher-Yates shuffle."""
    _check_n(n, bank.count)
    rng = SplitMix64(seed)
    pool = list(range(bank.count))
    for i in range(n):
        j = i + rng.next_below(bank.count - i)
        pool[i], pool[j] = pool[j], pool[i]
    indices = pool[:n]
    w = bank.normalize().weights.astype(np.float64)
    divergence = _mean_pairwise_distance(w[:, indices]) if n >= 2 else 0.0
    return Selection(indices, SelectionMethod.RANDOM, seed, divergence)


def _mean_pairwise_distance(cols: np.ndarray) -> float:
    """Mean Euclidean distance over unordered column pairs."""
    k = cols.shape[1]
    sq = np.sum(cols * cols, axis=0)
    gram = cols.T @ cols
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * gram, 0.0)
    iu = np.triu_indices(k, k=1)
    return float(np.mean(np.sqrt(d2[iu])))


def divergence_score(bank: AnchorBank, indices: list[int]) -> float:
    """Mean pairwise distance among the selected (normalized) columns."""
    if len(indices) < 2:
        raise TooFewIndicesError("divergence needs at least two indices")
    _check_indices(indices, bank.count)
    w = bank.normalize().weights.astype(np.float64)
    return _mean_pairwise_distance(w[:, indices])


def _check_indices(indices: list[int], count: int) -> None:
    for idx in indices:
        if not 0 <= idx < count:
            raise IndexOutOfRangeError(f"index {idx} outside [0, {count})")


def gather(bank: AnchorBank, sel: Selection) -> AnchorBank:
    """Extract the selected columns, in selection order."""
    _check_indices(sel.indices, bank.count)
    return AnchorBank(bank.weights[:, sel.indices].copy(), normalized=bank.normalized)


def store_selection(sel: Selection, path: str | os.PathLike) -> None:
    doc = {
        "method": sel.method.value,
        "n": len(sel.indices),
        "seed": sel.seed,
        "indices": sel.indices,
        "divergence": sel.divergence,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_selection(path: str | os.PathLike) -> Selection:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    try:
        return Selection(
            indices=[int(i) for i in doc["indices"]],
            method=SelectionMethod(doc["method"]),
            seed=doc.get("seed"),
            divergence=float(doc["divergence"]),
        )
    except (KeyError, ValueError) as exc:
        raise DescriptorError(f"{path}: invalid selection document") from exc
