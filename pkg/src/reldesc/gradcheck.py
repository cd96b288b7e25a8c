"""Central finite-difference checks for the analytic gradients.

The relative error of a gradient is reported in the max norm:
max|analytic - numeric| / max|numeric|. For the L1 penalty, candidate
weight matrices are screened so that no entry of W^T W - I sits within
1e-3 of the kink, where the subgradient is not unique.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import EmbeddingSet, LabelTable
from .rng import GaussianStream
from .training import ce_cosine_grad, ce_cosine_loss, orl_grad, orl_loss

FD_STEP = 1e-4
KINK_MARGIN = 1e-3


def central_difference(loss_fn, w: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    """Entrywise central finite difference of a scalar loss at w (float64)."""
    w = np.asarray(w, dtype=np.float64)
    grad = np.zeros_like(w)
    it = np.nditer(w, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        wp = w.copy()
        wp[idx] += h
        wm = w.copy()
        wm[idx] -= h
        grad[idx] = (loss_fn(wp) - loss_fn(wm)) / (2.0 * h)
    return grad


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = float(np.max(np.abs(numeric)))
    if scale == 0.0:
        return float(np.max(np.abs(analytic - numeric)))
    return float(np.max(np.abs(analytic - numeric))) / scale


def away_from_kink(w: np.ndarray, margin: float = KINK_MARGIN) -> bool:
    """True when every entry of W^T W - I is at least `margin` from zero."""
    g = w.T @ w - np.eye(w.shape[1])
    return bool(np.min(np.abs(g)) > margin)


def orl_instance(seed: int, d: int = 8, c: int = 4) -> np.ndarray:
    """Seeded W scaled away from orthonormality, screened off the L1 kink.

    Seeds are probed in a fixed order until the screening predicate holds,
    so the result is deterministic per input seed.
    """
    for attempt in range(1000):
        stream = GaussianStream(seed + 1000 * attempt)
        w = np.array(stream.take(d * c)).reshape(d, c) * 1.5
        if away_from_kink(w):
            return w
    raise RuntimeError("could not find a kink-free instance")


def ce_instance(seed: int, d: int = 6, c: int = 5, n: int = 20):
    """Seeded (W, embeddings) pair for the classifier gradient check."""
    stream = GaussianStream(seed)
    w = np.array(stream.take(d * c)).reshape(d, c)
    features = np.array(stream.take(n * d)).reshape(n, d).astype(np.float32)
    labels = [i % c for i in range(n)]
    table = LabelTable([f"s{i:03d}" for i in range(n)], labels)
    return w, EmbeddingSet(features, table)


@dataclass
class GradcheckResult:
    orl_error: float
    ce_error: float


def run_gradcheck(seed: int, temperature: float = 16.0) -> GradcheckResult:
    w = orl_instance(seed)
    orl_err = max_relative_error(orl_grad(w), central_difference(orl_loss, w))

    w2, emb = ce_instance(seed)
    numeric = central_difference(lambda m: ce_cosine_loss(m, emb, temperature), w2)
    ce_err = max_relative_error(ce_cosine_grad(w2, emb, temperature), numeric)
    return GradcheckResult(orl_err, ce_err)
