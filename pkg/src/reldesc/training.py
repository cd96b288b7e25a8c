"""Anchor-bank training: cosine-classifier cross-entropy plus an
orthogonality penalty that diversifies anchor columns.

The penalty is the entrywise L1 norm of (W^T W - I); its subgradient is
W(S + S^T) with S = sign(W^T W - I) and sign(0) = 0. The classifier logits
are temperature-scaled cosines between normalized embeddings and normalized
columns; the loss is applied to the raw (unconstrained) W, with
normalization happening inside the forward pass. Training is plain gradient
descent with momentum, fixed order, single thread, so identically seeded
runs are bit-identical.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .core import AnchorBank, EmbeddingSet, normalize_columns
from .descriptor import unit_rows
from .errors import ConfigError, LabelOutOfRangeError, NonFiniteError, ZeroColumnError
from .rng import GaussianStream


@dataclass
class TrainConfig:
    epochs: int = 200
    learning_rate: float = 0.05
    momentum: float = 0.9
    orl_coefficient: float = 1.0
    temperature: float = 16.0
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.learning_rate <= 0.0:
            raise ConfigError("learning_rate must be > 0")
        if self.temperature <= 0.0:
            raise ConfigError("temperature must be > 0")
        if self.orl_coefficient < 0.0:
            raise ConfigError("orl_coefficient must be >= 0")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError("momentum must be in [0, 1)")


@dataclass
class EpochRecord:
    epoch: int
    total: float
    ce: float
    orl: float
    mean_offdiag_cos: float


@dataclass
class TrainHistory:
    """Loss trajectory: `initial` is the state at epoch 0 (before any update),
    `epochs` holds one post-update record per completed epoch."""

    initial: EpochRecord
    epochs: list[EpochRecord] = field(default_factory=list)

    def to_csv(self) -> str:
        lines = ["epoch,total,ce,orl,mean_offdiag_cos"]
        for rec in [self.initial] + self.epochs:
            lines.append(
                f"{rec.epoch},{rec.total!r},{rec.ce!r},{rec.orl!r},{rec.mean_offdiag_cos!r}"
            )
        return "\n".join(lines) + "\n"


def store_history(history: TrainHistory, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(history.to_csv())


def _check_finite(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if not np.all(np.isfinite(w)):
        raise NonFiniteError("weight matrix contains NaN or Inf")
    return w


def orl_loss(w: np.ndarray) -> float:
    """Entrywise L1 norm of W^T W - I (raw W, no pre-normalization)."""
    w = _check_finite(w)
    g = w.T @ w - np.eye(w.shape[1])
    return float(np.sum(np.abs(g)))


def orl_grad(w: np.ndarray) -> np.ndarray:
    """Subgradient of orl_loss: W(S + S^T), S = sign(W^T W - I), sign(0) = 0."""
    w = _check_finite(w)
    s = np.sign(w.T @ w - np.eye(w.shape[1]))
    return w @ (s + s.T)


def _cosine_logits(w: np.ndarray, emb: EmbeddingSet, temperature: float):
    """Temperature-scaled cosines plus the intermediates the gradient needs."""
    w = _check_finite(w)
    norms = np.sqrt(np.sum(w * w, axis=0))
    if np.any(norms <= 1e-12):
        raise ZeroColumnError(f"weight column {int(np.argmax(norms <= 1e-12))} has zero norm")
    w_hat = w / norms
    z_hat = unit_rows(emb.features)
    cos = z_hat @ w_hat
    return z_hat, w_hat, norms, cos, temperature * cos


def _check_labels(labels: np.ndarray, c: int) -> None:
    if labels.size and (labels.min() < 0 or labels.max() >= c):
        raise LabelOutOfRangeError(f"labels must lie in [0, {c})")


def ce_cosine_loss(w: np.ndarray, emb: EmbeddingSet, temperature: float) -> float:
    """Mean cross-entropy of softmax(temperature * cosine) against the labels."""
    labels = emb.labels.label_array()
    _check_labels(labels, np.asarray(w).shape[1])
    _, _, _, _, logits = _cosine_logits(w, emb, temperature)
    shifted = logits - logits.max(axis=1, keepdims=True)
    logsumexp = np.log(np.sum(np.exp(shifted), axis=1)) + logits.max(axis=1)
    picked = logits[np.arange(len(emb)), labels]
    return float(np.mean(logsumexp - picked))


def ce_cosine_grad(w: np.ndarray, emb: EmbeddingSet, temperature: float) -> np.ndarray:
    """Analytic gradient of ce_cosine_loss with respect to raw W.

    Per column j the chain rule through both normalizations gives
    temperature * (p_ij - [j == y_i]) * (z_hat_i - (w_hat_j . z_hat_i) w_hat_j)
    / ||W_j||, averaged over samples.
    """
    labels = emb.labels.label_array()
    _check_labels(labels, np.asarray(w).shape[1])
    z_hat, w_hat, norms, cos, logits = _cosine_logits(w, emb, temperature)
    n = len(emb)
    shifted = logits - logits.max(axis=1, keepdims=True)
    expv = np.exp(shifted)
    probs = expv / expv.sum(axis=1, keepdims=True)
    delta = probs.copy()
    delta[np.arange(n), labels] -= 1.0
    coeff = delta * (temperature / n)
    # sum_i coeff_ij z_hat_i  and the cosine back-correction, per column
    lead = z_hat.T @ coeff
    corr = w_hat * np.sum(coeff * cos, axis=0)
    return (lead - corr) / norms


def mean_offdiag_cosine(w: np.ndarray) -> float:
    """Mean |cosine| over distinct column pairs."""
    w_hat = normalize_columns(np.asarray(w, dtype=np.float64))
    g = np.abs(w_hat.T @ w_hat)
    c = g.shape[0]
    if c < 2:
        return 0.0
    return float((np.sum(g) - np.trace(g)) / (c * (c - 1)))


def train_anchor_bank(
    emb: EmbeddingSet, c: int, cfg: TrainConfig
) -> tuple[AnchorBank, TrainHistory]:
    """Fit a d x c anchor bank to fixed embeddings.

    W starts as seeded Gaussian noise with columns normalized once; raw W is
    then free to move, and the returned bank is column-normalized at the end.
    """
    labels = emb.labels.label_array()
    _check_labels(labels, c)
    if np.unique(labels).size != c:
        raise LabelOutOfRangeError(f"labels must cover every class in [0, {c})")
    stream = GaussianStream(cfg.seed)
    d = emb.dim
    w = np.array(stream.take(d * c), dtype=np.float64).reshape(d, c)
    w = normalize_columns(w)

    def snapshot(epoch: int) -> EpochRecord:
        ce = ce_cosine_loss(w, emb, cfg.temperature)
        orl = orl_loss(w)
        return EpochRecord(
            epoch, ce + cfg.orl_coefficient * orl, ce, orl, mean_offdiag_cosine(w)
        )

    history = TrainHistory(initial=snapshot(0))
    velocity = np.zeros_like(w)
    for epoch in range(1, cfg.epochs + 1):
        grad = ce_cosine_grad(w, emb, cfg.temperature)
        if cfg.orl_coefficient != 0.0:
            grad = grad + cfg.orl_coefficient * orl_grad(w)
        # dampened momentum (gradient EMA): the L1 subgradient does not decay
        # near the optimum, and undampened accumulation would amplify it 1/(1-mu)
        velocity = cfg.momentum * velocity + (1.0 - cfg.momentum) * grad
        w = w - cfg.learning_rate * velocity
        history.epochs.append(snapshot(epoch))

    bank = AnchorBank(normalize_columns(w).astype(np.float32), normalized=True)
    return bank, history
