"""Deterministic synthetic retrieval benchmark.

Identities live on the unit sphere of the first `dim` coordinates; samples
perturb an identity prototype with a per-view offset and isotropic noise,
then renormalize. Test samples additionally pick up strong random values in
`noise_dims` trailing coordinates that training identities barely touch,
modeling covariates never seen during training. Raw feature distances suffer
from those coordinates; descriptors projected onto train-derived anchors
largely ignore them.

Everything is drawn from one sequential Gaussian stream in a fixed order
(train prototypes, test prototypes, view offsets, then per-sample noise,
train split first), so a config maps to one exact dataset.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields

import numpy as np

from .core import EmbeddingSet, LabelTable, fnv1a, matrix_bytes
from .errors import ConfigError
from .rng import GaussianStream

TRAIN_TRAILING_SCALE = 0.01


@dataclass
class SynthConfig:
    seed: int = 11
    dim: int = 64
    noise_dims: int = 16
    n_train_ids: int = 128
    n_test_ids: int = 32
    samples_per_id: int = 8
    views: int = 4
    view_strength: float = 0.3
    noise_sigma: float = 0.2
    shift_strength: float = 0.5

    def __post_init__(self):
        counts = (self.n_train_ids, self.n_test_ids, self.samples_per_id, self.views)
        if any(c < 1 for c in counts):
            raise ConfigError("all counts must be >= 1")
        if self.dim < 2:
            raise ConfigError("dim must be >= 2")
        if self.noise_dims < 0:
            raise ConfigError("noise_dims must be >= 0")
        for name in ("view_strength", "noise_sigma", "shift_strength"):
            if getattr(self, name) < 0.0:
                raise ConfigError(f"{name} must be >= 0")

    @property
    def total_dim(self) -> int:
        return self.dim + self.noise_dims


def _unit_vector(stream: GaussianStream, dim: int) -> np.ndarray:
    v = np.array(stream.take(dim), dtype=np.float64)
    return v / np.sqrt(np.sum(v * v))


def _make_samples(
    stream: GaussianStream,
    cfg: SynthConfig,
    prototypes: np.ndarray,
    view_offsets: np.ndarray,
    labels: list[int],
    prefix: str,
    trailing_scale: float,
) -> EmbeddingSet:
    rows = []
    sample_ids, out_labels, views = [], [], []
    for ident, label in enumerate(labels):
        for s in range(cfg.samples_per_id):
            view = s % cfg.views
            head = prototypes[ident] + cfg.view_strength * view_offsets[view]
            head = head + cfg.noise_sigma * np.array(stream.take(cfg.dim))
            tail = trailing_scale * np.array(stream.take(cfg.noise_dims))
            z = np.concatenate([head, tail])
            z = z / np.sqrt(np.sum(z * z))
            rows.append(z)
            sample_ids.append(f"{prefix}-{label:04d}-{s:02d}")
            out_labels.append(label)
            views.append(view)
    features = np.vstack(rows).astype(np.float32)
    return EmbeddingSet(features, LabelTable(sample_ids, out_labels, views))


def _split(emb: EmbeddingSet, cfg: SynthConfig) -> tuple[EmbeddingSet, EmbeddingSet]:
    """Per identity, first half of the samples to the gallery, rest to probes."""
    half = cfg.samples_per_id // 2
    gallery_rows, probe_rows = [], []
    for i in range(len(emb)):
        within = i % cfg.samples_per_id
        (gallery_rows if within < half else probe_rows).append(i)

    def subset(rows: list[int]) -> EmbeddingSet:
        table = emb.labels
        return EmbeddingSet(
            emb.features[rows].copy(),
            LabelTable(
                [table.sample_ids[i] for i in rows],
                [table.labels[i] for i in rows],
                [table.views[i] for i in rows],
                [table.covariates[i] for i in rows],
            ),
        )

    return subset(gallery_rows), subset(probe_rows)


def generate_dataset(cfg: SynthConfig) -> tuple[EmbeddingSet, EmbeddingSet, EmbeddingSet]:
    """Build (train, gallery, probe) sets; train and test identities are disjoint."""
    stream = GaussianStream(cfg.seed)
    train_protos = np.vstack([_unit_vector(stream, cfg.dim) for _ in range(cfg.n_train_ids)])
    test_protos = np.vstack([_unit_vector(stream, cfg.dim) for _ in range(cfg.n_test_ids)])
    view_offsets = np.vstack([_unit_vector(stream, cfg.dim) for _ in range(cfg.views)])

    train_labels = list(range(cfg.n_train_ids))
    test_labels = list(range(cfg.n_train_ids, cfg.n_train_ids + cfg.n_test_ids))
    train = _make_samples(
        stream, cfg, train_protos, view_offsets, train_labels, "train", TRAIN_TRAILING_SCALE
    )
    test = _make_samples(
        stream, cfg, test_protos, view_offsets, test_labels, "test", cfg.shift_strength
    )
    gallery, probe = _split(test, cfg)
    return train, gallery, probe


def dataset_digest(*sets: EmbeddingSet) -> int:
    """FNV-1a over every feature matrix and label file, in argument order."""
    state = fnv1a(b"")
    for emb in sets:
        state = fnv1a(matrix_bytes(emb.features), state)
        state = fnv1a(emb.labels.render().encode("utf-8"), state)
    return state


def render_manifest(cfg: SynthConfig, digest: int) -> str:
    lines = [f"{f.name} = {getattr(cfg, f.name)!r}" for f in fields(cfg)]
    lines.append(f"digest = {digest:016x}")
    return "\n".join(lines) + "\n"


def store_manifest(cfg: SynthConfig, digest: int, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_manifest(cfg, digest))
