"""reldesc: relation descriptors for embedding retrieval.

Converts feature embeddings into cosine-similarity profiles against a bank
of anchor vectors, with diverse-anchor selection, lossless spectral
compression, an orthogonality regularizer for anchor training, and a
gallery/probe retrieval evaluation harness.
"""

from .core import (
    AnchorBank,
    EmbeddingSet,
    LabelTable,
    checksum,
    load_labels,
    load_matrix,
    normalize_columns,
    normalize_rows,
    store_labels,
    store_matrix,
)
from .descriptor import (
    DescriptorKind,
    RelationDescriptorSet,
    compute_rd,
    embedding_distance,
    rd_distance,
    rd_distance_matrix,
)
from .evaluation import EvalReport, Protocol, cmc, evaluate, mean_ap, mean_inp, rank_gallery
from .reduction import (
    ReducedAnchors,
    SvdFactors,
    isometry_report,
    reduce_anchors,
    reduced_rd,
    svd,
)
from .rng import GaussianStream, SplitMix64, gaussian_stream
from .selection import Selection, divergence_score, fas_select, gather, random_select
from .synth import SynthConfig, dataset_digest, generate_dataset
from .training import (
    TrainConfig,
    TrainHistory,
    ce_cosine_grad,
    ce_cosine_loss,
    orl_grad,
    orl_loss,
    train_anchor_bank,
)

__version__ = "0.1.0"

__all__ = [
    "AnchorBank",
    "DescriptorKind",
    "EmbeddingSet",
    "EvalReport",
    "GaussianStream",
    "LabelTable",
    "Protocol",
    "ReducedAnchors",
    "RelationDescriptorSet",
    "Selection",
    "SplitMix64",
    "SvdFactors",
    "SynthConfig",
    "TrainConfig",
    "TrainHistory",
    "ce_cosine_grad",
    "ce_cosine_loss",
    "checksum",
    "cmc",
    "compute_rd",
    "dataset_digest",
    "divergence_score",
    "embedding_distance",
    "evaluate",
    "fas_select",
    "gather",
    "gaussian_stream",
    "generate_dataset",
    "isometry_report",
    "load_labels",
    "load_matrix",
    "mean_ap",
    "mean_inp",
    "normalize_columns",
    "normalize_rows",
    "orl_grad",
    "orl_loss",
    "random_select",
    "rank_gallery",
    "rd_distance",
    "rd_distance_matrix",
    "reduce_anchors",
    "reduced_rd",
    "store_labels",
    "store_matrix",
    "svd",
    "train_anchor_bank",
]
