"""Gallery/probe retrieval evaluation: Rank-k (CMC), mAP, and mINP.

Candidates are ranked per probe by ascending distance with ties broken by
gallery index. Protocol exclusions (own sample_id, identical view) remove
gallery entries before ranking; probes left with no positive are skipped and
counted, not scored as zero. mINP is the re-identification variant: positives
count divided by the rank of the hardest (last retrieved) positive.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core import EmbeddingSet, LabelRow, LabelTable
from .descriptor import RelationDescriptorSet, euclidean_distance_matrix, rd_distance_matrix
from .errors import (
    AnchorMismatchError,
    ConfigError,
    DescriptorError,
    EmptyGalleryError,
    LengthMismatchError,
)


@dataclass
class Protocol:
    exclude_same_sample: bool = True
    exclude_same_view: bool = False
    ks: list[int] = field(default_factory=lambda: [1, 5, 10, 20])

    def __post_init__(self):
        if not self.ks or any(k < 1 for k in self.ks):
            raise ConfigError("ks must be nonempty with every rank >= 1")
        if sorted(self.ks) != list(self.ks):
            raise ConfigError("ks must be sorted ascending")


@dataclass
class EvalReport:
    rank_accuracies: dict[int, float]
    map_value: float
    minp_value: float
    evaluated_probes: int
    skipped_probes: int
    protocol: Protocol
    distance: str

    def to_json_dict(self) -> dict:
        return {
            "rank_accuracies": {str(k): v for k, v in self.rank_accuracies.items()},
            "map": self.map_value,
            "minp": self.minp_value,
            "evaluated_probes": self.evaluated_probes,
            "skipped_probes": self.skipped_probes,
            "protocol": {
                "exclude_same_sample": self.protocol.exclude_same_sample,
                "exclude_same_view": self.protocol.exclude_same_view,
                "ks": self.protocol.ks,
            },
            "distance": self.distance,
        }

    def render(self) -> str:
        lines = [f"{'metric':<12}{'value':>8}"]
        for k, v in self.rank_accuracies.items():
            lines.append(f"{'Rank-' + str(k):<12}{v:>8.2f}")
        lines.append(f"{'mAP':<12}{self.map_value:>8.2f}")
        lines.append(f"{'mINP':<12}{self.minp_value:>8.2f}")
        lines.append(
            f"({self.evaluated_probes} probes evaluated, {self.skipped_probes} skipped)"
        )
        return "\n".join(lines)


def rank_gallery(
    dist_row: np.ndarray,
    gallery_labels: LabelTable,
    probe_meta: LabelRow,
    protocol: Protocol,
) -> np.ndarray:
    """Valid gallery indices for one probe, sorted by ascending distance.

    Exclusions are applied first; ties keep ascending gallery index.
    """
    dist_row = np.asarray(dist_row, dtype=np.float64).ravel()
    if dist_row.shape[0] != len(gallery_labels):
        raise LengthMismatchError(
            f"{dist_row.shape[0]} distances vs {len(gallery_labels)} gallery labels"
        )
    keep = np.ones(dist_row.shape[0], dtype=bool)
    if protocol.exclude_same_sample:
        for j, sid in enumerate(gallery_labels.sample_ids):
            if sid == probe_meta.sample_id:
                keep[j] = False
    if protocol.exclude_same_view and probe_meta.view is not None:
        for j, view in enumerate(gallery_labels.views):
            if view == probe_meta.view:
                keep[j] = False
    valid = np.flatnonzero(keep)
    order = np.argsort(dist_row[valid], kind="stable")
    return valid[order]


def _matches(
    rankings: list[np.ndarray], positives: list[set[int]]
) -> list[np.ndarray]:
    """Boolean hit arrays in ranked order, one per probe."""
    out = []
    for ranking, pos in zip(rankings, positives):
        out.append(np.array([idx in pos for idx in ranking], dtype=bool))
    return out


def cmc(rankings: list[np.ndarray], positives: list[set[int]], ks: list[int]) -> dict[int, float]:
    """Rank-k accuracy (%): fraction of evaluated probes with a hit in the top k."""
    matches = _matches(rankings, positives)
    hits = {k: 0 for k in ks}
    evaluated = 0
    for m in matches:
        if not m.any():
            continue
        evaluated += 1
        first = int(np.argmax(m))  # position of the best-ranked positive
        for k in ks:
            if first < k:
                hits[k] += 1
    if evaluated == 0:
        return {k: 0.0 for k in ks}
    return {k: 100.0 * hits[k] / evaluated for k in ks}


def mean_ap(rankings: list[np.ndarray], positives: list[set[int]]) -> float:
    """Mean average precision (%) over evaluated probes."""
    matches = _matches(rankings, positives)
    aps = []
    for m in matches:
        if not m.any():
            continue
        ranks = np.flatnonzero(m) + 1  # 1-indexed hit positions
        precisions = np.arange(1, ranks.size + 1, dtype=np.float64) / ranks
        aps.append(float(np.mean(precisions)))
    if not aps:
        return 0.0
    return 100.0 * float(np.mean(aps))


def mean_inp(rankings: list[np.ndarray], positives: list[set[int]]) -> float:
    """Mean inverse negative penalty (%): positives count over hardest-hit rank."""
    matches = _matches(rankings, positives)
    inps = []
    for m in matches:
        if not m.any():
            continue
        hardest = int(np.flatnonzero(m)[-1]) + 1
        inps.append(float(np.sum(m)) / hardest)
    if not inps:
        return 0.0
    return 100.0 * float(np.mean(inps))


def _distance_matrix(probe, gallery, threads: int):
    if isinstance(probe, RelationDescriptorSet) != isinstance(gallery, RelationDescriptorSet):
        raise DescriptorError("probe and gallery must be the same kind of set")
    if isinstance(probe, RelationDescriptorSet):
        if probe.kind is not gallery.kind:
            raise AnchorMismatchError(
                f"descriptor kinds differ: {probe.kind.value} vs {gallery.kind.value}"
            )
        return rd_distance_matrix(probe, gallery, threads=threads), "descriptor"
    return (
        euclidean_distance_matrix(probe.features, gallery.features, threads=threads),
        "embedding",
    )


def evaluate(
    probe: EmbeddingSet | RelationDescriptorSet,
    gallery: EmbeddingSet | RelationDescriptorSet,
    protocol: Protocol | None = None,
    *,
    probe_labels: LabelTable | None = None,
    gallery_labels: LabelTable | None = None,
    threads: int = 1,
) -> EvalReport:
    """Full retrieval evaluation of a probe set against a gallery set.

    Embedding sets carry their own labels; descriptor sets need the label
    tables passed explicitly. Distances follow the set kind: Euclidean over
    raw features for embeddings, Euclidean over descriptor profiles otherwise.
    """
    protocol = protocol or Protocol()
    if isinstance(probe, EmbeddingSet):
        probe_labels = probe.labels
    if isinstance(gallery, EmbeddingSet):
        gallery_labels = gallery.labels
    if probe_labels is None or gallery_labels is None:
        raise DescriptorError("descriptor evaluation needs probe_labels and gallery_labels")
    if len(gallery_labels) == 0:
        raise EmptyGalleryError("gallery is empty")
    if len(probe) != len(probe_labels) or len(gallery) != len(gallery_labels):
        raise LengthMismatchError("label tables do not match set sizes")

    dist, distance_kind = _distance_matrix(probe, gallery, threads)
    g_labels = gallery_labels.label_array()
    rankings: list[np.ndarray] = []
    positives: list[set[int]] = []
    skipped = 0
    for i in range(len(probe_labels)):
        meta = probe_labels.row(i)
        ranking = rank_gallery(dist[i], gallery_labels, meta, protocol)
        pos = {int(j) for j in ranking if g_labels[j] == meta.label}
        if not pos:
            skipped += 1
            continue
        rankings.append(ranking)
        positives.append(pos)

    report = EvalReport(
        rank_accuracies=cmc(rankings, positives, protocol.ks),
        map_value=mean_ap(rankings, positives),
        minp_value=mean_inp(rankings, positives),
        evaluated_probes=len(rankings),
        skipped_probes=skipped,
        protocol=protocol,
        distance=distance_kind,
    )
    return report


def report_to_json(report: EvalReport) -> str:
    return json.dumps(report.to_json_dict(), indent=2, sort_keys=True) + "\n"
