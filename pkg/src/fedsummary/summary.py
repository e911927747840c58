"""Per-client distribution summaries.

Three summaries are supported:

* encoder summary: coreset -> embed -> per-class element-wise mean, plus the
  coreset label distribution, flattened to a single vector of length C*H + C
  with layout [mean(class 0) ... mean(class C-1), label_dist].
* label summary: normalized label histogram over the full dataset.
* conditional summary: per-(class, dimension) equal-width feature histograms
  over the full dataset, row-normalized, plus the label distribution.

Mean blocks / histogram rows for classes absent from a client are all-zero so
every client's summary lives in the same fixed vector space.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coreset import DEFAULT_CORESET_K, build_coreset
from .datamodel import EMBEDDED, RAW, ClientDataset, ValidationError
from .embedder import IDENTITY, PRECOMPUTED, EmbeddingError, EmbeddingProvider

ENCODER = "encoder"
LABEL = "label"
CONDITIONAL = "conditional"

DEFAULT_BINS = 8
DEFAULT_RANGE = (0.0, 1.0)


@dataclass(frozen=True)
class DistributionSummary:
    """Flat encoder summary vector of length C*H + C."""

    client_id: str
    num_classes: int
    embed_dim: int
    values: np.ndarray  # length C*H + C

    def __post_init__(self):
        expected = self.num_classes * self.embed_dim + self.num_classes
        if self.values.shape != (expected,):
            raise ValidationError(
                f"summary length {self.values.shape} != C*H+C = {expected}"
            )

    @property
    def label_dist(self) -> np.ndarray:
        return self.values[self.num_classes * self.embed_dim :]

    def mean_block(self, label: int) -> np.ndarray:
        h = self.embed_dim
        return self.values[label * h : (label + 1) * h]


@dataclass(frozen=True)
class HistogramSummary:
    """Baseline label-only or conditional histogram summary."""

    client_id: str
    kind: str  # LABEL or CONDITIONAL
    num_classes: int
    label_dist: np.ndarray  # length C
    feature_dim: int = 0
    bins: int = 0
    lo: float = 0.0
    hi: float = 1.0
    # only classes present in the dataset; each value is (feature_dim, bins),
    # rows normalized to 1. Absent classes are implicitly all-zero.
    class_hists: dict[int, np.ndarray] = field(default_factory=dict)

    def hist_for(self, label: int) -> np.ndarray:
        h = self.class_hists.get(label)
        if h is None:
            return np.zeros((self.feature_dim, self.bins))
        return h

    def num_elements(self) -> int:
        if self.kind == LABEL:
            return self.num_classes
        return self.num_classes * self.feature_dim * self.bins + self.num_classes

    def flatten(self) -> np.ndarray:
        """Dense vector form (conditional histograms can be very large)."""
        if self.kind == LABEL:
            return self.label_dist
        blocks = [self.hist_for(c).ravel() for c in range(self.num_classes)]
        blocks.append(self.label_dist)
        return np.concatenate(blocks)


def encoder_summary(
    ds: ClientDataset,
    coreset_k: int = DEFAULT_CORESET_K,
    provider: EmbeddingProvider | None = None,
    seed: int = 0,
) -> DistributionSummary:
    """Coreset -> embed -> per-class mean + label distribution."""
    core = build_coreset(ds, coreset_k, seed=seed)
    features = ds.features[core.indices]
    labels = ds.labels[core.indices]

    if ds.kind == EMBEDDED:
        if provider is not None and provider.name not in (IDENTITY, PRECOMPUTED):
            raise EmbeddingError(
                "dataset is already embedded; use the identity or precomputed provider"
            )
        embeddings = features
    else:
        if provider is None:
            raise ValidationError("raw dataset requires an embedding provider")
        embeddings = provider.embed(features)

    c = ds.num_classes
    h = embeddings.shape[1]
    means = np.zeros((c, h), dtype=np.float64)
    counts = np.bincount(labels, minlength=c)
    for label in np.flatnonzero(counts):
        means[label] = embeddings[labels == label].mean(axis=0)
    label_dist = counts / len(labels)
    values = np.concatenate([means.ravel(), label_dist])
    return DistributionSummary(ds.client_id, c, h, values)


def label_summary(ds: ClientDataset) -> HistogramSummary:
    """P(y) baseline: label counts / n over the full dataset."""
    dist = ds.label_counts() / ds.num_samples
    return HistogramSummary(ds.client_id, LABEL, ds.num_classes, dist)


def conditional_summary(
    ds: ClientDataset,
    bins: int = DEFAULT_BINS,
    lo: float = DEFAULT_RANGE[0],
    hi: float = DEFAULT_RANGE[1],
) -> HistogramSummary:
    """P(X|y) baseline: per-(class, dimension) equal-width histograms.

    Values outside [lo, hi] clamp to the edge bins; a value exactly at hi
    falls in the last bin.
    """
    if ds.kind != RAW:
        raise ValidationError("conditional summary requires raw features")
    if bins < 2:
        raise ValidationError("bins must be >= 2")
    if not hi > lo:
        raise ValidationError("need hi > lo")

    d = ds.feature_dim
    width = (hi - lo) / bins
    counts = ds.label_counts()
    class_hists: dict[int, np.ndarray] = {}
    col_offsets = np.arange(d, dtype=np.int64) * bins
    for label in np.flatnonzero(counts):
        vals = ds.features[ds.labels == label]
        idx = np.clip(((vals - lo) / width).astype(np.int64), 0, bins - 1)
        flat = np.bincount((idx + col_offsets).ravel(), minlength=d * bins)
        hist = flat.reshape(d, bins) / len(vals)
        class_hists[int(label)] = hist

    dist = counts / ds.num_samples
    return HistogramSummary(
        ds.client_id, CONDITIONAL, ds.num_classes, dist,
        feature_dim=d, bins=bins, lo=lo, hi=hi, class_hists=class_hists,
    )
