"""Label-proportion-preserving subsampling of a client dataset.

The per-label quotas come from largest-remainder apportionment: each observed
label gets floor(k * count / n) slots, and the leftover slots go to the labels
with the largest fractional remainders (ties broken toward the smaller label
index). Within a label, samples are chosen uniformly without replacement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datamodel import ClientDataset, ValidationError

DEFAULT_CORESET_K = 128


@dataclass(frozen=True)
class Coreset:
    client_id: str
    indices: np.ndarray  # sorted unique positions into the source dataset
    k: int


def apportion(counts: np.ndarray, k: int) -> np.ndarray:
    """Largest-remainder integer quotas for k slots over label counts.

    Assumes k <= sum(counts); with that, floor+remainder quotas never exceed
    a label's availability (k*count/n <= count), so no capacity handling is
    needed.
    """
    counts = np.asarray(counts, dtype=np.int64)
    n = int(counts.sum())
    if k > n:
        raise ValueError(f"k={k} exceeds total count {n}")
    ideal = k * counts / n
    quotas = np.floor(ideal).astype(np.int64)
    leftover = k - int(quotas.sum())
    if leftover > 0:
        remainders = ideal - quotas
        # stable sort on (-remainder) keeps the smaller label index first on ties
        order = np.argsort(-remainders, kind="stable")
        quotas[order[:leftover]] += 1
    return quotas


def build_coreset(ds: ClientDataset, k: int, seed: int = 0) -> Coreset:
    """Stratified subsample of at most k samples keeping label proportions."""
    if k < 1:
        raise ValidationError("coreset size k must be >= 1")
    n = ds.num_samples
    if k >= n:
        return Coreset(ds.client_id, np.arange(n, dtype=np.int64), k)

    counts = ds.label_counts()
    quotas = apportion(counts, k)
    rng = np.random.default_rng(seed)
    picked = []
    for label in np.flatnonzero(quotas):
        pool = np.flatnonzero(ds.labels == label)
        picked.append(rng.choice(pool, size=int(quotas[label]), replace=False))
    indices = np.sort(np.concatenate(picked))
    return Coreset(ds.client_id, indices.astype(np.int64), k)
