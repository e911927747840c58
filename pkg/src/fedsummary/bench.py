"""Overhead benchmark: per-client summary time, summary size, clustering time.

The harness streams clients from a synthetic population, times each summary
method per client with a monotonic clock, measures one serialized summary's
byte size, then times one clustering pass per method (K-means for the encoder
summary, DBSCAN for the baselines). Any phase may be cut off by its time
budget and is then marked in the report; absolute numbers are hardware-bound,
so what the report is meant to show is the cost ordering and the size ratios.

Timed sections run single-threaded by default. With threads > 1 per-client
summary times are still measured around each client's own computation; the
report additionally carries the total wall time of the whole run.
"""

from __future__ import annotations

import platform
import time
from dataclasses import dataclass, field

import numpy as np

from .clustering import ClusterModel, dbscan_from_dists, kmeans
from .datamodel import PopulationModel, PopulationSpec, ValidationError
from .embedder import RANDPROJ, make_embedder
from .fdsm import summary_record_size
from .summary import (
    DEFAULT_BINS,
    HistogramSummary,
    conditional_summary,
    encoder_summary,
    label_summary,
)
from .util import ordered_map

METHOD_LABEL = "label"
METHOD_CONDITIONAL = "conditional"
METHOD_ENCODER = "encoder"
CUTOFF_NOTE = "cutoff (budget)"
SKIPPED_NOTE = "skipped (budget)"


@dataclass(frozen=True)
class BenchConfig:
    coreset_k: int = 128
    embed_dim: int = 64
    embedder: str = RANDPROJ
    bins: int = DEFAULT_BINS
    lo: float = 0.0
    hi: float = 1.0
    cluster_k: int | None = None  # default: planted group count
    eps: float = 0.5
    min_pts: int = 5
    summary_budget: float = 60.0  # seconds of timed summary work per method
    clustering_budget: float = 60.0
    kmeans_restarts: int = 1
    baseline_kmeans: bool = False  # also cluster baselines with K-means
    weighted_variant: bool = False  # extra row: label block scaled by H
    seed: int = 0

    def validate(self) -> None:
        if self.summary_budget <= 0 or self.clustering_budget <= 0:
            raise ValidationError("time budgets must be > 0")
        if self.bins < 2:
            raise ValidationError("bins must be >= 2")


@dataclass
class MethodResult:
    method: str
    clustering_method: str
    summary_avg: float | None = None
    summary_max: float | None = None
    summary_bytes: int | None = None
    clustering_time: float | None = None
    clients_timed: int = 0
    note: str = ""
    # non-timing outputs, kept for reproducibility checks (not in the CSV)
    assignments: np.ndarray | None = None


@dataclass
class BenchReport:
    population: PopulationSpec
    config: BenchConfig
    machine: str
    methods: list[MethodResult] = field(default_factory=list)
    total_wall: float = 0.0


class _Budget:
    def __init__(self, seconds: float):
        self.seconds = seconds
        self.start = time.perf_counter()

    def elapsed(self) -> float:
        return time.perf_counter() - self.start

    def exceeded(self) -> bool:
        return self.elapsed() >= self.seconds


class _SummaryTimer:
    """Accumulates per-client timings for one method until its budget runs out."""

    def __init__(self, budget: float):
        self.budget = budget
        self.used = 0.0
        self.times: list[float] = []
        self.cut = False

    def run(self, fn):
        if self.cut:
            return fn()  # still compute (downstream may need it), stop timing
        t0 = time.perf_counter()
        out = fn()
        dt = time.perf_counter() - t0
        self.times.append(dt)
        self.used += dt
        if self.used >= self.budget:
            self.cut = True
        return out

    def fill(self, result: MethodResult) -> None:
        result.clients_timed = len(self.times)
        if self.times:
            result.summary_avg = float(np.mean(self.times))
            result.summary_max = float(np.max(self.times))
            if self.cut:
                result.note = CUTOFF_NOTE
        else:
            result.note = SKIPPED_NOTE


def _hist_distance(a: HistogramSummary, b: HistogramSummary) -> float:
    """Euclidean distance between two conditional summaries without
    materializing the dense C*D*B vectors."""
    acc = float(((a.label_dist - b.label_dist) ** 2).sum())
    for c in set(a.class_hists) | set(b.class_hists):
        ha, hb = a.class_hists.get(c), b.class_hists.get(c)
        if ha is None:
            acc += float((hb ** 2).sum())
        elif hb is None:
            acc += float((ha ** 2).sum())
        else:
            acc += float(((ha - hb) ** 2).sum())
    return float(np.sqrt(acc))


def _baseline_cluster(
    result: MethodResult,
    cfg: BenchConfig,
    n: int,
    distance,
    vectors: np.ndarray | None,
    cluster_k: int,
) -> None:
    """Time DBSCAN (or optionally K-means) for a baseline method; `distance`
    computes one pairwise distance and may be arbitrarily expensive."""
    budget = _Budget(cfg.clustering_budget)
    if cfg.baseline_kmeans and vectors is not None:
        model = kmeans(vectors, cluster_k, seed=cfg.seed, n_init=cfg.kmeans_restarts)
        result.clustering_time = budget.elapsed()
        result.clustering_method = "kmeans"
        result.assignments = model.labels
        return
    dists = np.zeros((n, n))
    try:
        for i in range(n):
            for j in range(i):
                dists[i, j] = dists[j, i] = distance(i, j)
                if budget.exceeded():
                    raise TimeoutError
    except TimeoutError:
        result.clustering_time = budget.elapsed()
        result.note = (result.note + "; " if result.note else "") + f"clustering {CUTOFF_NOTE}"
        return
    model = dbscan_from_dists(dists, cfg.eps, cfg.min_pts)
    result.clustering_time = budget.elapsed()
    result.assignments = model.labels


def run_bench(spec: PopulationSpec, cfg: BenchConfig, threads: int = 1) -> BenchReport:
    cfg.validate()
    wall_start = time.perf_counter()
    model = PopulationModel(spec)
    cluster_k = cfg.cluster_k if cfg.cluster_k is not None else spec.group_count
    provider = make_embedder(cfg.embedder, spec.feature_dim, cfg.embed_dim, seed=cfg.seed)

    res_label = MethodResult(METHOD_LABEL, "dbscan")
    res_cond = MethodResult(METHOD_CONDITIONAL, "dbscan")
    res_enc = MethodResult(METHOD_ENCODER, "kmeans")
    timers = {
        METHOD_LABEL: _SummaryTimer(cfg.summary_budget),
        METHOD_CONDITIONAL: _SummaryTimer(cfg.summary_budget),
        METHOD_ENCODER: _SummaryTimer(cfg.summary_budget),
    }

    n = spec.num_clients
    label_vecs = np.zeros((n, spec.num_classes), dtype=np.float32)
    enc_vecs: list[np.ndarray] = []

    def process(i: int):
        # conditional summaries are large, so they are sized on the first
        # client and dropped immediately afterwards instead of returned
        ds = model.draw_client(i)
        lab = timers[METHOD_LABEL].run(lambda: label_summary(ds))
        if not timers[METHOD_CONDITIONAL].cut or i == 0:
            cond = timers[METHOD_CONDITIONAL].run(
                lambda: conditional_summary(ds, cfg.bins, cfg.lo, cfg.hi)
            )
            if i == 0:
                res_cond.summary_bytes = summary_record_size(cond)
        enc = timers[METHOD_ENCODER].run(
            lambda: encoder_summary(ds, cfg.coreset_k, provider, seed=cfg.seed)
        )
        if i == 0:
            res_label.summary_bytes = summary_record_size(lab)
            res_enc.summary_bytes = summary_record_size(enc)
        return i, lab.label_dist, enc.values

    for i, lab_dist, enc_values in ordered_map(process, range(n), threads):
        label_vecs[i] = lab_dist
        enc_vecs.append(enc_values)

    timers[METHOD_LABEL].fill(res_label)
    timers[METHOD_CONDITIONAL].fill(res_cond)
    timers[METHOD_ENCODER].fill(res_enc)

    # --- clustering passes -------------------------------------------------
    enc_matrix = np.stack(enc_vecs)
    budget = _Budget(cfg.clustering_budget)
    enc_model = kmeans(enc_matrix, cluster_k, seed=cfg.seed, n_init=cfg.kmeans_restarts)
    res_enc.clustering_time = budget.elapsed()
    res_enc.assignments = enc_model.labels

    def label_distance(i: int, j: int) -> float:
        return float(np.linalg.norm(label_vecs[i] - label_vecs[j]))

    _baseline_cluster(res_label, cfg, n, label_distance, label_vecs, cluster_k)

    # conditional summaries are too large to keep around, so the clustering
    # pass recomputes them per pair; this honestly charges their cost and is
    # what the budget cutoff exists for
    cond_cache: dict[int, HistogramSummary] = {}

    def cond_summary(i: int) -> HistogramSummary:
        s = cond_cache.get(i)
        if s is None:
            s = conditional_summary(model.draw_client(i), cfg.bins, cfg.lo, cfg.hi)
            if len(cond_cache) >= 4:
                cond_cache.pop(next(iter(cond_cache)))
            cond_cache[i] = s
        return s

    def cond_distance(i: int, j: int) -> float:
        return _hist_distance(cond_summary(i), cond_summary(j))

    _baseline_cluster(res_cond, cfg, n, cond_distance, None, cluster_k)

    methods = [res_label, res_cond, res_enc]

    if cfg.weighted_variant:
        weighted = enc_matrix.copy()
        weighted[:, spec.num_classes * cfg.embed_dim :] *= cfg.embed_dim
        res_w = MethodResult(f"{METHOD_ENCODER}-weighted", "kmeans")
        res_w.summary_avg = res_enc.summary_avg
        res_w.summary_max = res_enc.summary_max
        res_w.summary_bytes = res_enc.summary_bytes
        res_w.clients_timed = res_enc.clients_timed
        budget = _Budget(cfg.clustering_budget)
        res_w.assignments = kmeans(
            weighted, cluster_k, seed=cfg.seed, n_init=cfg.kmeans_restarts
        ).labels
        res_w.clustering_time = budget.elapsed()
        methods.append(res_w)

    return BenchReport(
        population=spec,
        config=cfg,
        machine=f"{platform.platform()} / {platform.processor() or 'unknown cpu'}",
        methods=methods,
        total_wall=time.perf_counter() - wall_start,
    )
