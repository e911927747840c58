"""Cluster-based client selection simulator with data drift.

Each round the selector picks one cluster by smooth weighted round-robin
(weight = cluster size) and then up to m available clients inside it,
preferring the fastest devices. Summaries are recomputed and clients
re-clustered at round 0 and every `resummarize_every` rounds; data drift
re-draws a fraction of clients from a new planted group, which moves the
ground truth the logged ARI is measured against.

No actual model training happens here: the simulator measures selection and
clustering quality, not accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .clustering import adjusted_rand_index, kmeans
from .datamodel import ClientDataset, PopulationModel, ValidationError
from .embedder import make_embedder
from .summary import encoder_summary
from .util import ordered_map

_NS_AVAIL = 10
_NS_DRIFT = 11
_NS_CORESET = 12
_NS_PROFILE = 13

POLICY_CLUSTER_RR = "cluster-roundrobin"


@dataclass(frozen=True)
class DeviceProfile:
    client_id: str
    compute_speed: float  # samples / second
    availability: float  # per-round Bernoulli probability

    def __post_init__(self):
        if self.compute_speed <= 0:
            raise ValidationError("compute_speed must be > 0")
        if not 0.0 <= self.availability <= 1.0:
            raise ValidationError("availability must be in [0, 1]")


@dataclass(frozen=True)
class SimConfig:
    rounds: int
    clients_per_round: int
    resummarize_every: int | None = 1  # None: only the initial summarization
    drift_round: int | None = None
    drift_fraction: float = 0.0
    policy: str = POLICY_CLUSTER_RR
    cluster_k: int | None = None  # default: the population's planted group count
    coreset_k: int = 64
    embedder: str = "randproj"
    embed_dim: int = 32
    seed: int = 0

    def validate(self, num_clients: int) -> None:
        if self.rounds < 1:
            raise ValidationError("rounds must be >= 1")
        if not 1 <= self.clients_per_round <= num_clients:
            raise ValidationError("clients_per_round must be in [1, population size]")
        if self.resummarize_every is not None and self.resummarize_every < 1:
            raise ValidationError("resummarize_every must be >= 1 or null")
        if not 0.0 <= self.drift_fraction <= 1.0:
            raise ValidationError("drift_fraction must be in [0, 1]")
        if self.policy != POLICY_CLUSTER_RR:
            raise ValidationError(f"unknown selection policy {self.policy!r}")


@dataclass(frozen=True)
class RoundLog:
    round: int
    selected: tuple[str, ...]
    cluster: int
    wall_time: float  # max selected per-round compute time (model value)
    resummarized: bool
    ari: float


def default_profiles(model: PopulationModel, seed: int | None = None) -> list[DeviceProfile]:
    """Heterogeneous device fleet: log-normal speeds, mostly-on availability."""
    spec = model.spec
    rng = np.random.default_rng(
        np.random.SeedSequence([seed if seed is not None else spec.seed, _NS_PROFILE])
    )
    speeds = rng.lognormal(mean=3.0, sigma=0.8, size=spec.num_clients)
    avail = rng.uniform(0.6, 1.0, size=spec.num_clients)
    return [
        DeviceProfile(model.client_id(i), float(speeds[i]), float(avail[i]))
        for i in range(spec.num_clients)
    ]


class _WeightedRoundRobin:
    """Smooth weighted round-robin over cluster indices. Counter state
    survives weight updates so frequent re-clustering does not starve the
    higher-index clusters."""

    def __init__(self, weights: dict[int, int]):
        self.current: dict[int, float] = {}
        self.update(weights)

    def update(self, weights: dict[int, int]) -> None:
        self.weights = {j: w for j, w in weights.items() if w > 0}
        self.current = {j: self.current.get(j, 0.0) for j in self.weights}
        self.total = sum(self.weights.values())

    def pick(self) -> int:
        for j, w in self.weights.items():
            self.current[j] += w
        best = min(sorted(self.current), key=lambda j: -self.current[j])
        self.current[best] -= self.total
        return best


def run_simulation(
    model: PopulationModel,
    profiles: list[DeviceProfile],
    cfg: SimConfig,
    threads: int = 1,
) -> list[RoundLog]:
    spec = model.spec
    cfg.validate(spec.num_clients)
    if len(profiles) != spec.num_clients:
        raise ValidationError("one device profile per client required")

    n = spec.num_clients
    cluster_k = cfg.cluster_k if cfg.cluster_k is not None else spec.group_count
    provider = make_embedder(cfg.embedder, spec.feature_dim, cfg.embed_dim, seed=cfg.seed)

    groups = {i: model.group_of(i) for i in range(n)}
    salts = {i: 0 for i in range(n)}
    datasets: list[ClientDataset] = [model.draw_client(i) for i in range(n)]

    assignments: np.ndarray | None = None
    rr: _WeightedRoundRobin | None = None
    logs: list[RoundLog] = []

    def resummarize(round_idx: int) -> None:
        nonlocal assignments, rr
        def one_summary(i: int) -> np.ndarray:
            seed = np.random.SeedSequence([cfg.seed, _NS_CORESET, round_idx, i])
            coreset_seed = int(seed.generate_state(1)[0])
            return encoder_summary(datasets[i], cfg.coreset_k, provider, seed=coreset_seed).values
        vectors = ordered_map(one_summary, range(n), threads)
        result = kmeans(np.stack(vectors), cluster_k, seed=cfg.seed)
        assignments = result.labels
        sizes = {j: int((assignments == j).sum()) for j in range(cluster_k)}
        if rr is None:
            rr = _WeightedRoundRobin(sizes)
        else:
            rr.update(sizes)

    for r in range(cfg.rounds):
        if cfg.drift_round is not None and r == cfg.drift_round and cfg.drift_fraction > 0:
            drift_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, _NS_DRIFT, r]))
            n_drift = int(round(cfg.drift_fraction * n))
            for i in drift_rng.choice(n, size=n_drift, replace=False):
                i = int(i)
                groups[i] = (groups[i] + 1) % spec.group_count
                salts[i] = r + 1
                datasets[i] = model.draw_client(i, group=groups[i], salt=salts[i])

        do_resummarize = r == 0 or (
            cfg.resummarize_every is not None and r % cfg.resummarize_every == 0
        )
        if do_resummarize:
            resummarize(r)

        truth = np.array([groups[i] for i in range(n)])
        ari = adjusted_rand_index(assignments, truth)

        avail_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, _NS_AVAIL, r]))
        available = avail_rng.random(n) < np.array([p.availability for p in profiles])

        cluster = rr.pick()
        members = [i for i in range(n) if assignments[i] == cluster and available[i]]
        members.sort(key=lambda i: (-profiles[i].compute_speed, i))
        chosen = members[: cfg.clients_per_round]
        wall_time = max(
            (datasets[i].num_samples / profiles[i].compute_speed for i in chosen),
            default=0.0,
        )

        logs.append(
            RoundLog(
                round=r,
                selected=tuple(model.client_id(i) for i in chosen),
                cluster=int(cluster),
                wall_time=float(wall_time),
                resummarized=do_resummarize,
                ari=float(ari),
            )
        )
    return logs


def selection_coverage(logs: list[RoundLog], group_of: dict[str, int]) -> dict[int, float]:
    """Fraction of selection slots that went to each planted group."""
    if not logs:
        raise ValidationError("no round logs")
    counts: dict[int, int] = {}
    for log in logs:
        for cid in log.selected:
            g = group_of[cid]
            counts[g] = counts.get(g, 0) + 1
    total = sum(counts.values())
    if total == 0:
        raise ValidationError("no clients were ever selected")
    return {g: counts[g] / total for g in sorted(counts)}
