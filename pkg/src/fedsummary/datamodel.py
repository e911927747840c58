"""Core dataset types and synthetic non-IID client population generation.

A population is organized around *planted groups*: each group owns a label
distribution template (drawn from a Dirichlet) and one feature archetype per
class. Clients belong to exactly one group, draw their label distribution near
the group template, and sample features as archetype + bounded noise. The
group map is returned alongside the clients for evaluation only; nothing in
the summarization/clustering pipeline may read it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

RAW = "raw"
EMBEDDED = "embedded"

# How tightly clients hug their group's label template (Dirichlet concentration
# multiplier) and the per-feature Gaussian noise around the class archetype.
CLIENT_CONCENTRATION = 100.0
FEATURE_NOISE_SIGMA = 0.05

# Seed-stream namespaces so templates, archetypes and clients never collide.
_NS_TEMPLATE = 0
_NS_ARCHETYPE = 1
_NS_CLIENT = 2


class ValidationError(ValueError):
    """Raised when a spec or dataset violates its invariants."""


@dataclass(frozen=True)
class ClientDataset:
    """One device's labeled samples, either raw features or embeddings."""

    client_id: str
    features: np.ndarray  # (n, dim) float32
    labels: np.ndarray  # (n,) int64, values in [0, num_classes)
    num_classes: int
    kind: str = RAW

    def __post_init__(self):
        if self.kind not in (RAW, EMBEDDED):
            raise ValidationError(f"unknown dataset kind {self.kind!r}")
        if self.features.ndim != 2 or self.labels.ndim != 1:
            raise ValidationError("features must be (n, dim), labels (n,)")
        if len(self.features) != len(self.labels):
            raise ValidationError("features and labels length mismatch")
        if len(self.features) == 0:
            raise ValidationError(f"client {self.client_id!r} has no samples")
        if self.num_classes < 1:
            raise ValidationError("num_classes must be >= 1")
        if not np.all(np.isfinite(self.features)):
            raise ValidationError("non-finite feature value")
        if self.labels.min() < 0 or self.labels.max() >= self.num_classes:
            raise ValidationError(
                f"label out of range [0, {self.num_classes}) for client "
                f"{self.client_id!r}"
            )

    @property
    def num_samples(self) -> int:
        return len(self.labels)

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def label_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_classes)


@dataclass(frozen=True)
class PopulationSpec:
    """Parameters of a synthetic heterogeneous client population."""

    num_clients: int
    num_classes: int
    feature_dim: int
    samples_mean: float = 109.0
    samples_std: float = 211.63
    samples_max: int = 6709
    group_count: int = 5
    dirichlet_alpha: float = 0.1
    seed: int = 0

    def validate(self) -> None:
        if self.num_clients < 1:
            raise ValidationError("num_clients must be >= 1")
        if self.num_classes < 1:
            raise ValidationError("num_classes must be >= 1")
        if self.feature_dim < 1:
            raise ValidationError("feature_dim must be >= 1")
        if self.group_count < 1 or self.group_count > self.num_clients:
            raise ValidationError("group_count must be in [1, num_clients]")
        if self.dirichlet_alpha <= 0:
            raise ValidationError("dirichlet_alpha must be > 0")
        if self.samples_mean < 1:
            raise ValidationError("samples_mean must be >= 1")
        if self.samples_std < 0:
            raise ValidationError("samples_std must be >= 0")
        if self.samples_max < 1:
            raise ValidationError("samples_max must be >= 1")


class PopulationModel:
    """Planted group structure derived deterministically from a spec.

    Clients can be drawn lazily and independently: each client's samples
    depend only on (spec.seed, client index, group, salt), so re-drawing a
    single client (e.g. after drift) never perturbs the others.
    """

    def __init__(self, spec: PopulationSpec):
        spec.validate()
        self.spec = spec
        rng = np.random.default_rng(np.random.SeedSequence([spec.seed, _NS_TEMPLATE]))
        alpha = np.full(spec.num_classes, spec.dirichlet_alpha)
        self.label_templates = rng.dirichlet(alpha, size=spec.group_count)
        self._archetype_cache: dict[tuple[int, int], np.ndarray] = {}

    def archetype(self, group: int, label: int) -> np.ndarray:
        """Fixed random unit vector for (group, class), generated on demand."""
        key = (group, label)
        vec = self._archetype_cache.get(key)
        if vec is None:
            rng = np.random.default_rng(
                np.random.SeedSequence([self.spec.seed, _NS_ARCHETYPE, group, label])
            )
            vec = rng.normal(size=self.spec.feature_dim)
            vec /= np.linalg.norm(vec)
            self._archetype_cache[key] = vec
        return vec

    def group_of(self, index: int) -> int:
        return index % self.spec.group_count

    def client_id(self, index: int) -> str:
        return f"client-{index:05d}"

    def draw_client(self, index: int, group: int | None = None, salt: int = 0) -> ClientDataset:
        """Draw one client's dataset; `salt` varies the draw (used for drift)."""
        spec = self.spec
        if group is None:
            group = self.group_of(index)
        rng = np.random.default_rng(
            np.random.SeedSequence([spec.seed, _NS_CLIENT, index, group, salt])
        )
        n = self._draw_sample_count(rng)
        template = self.label_templates[group]
        label_dist = rng.dirichlet(np.maximum(template * CLIENT_CONCENTRATION, 1e-8))
        labels = rng.choice(spec.num_classes, size=n, p=label_dist)
        features = rng.normal(0.0, FEATURE_NOISE_SIGMA, size=(n, spec.feature_dim))
        for c in np.unique(labels):
            features[labels == c] += self.archetype(group, int(c))
        np.clip(features, 0.0, 1.0, out=features)
        return ClientDataset(
            client_id=self.client_id(index),
            features=features.astype(np.float32),
            labels=labels.astype(np.int64),
            num_classes=spec.num_classes,
            kind=RAW,
        )

    def iter_clients(self, groups: dict[int, int] | None = None, salts: dict[int, int] | None = None) -> Iterator[ClientDataset]:
        """Stream clients without holding the whole population in memory."""
        for i in range(self.spec.num_clients):
            group = groups.get(i) if groups else None
            salt = salts.get(i, 0) if salts else 0
            yield self.draw_client(i, group=group, salt=salt)

    def _draw_sample_count(self, rng: np.random.Generator) -> int:
        mean, std = self.spec.samples_mean, self.spec.samples_std
        if std == 0:
            n = mean
        else:
            # Log-normal parameterized by the target mean/std, matching the
            # heavy right tail of real per-client sample counts.
            sigma2 = math.log(1.0 + (std / mean) ** 2)
            mu = math.log(mean) - sigma2 / 2.0
            n = rng.lognormal(mu, math.sqrt(sigma2))
        return int(np.clip(round(n), 1, self.spec.samples_max))


def generate_population(spec: PopulationSpec) -> tuple[list[ClientDataset], dict[str, int]]:
    """Generate all clients plus the ground-truth client -> group map."""
    model = PopulationModel(spec)
    clients = [model.draw_client(i) for i in range(spec.num_clients)]
    ground_truth = {model.client_id(i): model.group_of(i) for i in range(spec.num_clients)}
    return clients, ground_truth
