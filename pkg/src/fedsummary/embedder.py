"""Pluggable dimension reduction from raw features (dim D) to embeddings (dim H).

Providers are deterministic and immutable once constructed. The random
projection provider uses a fixed seeded D x H sign matrix with entries
+-1/sqrt(H), which preserves pairwise distances in expectation; identity
passes features through; the precomputed provider only marks datasets that
were embedded offline and refuses to embed raw features itself.
"""

from __future__ import annotations

import numpy as np

from .datamodel import ValidationError

DEFAULT_EMBED_DIM = 64

IDENTITY = "identity"
RANDPROJ = "randproj"
PRECOMPUTED = "precomputed"


class EmbeddingError(ValueError):
    pass


class EmbeddingProvider:
    name: str
    input_dim: int
    output_dim: int

    def embed(self, features: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _check_input(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features)
        if features.ndim != 2 or features.shape[1] != self.input_dim:
            raise EmbeddingError(
                f"{self.name}: expected (n, {self.input_dim}) input, got {features.shape}"
            )
        if not np.all(np.isfinite(features)):
            raise EmbeddingError(f"{self.name}: non-finite input value")
        return features


class IdentityEmbedder(EmbeddingProvider):
    name = IDENTITY

    def __init__(self, dim: int):
        if dim < 1:
            raise ValidationError("embedding dim must be >= 1")
        self.input_dim = dim
        self.output_dim = dim

    def embed(self, features: np.ndarray) -> np.ndarray:
        return self._check_input(features)


class RandomProjectionEmbedder(EmbeddingProvider):
    name = RANDPROJ

    def __init__(self, input_dim: int, output_dim: int, seed: int = 0):
        if input_dim < 1 or output_dim < 1:
            raise ValidationError("projection dims must be >= 1")
        self.input_dim = input_dim
        self.output_dim = output_dim
        self.seed = seed
        rng = np.random.default_rng(seed)
        signs = rng.integers(0, 2, size=(input_dim, output_dim)) * 2 - 1
        self.matrix = (signs / np.sqrt(output_dim)).astype(np.float32)

    def embed(self, features: np.ndarray) -> np.ndarray:
        features = self._check_input(features)
        return features @ self.matrix


class PrecomputedEmbedder(EmbeddingProvider):
    """Placeholder for embeddings produced offline (FDSM import path)."""

    name = PRECOMPUTED

    def __init__(self, dim: int):
        self.input_dim = dim
        self.output_dim = dim

    def embed(self, features: np.ndarray) -> np.ndarray:
        raise EmbeddingError(
            "precomputed provider cannot embed raw features; import an "
            "embedded FDSM dataset instead"
        )


def make_embedder(name: str, input_dim: int, output_dim: int = DEFAULT_EMBED_DIM, seed: int = 0) -> EmbeddingProvider:
    if name == IDENTITY:
        return IdentityEmbedder(input_dim)
    if name == RANDPROJ:
        return RandomProjectionEmbedder(input_dim, output_dim, seed)
    if name == PRECOMPUTED:
        return PrecomputedEmbedder(output_dim)
    raise ValidationError(f"unknown embedder {name!r}")
