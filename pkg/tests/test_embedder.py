import numpy as np
import pytest

from fedsummary.embedder import (
    EmbeddingError,
    IdentityEmbedder,
    PrecomputedEmbedder,
    RandomProjectionEmbedder,
    make_embedder,
)


class TestIdentity:
    def test_passes_through(self):
        emb = IdentityEmbedder(2)
        out = emb.embed(np.array([[0.2, 0.8]]))
        assert np.array_equal(out, [[0.2, 0.8]])

    def test_dimension_mismatch(self):
        with pytest.raises(EmbeddingError, match="expected"):
            IdentityEmbedder(3).embed(np.zeros((1, 2)))


class TestRandomProjection:
    def test_zero_maps_to_zero(self):
        emb = RandomProjectionEmbedder(10, 4, seed=1)
        assert not emb.embed(np.zeros((1, 10))).any()

    def test_matrix_entries_are_plus_minus_inv_sqrt_h(self):
        emb = RandomProjectionEmbedder(20, 5, seed=2)
        assert set(np.unique(np.abs(emb.matrix))) == {np.float32(1 / np.sqrt(5))}

    def test_linearity_exact(self):
        emb = RandomProjectionEmbedder(8, 3, seed=0)
        x = np.random.default_rng(0).random((1, 8)).astype(np.float32)
        assert np.array_equal(emb.embed(2.0 * x), 2.0 * emb.embed(x))

    def test_deterministic_per_seed(self):
        a = RandomProjectionEmbedder(6, 2, seed=9)
        b = RandomProjectionEmbedder(6, 2, seed=9)
        assert np.array_equal(a.matrix, b.matrix)
        c = RandomProjectionEmbedder(6, 2, seed=10)
        assert not np.array_equal(a.matrix, c.matrix)

    def test_output_count_matches_input_count(self):
        emb = RandomProjectionEmbedder(5, 2, seed=0)
        assert emb.embed(np.zeros((7, 5))).shape == (7, 2)

    def test_nonfinite_rejected(self):
        emb = RandomProjectionEmbedder(2, 2, seed=0)
        with pytest.raises(EmbeddingError, match="non-finite"):
            emb.embed(np.array([[np.inf, 0.0]]))

    def test_distance_preservation_monte_carlo(self):
        # Monte-Carlo check of the distance-preservation property:
        # the embedded distance is within 50% relative error of the original
        # for at least 90% of 1000 seeded trials (D=100, H=16).
        rng = np.random.default_rng(42)
        a = rng.random((1, 100))
        b = rng.random((1, 100))
        original = np.linalg.norm(a - b)
        hits = 0
        for seed in range(1000):
            emb = RandomProjectionEmbedder(100, 16, seed=seed)
            projected = np.linalg.norm(emb.embed(a) - emb.embed(b))
            if abs(projected - original) / original < 0.5:
                hits += 1
        assert hits >= 900


class TestPrecomputed:
    def test_refuses_raw_features(self):
        emb = PrecomputedEmbedder(4)
        with pytest.raises(EmbeddingError, match="import"):
            emb.embed(np.zeros((1, 4)))


class TestFactory:
    def test_known_providers(self):
        assert make_embedder("identity", 4).output_dim == 4
        assert make_embedder("randproj", 4, 2).output_dim == 2
        assert make_embedder("precomputed", 4, 8).name == "precomputed"

    def test_unknown_provider(self):
        with pytest.raises(ValueError, match="unknown embedder"):
            make_embedder("pca", 4)
