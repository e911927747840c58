from itertools import combinations, product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.metrics import adjusted_rand_score

from fedsummary.clustering import (
    NOISE,
    adjusted_rand_index,
    dbscan,
    dbscan_from_dists,
    kmeans,
)
from fedsummary.datamodel import ValidationError


def brute_force_kmeans_objective(points, k):
    """Exhaustive optimum of the within-cluster sum of squares for small n."""
    n = len(points)
    best = np.inf
    for assignment in product(range(k), repeat=n):
        if len(set(assignment)) != k:
            continue
        total = 0.0
        for j in range(k):
            members = points[[i for i in range(n) if assignment[i] == j]]
            total += ((members - members.mean(axis=0)) ** 2).sum()
        best = min(best, total)
    return best


def reference_dbscan(points, eps, min_pts):
    """O(n^2) reference with explicit density-reachability closure."""
    n = len(points)
    dist = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=2)
    neighbors = [set(np.flatnonzero(dist[i] <= eps).tolist()) for i in range(n)]
    core = [len(neighbors[i]) >= min_pts for i in range(n)]
    labels = [NOISE] * n
    cluster = 0
    for i in range(n):
        if labels[i] != NOISE or not core[i]:
            continue
        # closure of density-reachable points from core point i
        member = {i}
        frontier = [i]
        while frontier:
            p = frontier.pop()
            if not core[p]:
                continue
            for q in neighbors[p]:
                if q not in member:
                    member.add(q)
                    frontier.append(q)
        for p in sorted(member):
            if labels[p] == NOISE:
                labels[p] = cluster
        cluster += 1
    return np.array(labels)


class TestKMeans:
    def test_perfect_separation(self):
        m = kmeans(np.array([[0.0, 0.0], [10.0, 10.0]]), 2, seed=0)
        assert m.objective == pytest.approx(0.0)
        assert m.num_clusters() == 2

    def test_1d_optimum_matches_brute_force(self):
        points = np.array([[0.0], [1.0], [9.0], [10.0]])
        m = kmeans(points, 2, seed=0)
        assert m.objective == pytest.approx(1.0)
        assert brute_force_kmeans_objective(points, 2) == pytest.approx(1.0)
        groups = {tuple(sorted(np.flatnonzero(m.labels == j).tolist())) for j in range(2)}
        assert groups == {(0, 1), (2, 3)}
        assert sorted(np.sort(m.centroids, axis=0).ravel().tolist()) == [0.5, 9.5]

    def test_k_equals_n_gives_zero_objective(self):
        points = np.random.default_rng(0).random((6, 3))
        m = kmeans(points, 6, seed=1)
        assert m.objective == pytest.approx(0.0, abs=1e-12)

    def test_objective_trace_non_increasing(self):
        points = np.random.default_rng(1).random((60, 4))
        m = kmeans(points, 5, seed=2, n_init=1)
        trace = np.array(m.objective_trace)
        assert np.all(np.diff(trace) <= 1e-9)

    def test_exit_self_consistency(self):
        points = np.random.default_rng(2).random((50, 3))
        m = kmeans(points, 4, seed=3, n_init=1, max_iters=3)  # may stop early
        d2 = ((points[:, None, :] - m.centroids[None, :, :]) ** 2).sum(axis=2)
        assert np.array_equal(np.argmin(d2, axis=1), m.labels)

    def test_objective_matches_recomputation(self):
        points = np.random.default_rng(3).random((30, 2))
        m = kmeans(points, 3, seed=4)
        recomputed = sum(
            ((points[m.labels == j] - m.centroids[j]) ** 2).sum() for j in range(3)
        )
        assert m.objective == pytest.approx(recomputed, rel=1e-6)

    def test_explicit_init_and_empty_cluster_repair(self):
        # both initial centroids nearest to the same blob: one cluster starts
        # empty and must be re-seeded deterministically
        points = np.array([[0.0], [0.1], [5.0], [5.1]])
        init = np.array([[0.0], [0.05]])
        m = kmeans(points, 2, init=init, seed=0)
        assert m.num_clusters() == 2
        assert m.objective == pytest.approx(0.01, abs=1e-9)

    def test_k_larger_than_n_rejected(self):
        with pytest.raises(ValidationError):
            kmeans(np.zeros((2, 1)), 3)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValidationError):
            kmeans(np.array([[np.nan]]), 1)

    def test_deterministic(self):
        points = np.random.default_rng(4).random((40, 5))
        a = kmeans(points, 4, seed=7)
        b = kmeans(points, 4, seed=7)
        assert np.array_equal(a.labels, b.labels)
        assert a.objective == b.objective

    def test_best_of_pairs_matches_brute_force(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            n = int(rng.integers(4, 8))
            points = rng.random((n, 2))
            best = np.inf
            for i, j in combinations(range(n), 2):
                m = kmeans(points, 2, init=points[[i, j]], n_init=1)
                best = min(best, m.objective)
            assert best == pytest.approx(brute_force_kmeans_objective(points, 2), abs=1e-9)


class TestDBSCAN:
    def test_two_blobs(self):
        rng = np.random.default_rng(0)
        a = rng.normal(0, 0.05, (10, 2))
        b = rng.normal(5, 0.05, (10, 2))
        m = dbscan(np.vstack([a, b]), eps=0.5, min_pts=3)
        assert m.num_clusters() == 2
        assert NOISE not in m.labels

    def test_huge_eps_collapses_to_one_cluster(self):
        # the known failure mode: everything lands in a single group
        points = np.random.default_rng(1).random((20, 3)) * 10
        m = dbscan(points, eps=1e6, min_pts=1)
        assert m.num_clusters() == 1
        assert set(m.labels.tolist()) == {0}

    def test_matches_reference_on_random_instances(self):
        rng = np.random.default_rng(2)
        for trial in range(50):
            points = rng.random((10, 2))
            eps = float(rng.uniform(0.05, 0.4))
            min_pts = int(rng.integers(1, 5))
            ours = dbscan(points, eps, min_pts).labels
            ref = reference_dbscan(points, eps, min_pts)
            assert adjusted_rand_index(ours, ref) == pytest.approx(1.0)
            assert np.array_equal(ours == NOISE, ref == NOISE)

    def test_invalid_parameters(self):
        points = np.zeros((3, 1))
        with pytest.raises(ValidationError):
            dbscan(points, eps=0.0, min_pts=1)
        with pytest.raises(ValidationError):
            dbscan(points, eps=1.0, min_pts=0)

    def test_accepts_precomputed_distances(self):
        dists = np.array([[0.0, 1.0], [1.0, 0.0]])
        m = dbscan_from_dists(dists, eps=2.0, min_pts=1)
        assert m.num_clusters() == 1


class TestAdjustedRandIndex:
    def test_identical_assignments(self):
        assert adjusted_rand_index([0, 0, 1, 1], [0, 0, 1, 1]) == pytest.approx(1.0)

    def test_single_cluster_vs_two_balanced(self):
        a = [0, 0, 0, 0, 1, 1, 1, 1]
        b = [0] * 8
        assert adjusted_rand_index(a, b) == pytest.approx(0.0)

    def test_label_permutation_invariance(self):
        a = [0, 0, 1, 2, 2, 1]
        b = [2, 2, 0, 1, 1, 0]
        assert adjusted_rand_index(a, b) == pytest.approx(1.0)

    def test_matches_sklearn_on_random_assignments(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            n = int(rng.integers(3, 30))
            a = rng.integers(0, 4, n)
            b = rng.integers(0, 4, n)
            assert adjusted_rand_index(a, b) == pytest.approx(
                adjusted_rand_score(a, b), abs=1e-12
            )

    def test_dict_assignments_with_mismatched_keys(self):
        with pytest.raises(ValidationError, match="client sets"):
            adjusted_rand_index({"a": 0}, {"b": 0})

    def test_both_single_cluster_is_one_by_convention(self):
        assert adjusted_rand_index([0, 0, 0], [5, 5, 5]) == pytest.approx(1.0)

    def test_noise_points_are_singletons(self):
        # two noise points never count as agreeing with each other
        a = [NOISE, NOISE, 0, 0]
        b = [0, 0, 1, 1]
        expected = adjusted_rand_score([10, 11, 0, 0], [0, 0, 1, 1])
        assert adjusted_rand_index(a, b) == pytest.approx(expected, abs=1e-12)

    @given(st.lists(st.integers(0, 3), min_size=2, max_size=25))
    @settings(max_examples=100)
    def test_self_agreement_is_one(self, labels):
        assert adjusted_rand_index(labels, list(labels)) == pytest.approx(1.0)
