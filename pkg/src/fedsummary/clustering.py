"""Client clustering: Lloyd K-means, DBSCAN, and the adjusted Rand index.

K-means minimizes the within-cluster sum of squared distances
J = sum_j sum_i ||x_i^(j) - c_j||^2 via alternating assignment and mean
updates. Everything here is deterministic for a fixed seed: nearest-centroid
ties break toward the lower cluster index, empty clusters are re-seeded with
the point farthest from its assigned centroid, and centroid updates sum
points in ascending index order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .datamodel import ValidationError

NOISE = -1


@dataclass(frozen=True)
class ClusterModel:
    method: str  # "kmeans" | "dbscan"
    labels: np.ndarray  # (n,) cluster index per point; dbscan may use -1
    centroids: np.ndarray | None = None
    objective: float | None = None
    iterations: int = 0
    objective_trace: tuple[float, ...] = field(default_factory=tuple)

    def num_clusters(self) -> int:
        return int(len(set(self.labels.tolist()) - {NOISE}))


def _check_points(points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or len(points) == 0:
        raise ValidationError("points must be a non-empty (n, d) array")
    if not np.all(np.isfinite(points)):
        raise ValidationError("non-finite point")
    return points


def _sq_dists(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    d2 = (
        (points * points).sum(axis=1)[:, None]
        - 2.0 * points @ centroids.T
        + (centroids * centroids).sum(axis=1)[None, :]
    )
    np.maximum(d2, 0.0, out=d2)
    return d2


def _assign(points: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, float]:
    d2 = _sq_dists(points, centroids)
    labels = np.argmin(d2, axis=1)  # first minimum -> lowest cluster index
    return labels, float(d2[np.arange(len(points)), labels].sum())


def _update(points: np.ndarray, labels: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    k = len(centroids)
    new = centroids.copy()
    for j in range(k):
        members = np.flatnonzero(labels == j)
        if len(members):
            new[j] = points[members].mean(axis=0)
    empties = [j for j in range(k) if not np.any(labels == j)]
    if empties:
        cost = np.linalg.norm(points - new[labels], axis=1)
        for j in empties:
            far = int(np.argmax(cost))
            new[j] = points[far]
            cost[far] = 0.0
    return new


def kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Seeded k-means++ initial centroids."""
    n = len(points)
    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[rng.integers(n)]
    d2 = ((points - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            centroids[j] = points[rng.integers(n)]
        else:
            centroids[j] = points[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, ((points - centroids[j]) ** 2).sum(axis=1))
    return centroids


def kmeans(
    points: np.ndarray,
    k: int,
    init: str | np.ndarray = "kmeans++",
    max_iters: int = 100,
    tol: float = 1e-6,
    seed: int = 0,
    n_init: int = 10,
) -> ClusterModel:
    points = _check_points(points)
    n = len(points)
    if k < 1:
        raise ValidationError("k must be >= 1")
    if k > n:
        raise ValidationError(f"k={k} exceeds number of points {n}")

    if isinstance(init, str) and n_init > 1:
        # best objective over deterministic restarts; explicit centroids run once
        best = None
        for child in np.random.SeedSequence(seed).spawn(n_init):
            model = kmeans(points, k, init, max_iters, tol, seed=child, n_init=1)
            if best is None or model.objective < best.objective:
                best = model
        return best

    rng = np.random.default_rng(seed)
    if isinstance(init, str):
        if init == "kmeans++":
            centroids = kmeans_pp_init(points, k, rng)
        elif init == "random":
            centroids = points[rng.choice(n, size=k, replace=False)]
        else:
            raise ValidationError(f"unknown init {init!r}")
    else:
        centroids = np.asarray(init, dtype=np.float64).copy()
        if centroids.shape != (k, points.shape[1]):
            raise ValidationError("initial centroids must be (k, d)")

    trace: list[float] = []
    labels = np.full(n, -1)
    iterations = 0
    consistent = False
    for _ in range(max_iters):
        iterations += 1
        new_labels, objective = _assign(points, centroids)
        trace.append(objective)
        if np.array_equal(new_labels, labels):
            consistent = True
            break
        labels = new_labels
        new_centroids = _update(points, labels, centroids)
        shift = float(np.linalg.norm(new_centroids - centroids, axis=1).max())
        centroids = new_centroids
        if shift < tol:
            break

    if not consistent:
        labels, objective = _assign(points, centroids)
        trace.append(objective)

    return ClusterModel(
        method="kmeans",
        labels=labels,
        centroids=centroids,
        objective=trace[-1],
        iterations=iterations,
        objective_trace=tuple(trace),
    )


def dbscan_from_dists(dists: np.ndarray, eps: float, min_pts: int) -> ClusterModel:
    """DBSCAN over a precomputed (n, n) distance matrix."""
    if eps <= 0:
        raise ValidationError("eps must be > 0")
    if min_pts < 1:
        raise ValidationError("min_pts must be >= 1")
    n = len(dists)
    neighbors = [np.flatnonzero(dists[i] <= eps) for i in range(n)]
    core = np.array([len(nb) >= min_pts for nb in neighbors])

    labels = np.full(n, NOISE)
    cluster = 0
    for i in range(n):
        if labels[i] != NOISE or not core[i]:
            continue
        # expand a new cluster from core point i
        labels[i] = cluster
        frontier = list(neighbors[i])
        pos = 0
        while pos < len(frontier):
            j = frontier[pos]
            pos += 1
            if labels[j] == NOISE:
                labels[j] = cluster
                if core[j]:
                    frontier.extend(neighbors[j])
        cluster += 1
    return ClusterModel(method="dbscan", labels=labels)


def dbscan(points: np.ndarray, eps: float, min_pts: int) -> ClusterModel:
    points = _check_points(points)
    d2 = _sq_dists(points, points)
    return dbscan_from_dists(np.sqrt(d2), eps, min_pts)


def _as_label_array(a) -> np.ndarray:
    if isinstance(a, dict):
        return np.array([a[k] for k in sorted(a)])
    return np.asarray(a)


def adjusted_rand_index(a, b) -> float:
    """Chance-corrected agreement between two assignments of the same points.

    Accepts mappings (client -> label, matched by key) or aligned sequences.
    Noise labels (-1) count as singleton clusters.
    """
    if isinstance(a, dict) != isinstance(b, dict):
        raise ValidationError("assignments must both be mappings or both sequences")
    if isinstance(a, dict) and set(a) != set(b):
        raise ValidationError("assignments cover different client sets")
    xs, ys = _as_label_array(a), _as_label_array(b)
    if xs.shape != ys.shape:
        raise ValidationError("assignments cover different numbers of points")

    def densify(labels: np.ndarray) -> np.ndarray:
        out = np.empty(len(labels), dtype=np.int64)
        seen: dict[int, int] = {}
        nxt = 0
        for i, lab in enumerate(labels.tolist()):
            if lab == NOISE:  # each noise point is its own singleton cluster
                out[i] = nxt
                nxt += 1
            else:
                if lab not in seen:
                    seen[lab] = nxt
                    nxt += 1
                out[i] = seen[lab]
        return out

    xs, ys = densify(xs), densify(ys)
    n = len(xs)
    table = np.zeros((xs.max() + 1, ys.max() + 1), dtype=np.int64)
    np.add.at(table, (xs, ys), 1)

    sum_cells = sum(comb(int(v), 2) for v in table.ravel())
    sum_rows = sum(comb(int(v), 2) for v in table.sum(axis=1))
    sum_cols = sum(comb(int(v), 2) for v in table.sum(axis=0))
    total = comb(n, 2)
    expected = sum_rows * sum_cols / total if total else 0.0
    max_index = (sum_rows + sum_cols) / 2.0
    if max_index == expected:
        return 1.0  # both partitions trivial and identical in pair structure
    return float((sum_cells - expected) / (max_index - expected))
