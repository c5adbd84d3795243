"""Seeded k-means and agglomerative (AGNES) clustering.

Everything here is deterministic. Ties go to the lowest index: the lowest
centroid index in k-means, the lexicographically lowest cluster pair in AGNES
(a merged cluster keeps the slot of its lowest-indexed member).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .core import ExplanationSet, PredictionVector
from .errors import DimensionMismatch, DuplicateInitialCentroids, EmptyClass, EmptyInput, ValidationError
from .metrics import pairwise_distances

_CHUNK = 4096


class Linkage(str, Enum):
    SINGLE = "single"
    WARD = "ward"


@dataclass(frozen=True)
class ClusterAssignment:
    labels: np.ndarray
    k: int
    centroids: np.ndarray | None = None
    n_iter: int = 0

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if self.k < 1:
            raise ValidationError("cluster count must be >= 1")
        if labels.size and (labels.min() < 0 or labels.max() >= self.k):
            raise ValidationError(f"cluster labels must lie in [0, {self.k})")
        object.__setattr__(self, "labels", labels)


@dataclass(frozen=True)
class MergeStep:
    left: int
    right: int
    height: float
    new_id: int
    size: int


def _as_points(points) -> np.ndarray:
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] == 0:
        raise EmptyInput("clustering needs a non-empty 2-D point matrix")
    return x


def group_means(points, labels, k: int) -> np.ndarray:
    """Row ``c`` is the mean of the points whose label is ``c``."""
    x = _as_points(points)
    labels = np.asarray(labels, dtype=np.int64)
    counts = np.bincount(labels, minlength=k)
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        raise EmptyClass(int(empty[0]))
    sums = np.zeros((k, x.shape[1]))
    np.add.at(sums, labels, x)
    return sums / counts[:, None]


def informed_centroids(explanations: ExplanationSet, predictions: PredictionVector) -> np.ndarray:
    """Mean explanation of each predicted class, in label order."""
    if not predictions.is_classification:
        raise ValidationError("informed centroids need class labels")
    if len(predictions) != explanations.n:
        raise DimensionMismatch("predictions rows", explanations.n, len(predictions))
    return group_means(explanations.importances, predictions.values, predictions.n_classes)


def _nearest(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    out = np.empty(x.shape[0], dtype=np.int64)
    for start in range(0, x.shape[0], _CHUNK):
        block = x[start : start + _CHUNK]
        d2 = np.sum((block[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
        out[start : start + _CHUNK] = np.argmin(d2, axis=1)
    return out


def within_cluster_sse(points, labels, centroids) -> float:
    x = _as_points(points)
    c = np.asarray(centroids, dtype=float)
    return float(np.sum((x - c[np.asarray(labels)]) ** 2))


def kmeans_seeded(points, initial_centroids, max_iter: int = 300, tol: float = 1e-6) -> ClusterAssignment:
    """Lloyd's algorithm started from the given centroids, without any randomness.

    Cluster ``c`` always corresponds to initial centroid ``c``. A cluster that
    loses all its members keeps its previous centroid. Stops when the
    assignment no longer changes, the largest centroid shift drops below
    ``tol``, or after ``max_iter`` updates.
    """
    x = _as_points(points)
    centroids = np.array(initial_centroids, dtype=float, copy=True)
    if centroids.ndim == 1:
        centroids = centroids[:, None]
    k = centroids.shape[0]
    if k == 0:
        raise EmptyInput("at least one initial centroid is required")
    if centroids.shape[1] != x.shape[1]:
        raise DimensionMismatch("centroid columns", x.shape[1], centroids.shape[1])
    if k > x.shape[0]:
        raise ValidationError(f"k={k} exceeds the number of points {x.shape[0]}")
    for a, b in itertools.combinations(range(k), 2):
        if np.array_equal(centroids[a], centroids[b]):
            raise DuplicateInitialCentroids(a, b)

    labels = _nearest(x, centroids)
    n_iter = 0
    for _ in range(max_iter):
        updated = centroids.copy()
        counts = np.bincount(labels, minlength=k)
        for c in np.flatnonzero(counts):
            updated[c] = x[labels == c].mean(axis=0)
        shift = float(np.max(np.sqrt(np.sum((updated - centroids) ** 2, axis=1))))
        centroids = updated
        new_labels = _nearest(x, centroids)
        n_iter += 1
        changed = bool(np.any(new_labels != labels))
        labels = new_labels
        if not changed or shift < tol:
            break
    return ClusterAssignment(labels, k, centroids, n_iter)


def agnes(points, linkage: Linkage | str = Linkage.SINGLE) -> list[MergeStep]:
    """Full agglomerative merge sequence (n - 1 steps).

    Single linkage heights are the minimum inter-point distance between the
    merged clusters. Ward heights are the increase in total within-cluster
    sum of squares, ``n_a * n_b / (n_a + n_b) * ||c_a - c_b||**2`` (not the
    sqrt-scaled variant some libraries report).
    """
    linkage = Linkage(linkage)
    x = _as_points(points)
    n = x.shape[0]
    if n < 2:
        raise ValidationError("agnes needs at least 2 points")

    if linkage is Linkage.SINGLE:
        d = np.array(pairwise_distances(x).entries, copy=True)
    else:
        d = 0.5 * squareform(pdist(x, metric="sqeuclidean"))
        centroids = x.copy()
    np.fill_diagonal(d, np.inf)
    sizes = np.ones(n, dtype=np.int64)
    ids = np.arange(n)
    active = np.ones(n, dtype=bool)
    row_min = d.min(axis=1)
    row_arg = d.argmin(axis=1)

    merges = []
    for step in range(n - 1):
        a = int(np.argmin(row_min))
        b = int(row_arg[a])
        # a is the lowest row holding the global minimum, so its partner is higher
        height = float(d[a, b])
        size = int(sizes[a] + sizes[b])
        merges.append(MergeStep(int(ids[a]), int(ids[b]), height, n + step, size))

        if linkage is Linkage.SINGLE:
            new = np.minimum(d[a], d[b])
        else:
            merged = (sizes[a] * centroids[a] + sizes[b] * centroids[b]) / size
            centroids[a] = merged
            new = sizes * size / (sizes + size) * np.sum((centroids - merged) ** 2, axis=1)
        active[b] = False
        new[~active] = np.inf
        new[a] = np.inf
        d[a, :] = new
        d[:, a] = new
        d[b, :] = np.inf
        d[:, b] = np.inf
        sizes[a] = size
        ids[a] = n + step
        row_min[b] = np.inf

        stale = active & ((row_arg == a) | (row_arg == b))
        stale[a] = True
        if stale.any():
            rows = np.flatnonzero(stale)
            row_min[rows] = d[rows].min(axis=1)
            row_arg[rows] = d[rows].argmin(axis=1)
        fresh = active & ~stale
        better = fresh & ((new < row_min) | ((new == row_min) & (a < row_arg)))
        row_min[better] = new[better]
        row_arg[better] = a
        if not active.any():
            break
    return merges


def cut_dendrogram(merges: list[MergeStep], k: int) -> ClusterAssignment:
    """Undo the last ``k - 1`` merges.

    Cluster ids are numbered by first appearance in point order.
    """
    n = len(merges) + 1
    if not 1 <= k <= n:
        raise ValidationError(f"k={k} outside [1, {n}]")
    parent = np.arange(2 * n - 1)
    for step in merges[: n - k]:
        parent[step.left] = step.new_id
        parent[step.right] = step.new_id

    def root(i: int) -> int:
        while parent[i] != i:
            i = parent[i]
        return i

    roots = [root(i) for i in range(n)]
    numbering: dict[int, int] = {}
    labels = [numbering.setdefault(r, len(numbering)) for r in roots]
    return ClusterAssignment(np.array(labels), k)


def contingency(cluster_labels, class_labels, k: int, n_classes: int) -> np.ndarray:
    table = np.zeros((k, n_classes), dtype=np.int64)
    np.add.at(table, (np.asarray(cluster_labels), np.asarray(class_labels)), 1)
    return table


def map_clusters_to_labels(assignment: ClusterAssignment, predictions: PredictionVector) -> dict[int, int]:
    """One-to-one cluster -> class mapping maximizing the number of matched members.

    Exhaustive over all k! bijections for k <= 8 (first maximum in
    lexicographic order wins), greedy largest-cell-first above that.
    """
    if not predictions.is_classification:
        raise ValidationError("cluster mapping needs class labels")
    k = predictions.n_classes
    if assignment.k != k:
        raise DimensionMismatch("cluster count", k, assignment.k)
    table = contingency(assignment.labels, predictions.values, k, k)
    if k <= 8:
        perms = np.array(list(itertools.permutations(range(k))))
        scores = table[np.arange(k), perms].sum(axis=1)
        best = perms[int(np.argmax(scores))]
        return {c: int(best[c]) for c in range(k)}
    order = sorted(
        ((int(table[c, l]), c, l) for c in range(k) for l in range(k)),
        key=lambda t: (-t[0], t[1], t[2]),
    )
    mapping: dict[int, int] = {}
    used: set[int] = set()
    for _, c, label in order:
        if c not in mapping and label not in used:
            mapping[c] = label
            used.add(label)
    return dict(sorted(mapping.items()))
