"""The identity, separability and stability checks, exact formulations.

Regression stability compares distance matrices column by column with
Spearman's rho; classification stability clusters the explanations into one
cluster per class and checks that each object's explanation lands in the
cluster of its predicted class.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from enum import Enum
from typing import Any, Callable

import numpy as np

from ._parallel import ordered_map
from .clustering import (
    ClusterAssignment,
    Linkage,
    agnes,
    cut_dendrogram,
    group_means,
    kmeans_seeded,
    map_clusters_to_labels,
)
from .core import (
    AugmentedObjectSet,
    Axiom,
    AxiomVerdict,
    ClusteringAlgorithm,
    ClusterSimilarityTable,
    DistanceMatrix,
    ExplanationSet,
    ObjectSet,
    PredictionVector,
    RhoSummary,
)
from .errors import DimensionMismatch, ExplainerFailure, ValidationError
from .metrics import jaccard, spearman_rho_rows

DOF_CAVEAT = (
    "separability presumes the model has no more degrees of freedom than its "
    "prediction function needs; this is not verified"
)

ExplainFn = Callable[[np.ndarray, Any], np.ndarray]


class PairCounting(str, Enum):
    ORDERED = "ordered"
    UNORDERED = "unordered"


class LargeRegressionStability(str, Enum):
    BINNED = "binned"
    SUBSAMPLE = "subsample"


@dataclass(frozen=True)
class EcfConfig:
    identity_repeats: int = 2
    equality_tolerance: float = 1e-9
    stability_clustering: ClusteringAlgorithm = ClusteringAlgorithm.KMEANS_INFORMED
    pair_counting: PairCounting = PairCounting.ORDERED
    regression_bins: int = 10
    exact_threshold: int = 6000
    large_regression_stability: LargeRegressionStability = LargeRegressionStability.BINNED
    subsample_size: int = 2000
    identity_sample_size: int = 1000
    include_prediction_in_distance: bool = True
    kmeans_max_iter: int = 300
    kmeans_tol: float = 1e-6
    seed: int = 0
    reentrant_explainer: bool = False

    def __post_init__(self):
        for name, enum in (
            ("stability_clustering", ClusteringAlgorithm),
            ("pair_counting", PairCounting),
            ("large_regression_stability", LargeRegressionStability),
        ):
            object.__setattr__(self, name, enum(getattr(self, name)))
        if self.identity_repeats < 2:
            raise ValidationError("identity_repeats must be >= 2")
        if not 0 <= self.equality_tolerance < 1:
            raise ValidationError("equality_tolerance must lie in [0, 1)")
        if self.regression_bins < 2:
            raise ValidationError("regression_bins must be >= 2")
        if self.exact_threshold < 1:
            raise ValidationError("exact_threshold must be >= 1")

    def to_dict(self) -> dict[str, Any]:
        return {k: (v.value if isinstance(v, Enum) else v) for k, v in asdict(self).items()}


def values_equal(a, b, tol: float) -> np.ndarray:
    """Elementwise ``|a - b| <= tol * max(1, |a|, |b|)``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))
    return np.abs(a - b) <= tol * scale


def rows_equal(a, b, tol: float) -> np.ndarray:
    """True where two rows agree in every coordinate (broadcasts over rows)."""
    return np.all(values_equal(a, b, tol), axis=-1)


def _explain_row(explain: ExplainFn, x: np.ndarray, prediction, row: int, m: int) -> np.ndarray:
    try:
        out = np.asarray(explain(x, prediction), dtype=float).reshape(-1)
    except Exception as exc:  # noqa: BLE001 - wrapped with the row index
        raise ExplainerFailure(row, f"{type(exc).__name__}: {exc}") from exc
    if out.shape != (m,):
        raise ExplainerFailure(row, f"expected {m} importances, got shape {out.shape}")
    return out


def check_identity(
    explain: ExplainFn,
    augmented: AugmentedObjectSet,
    config: EcfConfig = EcfConfig(),
    rows=None,
    method: str = "exact",
) -> AxiomVerdict:
    """Explain each object ``identity_repeats`` times and compare the results.

    An object violates identity when any two of its repeated explanations
    differ beyond the equality tolerance in some coordinate. ``rows`` limits
    the probe to a subset (one check per listed row).
    """
    features = augmented.objects.features
    predictions = augmented.predictions
    rows = range(augmented.n) if rows is None else [int(r) for r in rows]
    m = augmented.m
    tol = config.equality_tolerance

    def probe(i: int) -> bool:
        x = features[i].copy()
        outs = [_explain_row(explain, x, predictions.item(i), i, m) for _ in range(config.identity_repeats)]
        return any(
            not rows_equal(outs[a], outs[b], tol)
            for a in range(len(outs))
            for b in range(a + 1, len(outs))
        )

    flags = ordered_map(probe, rows, parallel=config.reentrant_explainer)
    return AxiomVerdict(Axiom.IDENTITY, len(flags), sum(flags), method=method)


def separability_partner_counts(objects: ObjectSet, explanations: ExplanationSet, tol: float) -> np.ndarray:
    """For each object, how many other objects violate separability with it.

    A pair violates when the objects differ (beyond ``tol``) but their
    explanations are equal (within ``tol``). Exhaustive O(n^2) scan.
    """
    x = objects.features
    e = explanations.importances
    n, m = e.shape
    counts = np.zeros(n, dtype=np.int64)
    block = max(1, min(n, 4_000_000 // max(n, 1)))
    for start in range(0, n, block):
        stop = min(n, start + block)
        eq = np.ones((stop - start, n), dtype=bool)
        for j in range(m):
            eq &= values_equal(e[start:stop, j, None], e[None, :, j], tol)
        eq[np.arange(stop - start), np.arange(start, stop)] = False
        r, c = np.nonzero(eq)
        if r.size:
            differ = ~rows_equal(x[start + r], x[c], tol)
            counts[start:stop] += np.bincount(r[differ], minlength=stop - start)
    return counts


def check_separability(
    objects: ObjectSet, explanations: ExplanationSet, config: EcfConfig = EcfConfig()
) -> AxiomVerdict:
    """Exact pairwise separability check on raw feature rows.

    Pairs of identical objects count as satisfied. Ordered counting checks
    n(n-1) pairs, unordered n(n-1)/2.
    """
    if explanations.n != objects.n:
        raise DimensionMismatch("explanations rows", objects.n, explanations.n)
    if explanations.m != objects.m:
        raise DimensionMismatch("explanations columns", objects.m, explanations.m)
    n = objects.n
    if n < 2:
        raise ValidationError("separability needs at least 2 objects")
    counts = separability_partner_counts(objects, explanations, config.equality_tolerance)
    ordered_violations = int(counts.sum())
    if config.pair_counting is PairCounting.ORDERED:
        total, violated = n * (n - 1), ordered_violations
    else:
        total, violated = n * (n - 1) // 2, ordered_violations // 2
    return AxiomVerdict(
        Axiom.SEPARABILITY, total, violated, method=f"exact-pairs-{config.pair_counting.value}", notes=(DOF_CAVEAT,)
    )


def _off_diagonal_columns(d: np.ndarray) -> np.ndarray:
    n = d.shape[0]
    cols = d.T
    return cols[~np.eye(n, dtype=bool)].reshape(n, n - 1)


def check_stability_regression(d_z: DistanceMatrix, d_e: DistanceMatrix) -> tuple[AxiomVerdict, RhoSummary]:
    """Column j passes iff Spearman's rho between column j of both matrices is > 0.

    The structural zero at row j is excluded from column j. Constant columns
    have no defined rho; they are reported and counted as violated.
    """
    if d_z.n != d_e.n:
        raise DimensionMismatch("distance matrix size", d_z.n, d_e.n)
    n = d_z.n
    if n < 4:
        raise ValidationError(f"regression stability needs n >= 4, got {n}")
    rhos = spearman_rho_rows(_off_diagonal_columns(d_z.entries), _off_diagonal_columns(d_e.entries))
    violated = int(np.sum(~(rhos > 0)))
    summary = RhoSummary.from_rhos(rhos)
    notes = ()
    if summary.degenerate_columns:
        notes = (f"{len(summary.degenerate_columns)} degenerate columns counted as violated",)
    return AxiomVerdict(Axiom.STABILITY, n, violated, method="exact-rho", notes=notes), summary


def cluster_explanations(
    points: np.ndarray, groups: PredictionVector, algorithm: ClusteringAlgorithm, config: EcfConfig
) -> tuple[ClusterAssignment, dict[int, int]]:
    """Cluster ``points`` into one cluster per group and map clusters to groups."""
    k = groups.n_classes
    algorithm = ClusteringAlgorithm(algorithm)
    if algorithm is ClusteringAlgorithm.KMEANS_INFORMED:
        init = group_means(points, groups.values, k)
        assignment = kmeans_seeded(points, init, config.kmeans_max_iter, config.kmeans_tol)
        return assignment, {c: c for c in range(k)}
    linkage = Linkage.SINGLE if algorithm is ClusteringAlgorithm.AGNES_SINGLE else Linkage.WARD
    assignment = cut_dendrogram(agnes(points, linkage), k)
    return assignment, map_clusters_to_labels(assignment, groups)


def group_stability(
    points: np.ndarray,
    group_labels,
    n_groups: int,
    algorithm: ClusteringAlgorithm,
    config: EcfConfig,
    method: str,
) -> tuple[AxiomVerdict, ClusterSimilarityTable]:
    """Shared machinery for class labels and regression bins."""
    labels = np.asarray(group_labels, dtype=np.int64)
    n = labels.size
    if n_groups == 1:
        table = ClusterSimilarityTable({0: 1.0}, algorithm, ("single group: stability holds trivially",))
        return AxiomVerdict(Axiom.STABILITY, n, 0, method=method, notes=table.notes), table
    groups = PredictionVector.classification(labels, n_groups)
    assignment, mapping = cluster_explanations(points, groups, algorithm, config)
    lookup = np.array([mapping[c] for c in range(n_groups)])
    mapped = lookup[assignment.labels]
    violated = int(np.sum(mapped != labels))
    per_label = {
        c: jaccard(np.flatnonzero(labels == c).tolist(), np.flatnonzero(mapped == c).tolist())
        for c in range(n_groups)
    }
    table = ClusterSimilarityTable(per_label, algorithm)
    return AxiomVerdict(Axiom.STABILITY, n, violated, method=method), table


def check_stability_classification(
    explanations: ExplanationSet, predictions: PredictionVector, config: EcfConfig = EcfConfig()
) -> tuple[AxiomVerdict, ClusterSimilarityTable]:
    if not predictions.is_classification:
        raise ValidationError("classification stability needs class labels")
    if len(predictions) != explanations.n:
        raise DimensionMismatch("predictions rows", explanations.n, len(predictions))
    algorithm = config.stability_clustering
    return group_stability(
        explanations.importances,
        predictions.values,
        predictions.n_classes,
        algorithm,
        config,
        method=f"clusters-{algorithm.value}",
    )
