"""Large-n approximations of the consistency checks.

* identity on a seeded random sample of objects,
* separability as a per-object duplicate scan in O(n log n),
* regression stability via quantile bins treated as pseudo-classes,
* stratified sub-sampling that preserves the label distribution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .axioms import DOF_CAVEAT, EcfConfig, ExplainFn, check_identity, group_stability, rows_equal
from .core import (
    AugmentedObjectSet,
    Axiom,
    AxiomVerdict,
    ClusteringAlgorithm,
    ClusterSimilarityTable,
    ExplanationSet,
    ObjectSet,
    PredictionVector,
)
from .errors import AllPredictionsEqual, ClassTooSmall, DimensionMismatch, ValidationError

_MAX_CANDIDATES = 2_000_000


def probe_identity_sampled(
    explain: ExplainFn,
    augmented: AugmentedObjectSet,
    sample_size: int,
    repeats: int = 2,
    seed: int = 0,
    config: EcfConfig = EcfConfig(),
) -> AxiomVerdict:
    if not 1 <= sample_size <= augmented.n:
        raise ValidationError(f"sample_size={sample_size} outside [1, {augmented.n}]")
    rng = np.random.default_rng(seed)
    rows = np.sort(rng.choice(augmented.n, size=sample_size, replace=False))
    cfg = replace(config, identity_repeats=repeats)
    return check_identity(explain, augmented, cfg, rows=rows, method=f"sampled-{sample_size}")


def _tolerance_neighbours(reps: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Index pairs (u, v), u != v, of distinct rows that are equal within ``tol``.

    Candidates come from a sorted scan along the widest coordinate; any pair
    equal within tolerance is at most ``tol * max(1, max|value|)`` apart
    there. Every candidate is confirmed on all coordinates.
    """
    q = reps.shape[0]
    if q < 2:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    col = int(np.argmax(np.ptp(reps, axis=0)))
    values = reps[:, col]
    order = np.argsort(values, kind="stable")
    sorted_vals = values[order]
    window = tol * max(1.0, float(np.max(np.abs(values))))
    upper = np.nextafter(sorted_vals + window * (1 + 1e-12), np.inf)
    hi = np.searchsorted(sorted_vals, upper, side="right")
    spans = hi - np.arange(q) - 1

    us, vs = [], []
    start = 0
    while start < q:
        # group positions so each batch materializes at most _MAX_CANDIDATES pairs
        cum = np.cumsum(spans[start:])
        stop = start + max(1, int(np.searchsorted(cum, _MAX_CANDIDATES, side="right")))
        lengths = spans[start:stop]
        total = int(lengths.sum())
        if total:
            left = np.repeat(np.arange(start, stop), lengths)
            offsets = np.arange(total) - np.repeat(np.cumsum(lengths) - lengths, lengths)
            right = left + 1 + offsets
            a, b = order[left], order[right]
            ok = rows_equal(reps[a], reps[b], tol)
            us.append(a[ok])
            vs.append(b[ok])
        start = stop
    if not us:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    return np.concatenate(us), np.concatenate(vs)


def duplicate_violations(objects: ObjectSet, explanations: ExplanationSet, tol: float) -> np.ndarray:
    """Boolean mask of objects sharing an (approximately) equal explanation
    with at least one object whose features differ.

    Matches the exhaustive pairwise definition exactly, without the O(n^2)
    scan. Explanations are first grouped by exact equality, then groups whose
    representatives agree within ``tol`` are linked. An object is clean iff
    every object in its own and linked groups equals it within ``tol``; since
    the relative tolerance grows more slowly than the gap (tol < 1), checking
    the per-coordinate extremes of that pool is sufficient.
    """
    if explanations.n != objects.n:
        raise DimensionMismatch("explanations rows", objects.n, explanations.n)
    if not 0 <= tol < 1:
        raise ValidationError("tolerance must lie in [0, 1)")
    x = objects.features
    reps, group = np.unique(explanations.importances, axis=0, return_inverse=True)
    group = group.reshape(-1)
    q = reps.shape[0]

    lo = np.full((q, x.shape[1]), np.inf)
    hi = np.full((q, x.shape[1]), -np.inf)
    np.minimum.at(lo, group, x)
    np.maximum.at(hi, group, x)
    u, v = _tolerance_neighbours(reps, tol)
    pool_lo, pool_hi = lo.copy(), hi.copy()
    for a, b in ((u, v), (v, u)):
        np.minimum.at(pool_lo, a, lo[b])
        np.maximum.at(pool_hi, a, hi[b])

    clean = rows_equal(x, pool_lo[group], tol) & rows_equal(x, pool_hi[group], tol)
    return ~clean


def duplicate_separability(
    objects: ObjectSet, explanations: ExplanationSet, config: EcfConfig = EcfConfig()
) -> AxiomVerdict:
    """Per-object separability verdict (checks_total = n) from a duplicate scan."""
    violated = duplicate_violations(objects, explanations, config.equality_tolerance)
    return AxiomVerdict(
        Axiom.SEPARABILITY, objects.n, int(violated.sum()), method="duplicate-scan", notes=(DOF_CAVEAT,)
    )


@dataclass(frozen=True)
class BinAssignment:
    """Quantile bins over regression predictions.

    Bin ``k`` holds values in ``(edges[k], edges[k + 1]]``; the first bin
    also includes ``edges[0]`` (the minimum).
    """

    edges: np.ndarray
    labels: np.ndarray

    @property
    def n_bins(self) -> int:
        return len(self.edges) - 1


def bin_predictions(predictions: PredictionVector, bins: int) -> BinAssignment:
    """Equal-count (quantile) binning; coinciding edges and empty bins are merged away."""
    if predictions.is_classification:
        raise ValidationError("binning applies to regression predictions")
    if bins < 2:
        raise ValidationError("bins must be >= 2")
    values = predictions.values
    if len(values) < bins:
        raise ValidationError(f"cannot form {bins} bins from {len(values)} predictions")
    lo, top = float(values.min()), float(values.max())
    if lo == top:
        raise AllPredictionsEqual()
    inner = np.unique(np.quantile(values, np.linspace(0, 1, bins + 1)[1:-1]))
    inner = inner[inner < top]
    raw = np.searchsorted(inner, values, side="left")
    occupied = np.unique(raw)
    relabel = np.full(len(inner) + 1, -1)
    relabel[occupied] = np.arange(occupied.size)
    # the boundary below occupied bin b is the upper edge of raw bin b - 1
    boundaries = [inner[b - 1] for b in occupied[1:]]
    edges = np.array([lo, *boundaries, top])
    return BinAssignment(edges, relabel[raw])


def binned_stability_regression(
    explanations: ExplanationSet, bins: BinAssignment, config: EcfConfig = EcfConfig()
) -> tuple[AxiomVerdict, ClusterSimilarityTable]:
    """Regression stability with prediction bins standing in for classes."""
    if len(bins.labels) != explanations.n:
        raise DimensionMismatch("bin labels", explanations.n, len(bins.labels))
    verdict, table = group_stability(
        explanations.importances,
        bins.labels,
        bins.n_bins,
        ClusteringAlgorithm.KMEANS_INFORMED,
        config,
        method=f"binned-{bins.n_bins}",
    )
    if bins.n_bins == 1:
        note = "degenerate binning: all predictions fell into one bin"
        verdict = replace(verdict, notes=verdict.notes + (note,))
        table = replace(table, notes=table.notes + (note,))
    return verdict, table


def stratified_sample(predictions: PredictionVector, fraction: float, seed: int = 0) -> np.ndarray:
    """Seeded per-class sample without replacement, sorted ascending.

    Per-class sizes follow the largest-remainder rule so they sum to
    ``round(n * fraction)``.
    """
    if not predictions.is_classification:
        raise ValidationError("stratified sampling needs class labels")
    if not 0 < fraction <= 1:
        raise ValidationError("fraction must lie in (0, 1]")
    labels = predictions.values
    counts = np.bincount(labels, minlength=predictions.n_classes)
    for label, count in enumerate(counts):
        if count * fraction < 1:
            raise ClassTooSmall(label, int(count), fraction)
    raw = counts * fraction
    take = np.floor(raw).astype(np.int64)
    target = int(math.floor(len(labels) * fraction + 0.5))
    remainder = target - int(take.sum())
    by_fraction = sorted(range(len(counts)), key=lambda c: (-(raw[c] - take[c]), c))
    for c in by_fraction[:remainder]:
        take[c] += 1
    take = np.minimum(take, counts)

    rng = np.random.default_rng(seed)
    chosen = [
        rng.choice(np.flatnonzero(labels == c), size=int(take[c]), replace=False)
        for c in range(len(counts))
    ]
    return np.sort(np.concatenate(chosen))
