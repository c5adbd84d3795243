"""Distance, rank-correlation and set-similarity primitives."""
from __future__ import annotations

from typing import Callable

import numpy as np
from scipy.spatial.distance import pdist, squareform
from scipy.stats import rankdata

from .core import DistanceMatrix
from .errors import BothEmpty, DegenerateInput, DimensionMismatch, ValidationError


def euclidean(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatch("vector length", a.size, b.size)
    return float(np.sqrt(np.sum((a - b) ** 2)))


def _euclidean_rows(rows: np.ndarray) -> np.ndarray:
    return squareform(pdist(rows, metric="euclidean"))


# Single seam for alternative metrics; axiom code only calls pairwise_distances.
DISTANCES: dict[str, Callable[[np.ndarray], np.ndarray]] = {"euclidean": _euclidean_rows}


def pairwise_distances(rows, metric: str = "euclidean") -> DistanceMatrix:
    """Full n x n distance matrix between the rows of ``rows``."""
    rows = np.asarray(rows, dtype=float)
    if rows.ndim == 1:
        rows = rows[:, None]
    if rows.shape[0] < 2:
        raise ValidationError(f"pairwise distances need at least 2 rows, got {rows.shape[0]}")
    try:
        fn = DISTANCES[metric]
    except KeyError:
        raise ValidationError(f"unknown distance metric {metric!r}") from None
    return DistanceMatrix(fn(rows))


def rank_average_ties(values) -> np.ndarray:
    """Descending ranks (largest value gets rank 1); ties share their mean rank."""
    values = np.asarray(values, dtype=float)
    return rankdata(-values, method="average")


def _pearson_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = a - a.mean(axis=-1, keepdims=True)
    b = b - b.mean(axis=-1, keepdims=True)
    num = np.sum(a * b, axis=-1)
    den = np.sqrt(np.sum(a * a, axis=-1) * np.sum(b * b, axis=-1))
    with np.errstate(invalid="ignore", divide="ignore"):
        r = num / den
    r = np.where(den > 0, r, np.nan)
    return np.clip(r, -1.0, 1.0)


def spearman_rho(u, v) -> float:
    """Spearman's rank correlation, tie-corrected (Pearson on average ranks).

    Without ties this equals ``1 - 6 * sum(D**2) / (n * (n**2 - 1))``.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape or u.ndim != 1:
        raise DimensionMismatch("sequence length", u.size, v.size)
    if u.size < 3:
        raise DegenerateInput(f"spearman_rho needs at least 3 pairs, got {u.size}")
    if np.ptp(u) == 0 or np.ptp(v) == 0:
        raise DegenerateInput("spearman_rho is undefined for a constant sequence")
    return float(_pearson_rows(rank_average_ties(u), rank_average_ties(v)))


def spearman_rho_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise Spearman rho between two equally shaped matrices.

    Rows that are constant in either input yield NaN instead of raising.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatch("matrix shape", a.size, b.size)
    ra = rankdata(-a, method="average", axis=1)
    rb = rankdata(-b, method="average", axis=1)
    rho = _pearson_rows(ra, rb)
    constant = (np.ptp(a, axis=1) == 0) | (np.ptp(b, axis=1) == 0)
    return np.where(constant, np.nan, rho)


def jaccard(a, b) -> float:
    a = set(a)
    b = set(b)
    union = a | b
    if not union:
        raise BothEmpty()
    return len(a & b) / len(union)
