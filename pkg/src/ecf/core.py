"""Domain data model: objects, predictions, explanations, verdicts and reports.

All containers are frozen dataclasses holding read-only numpy arrays, so they
can be shared between workers without copying.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyClass, NonFiniteValue, ValidationError


class Task(str, Enum):
    REGRESSION = "regression"
    CLASSIFICATION = "classification"


class Axiom(str, Enum):
    IDENTITY = "identity"
    SEPARABILITY = "separability"
    STABILITY = "stability"


class ClusteringAlgorithm(str, Enum):
    KMEANS_INFORMED = "kmeans-informed"
    AGNES_SINGLE = "agnes-single"
    AGNES_WARD = "agnes-ward"


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


def _check_finite(matrix: np.ndarray, where: str) -> None:
    bad = ~np.isfinite(matrix)
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise NonFiniteValue(int(row), int(col), where)


def _as_matrix(values, where: str) -> np.ndarray:
    matrix = np.asarray(values, dtype=float)
    if matrix.ndim != 2:
        raise ValidationError(f"{where} must be a 2-D matrix, got {matrix.ndim}-D")
    if matrix.shape[0] < 1 or matrix.shape[1] < 1:
        raise ValidationError(f"{where} must have at least one row and one column")
    _check_finite(matrix, where)
    return matrix


@dataclass(frozen=True)
class ObjectSet:
    """Feature matrix of the objects being explained (n rows, m features)."""

    features: np.ndarray
    feature_names: tuple[str, ...] = ()

    def __post_init__(self):
        features = _as_matrix(self.features, "features")
        names = tuple(self.feature_names) or tuple(f"x{j}" for j in range(features.shape[1]))
        if len(names) != features.shape[1]:
            raise DimensionMismatch("feature_names", features.shape[1], len(names))
        if len(set(names)) != len(names):
            raise ValidationError("feature names must be unique")
        object.__setattr__(self, "features", _frozen(features))
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def m(self) -> int:
        return self.features.shape[1]

    def take(self, rows) -> "ObjectSet":
        return ObjectSet(self.features[np.asarray(rows)], self.feature_names)


@dataclass(frozen=True)
class PredictionVector:
    """Model outputs, one per object.

    Regression values are reals. Classification values are integer labels in
    ``[0, n_classes)``; every class must be present.
    """

    task: Task
    values: np.ndarray
    n_classes: int | None = None

    def __post_init__(self):
        task = Task(self.task)
        object.__setattr__(self, "task", task)
        raw = np.asarray(self.values)
        if raw.ndim != 1 or raw.size < 1:
            raise ValidationError("predictions must be a non-empty 1-D sequence")
        if task is Task.REGRESSION:
            values = raw.astype(float)
            _check_finite(values[:, None], "predictions")
            object.__setattr__(self, "n_classes", None)
        else:
            as_float = raw.astype(float)
            _check_finite(as_float[:, None], "predictions")
            if np.any(as_float != np.round(as_float)):
                raise ValidationError("classification labels must be integers")
            values = as_float.astype(np.int64)
            if values.min() < 0:
                raise ValidationError("classification labels must be non-negative")
            n_classes = self.n_classes if self.n_classes is not None else int(values.max()) + 1
            if n_classes < 2:
                raise ValidationError("classification needs at least two classes")
            if values.max() >= n_classes:
                raise ValidationError(f"label {values.max()} outside [0, {n_classes})")
            counts = np.bincount(values, minlength=n_classes)
            empty = np.flatnonzero(counts == 0)
            if empty.size:
                raise EmptyClass(int(empty[0]))
            object.__setattr__(self, "n_classes", int(n_classes))
        object.__setattr__(self, "values", _frozen(values))

    @classmethod
    def regression(cls, values) -> "PredictionVector":
        return cls(Task.REGRESSION, values)

    @classmethod
    def classification(cls, labels, n_classes: int | None = None) -> "PredictionVector":
        return cls(Task.CLASSIFICATION, labels, n_classes)

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def is_classification(self) -> bool:
        return self.task is Task.CLASSIFICATION

    def take(self, rows) -> "PredictionVector":
        sub = self.values[np.asarray(rows)]
        if self.is_classification:
            return PredictionVector(self.task, sub, self.n_classes)
        return PredictionVector(self.task, sub)

    def item(self, i: int):
        value = self.values[i]
        return int(value) if self.is_classification else float(value)


@dataclass(frozen=True)
class ExplanationSet:
    """Per-object feature importances (n rows, m features)."""

    importances: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "importances", _frozen(_as_matrix(self.importances, "explanations")))

    @property
    def n(self) -> int:
        return self.importances.shape[0]

    @property
    def m(self) -> int:
        return self.importances.shape[1]

    def take(self, rows) -> "ExplanationSet":
        return ExplanationSet(self.importances[np.asarray(rows)])


@dataclass(frozen=True)
class DistanceMatrix:
    entries: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.entries, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValidationError(f"distance matrix must be square, got shape {d.shape}")
        _check_finite(d, "distance matrix")
        if np.any(d < 0):
            raise ValidationError("distance matrix has negative entries")
        if np.any(np.diag(d) != 0):
            raise ValidationError("distance matrix diagonal must be zero")
        if not np.allclose(d, d.T, rtol=0.0, atol=1e-12):
            raise ValidationError("distance matrix is not symmetric")
        object.__setattr__(self, "entries", _frozen(d))

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def standardize_columns(matrix: np.ndarray) -> np.ndarray:
    """Z-score every column with the population STD; constant columns become 0."""
    matrix = np.asarray(matrix, dtype=float)
    out = np.zeros_like(matrix)
    for j in range(matrix.shape[1]):
        col = matrix[:, j]
        if np.ptp(col) == 0:
            continue
        centred = col - col.mean()
        out[:, j] = centred / centred.std()
    return out


@dataclass(frozen=True)
class AugmentedObjectSet:
    """Objects joined with their predictions and standardized for distances.

    For regression ``augmented`` has m+1 columns (features, then prediction);
    for classification it has the m standardized features only.
    """

    objects: ObjectSet
    predictions: PredictionVector
    augmented: np.ndarray

    @property
    def n(self) -> int:
        return self.objects.n

    @property
    def m(self) -> int:
        return self.objects.m

    @property
    def feature_part(self) -> np.ndarray:
        return self.augmented[:, : self.objects.m]

    def take(self, rows) -> "AugmentedObjectSet":
        rows = np.asarray(rows)
        return build_augmented(self.objects.take(rows), self.predictions.take(rows))


def validate_aligned(
    objects: ObjectSet,
    predictions: PredictionVector,
    explanations: ExplanationSet | None = None,
):
    """Check that objects, predictions and explanations describe the same rows.

    Returns the triple unchanged. Raises ``DimensionMismatch`` on the first
    misaligned axis. Non-finite entries are rejected when the containers are
    built, so they surface as ``NonFiniteValue`` before this point.
    """
    if len(predictions) != objects.n:
        raise DimensionMismatch("predictions rows", objects.n, len(predictions))
    if explanations is not None:
        if explanations.n != objects.n:
            raise DimensionMismatch("explanations rows", objects.n, explanations.n)
        if explanations.m != objects.m:
            raise DimensionMismatch("explanations columns", objects.m, explanations.m)
    return objects, predictions, explanations


def build_augmented(objects: ObjectSet, predictions: PredictionVector) -> AugmentedObjectSet:
    validate_aligned(objects, predictions)
    if predictions.task is Task.REGRESSION:
        raw = np.column_stack([objects.features, predictions.values])
    else:
        raw = objects.features
    return AugmentedObjectSet(objects, predictions, _frozen(standardize_columns(raw)))


@dataclass(frozen=True)
class AxiomVerdict:
    """Violated/satisfied counts for one axiom.

    ``assessed=False`` marks an axiom that could not be checked (for example
    identity without a callable explainer); its counts are all zero.
    """

    axiom: Axiom
    checks_total: int
    violated: int
    method: str = "exact"
    assessed: bool = True
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "axiom", Axiom(self.axiom))
        object.__setattr__(self, "checks_total", int(self.checks_total))
        object.__setattr__(self, "violated", int(self.violated))
        object.__setattr__(self, "notes", tuple(self.notes))
        if not 0 <= self.violated <= self.checks_total:
            raise ValidationError(
                f"violated={self.violated} outside [0, checks_total={self.checks_total}]"
            )

    @property
    def satisfied(self) -> int:
        return self.checks_total - self.violated

    @property
    def satisfied_fraction(self) -> float | None:
        if not self.assessed or self.checks_total == 0:
            return None
        return self.satisfied / self.checks_total

    @classmethod
    def not_assessed(cls, axiom: Axiom, reason: str) -> "AxiomVerdict":
        return cls(axiom, 0, 0, method="not-assessed", assessed=False, notes=(reason,))

    def to_dict(self) -> dict[str, Any]:
        return {
            "axiom": self.axiom.value,
            "assessed": self.assessed,
            "method": self.method,
            "checks_total": self.checks_total,
            "violated": self.violated,
            "satisfied": self.satisfied,
            "satisfied_fraction": self.satisfied_fraction,
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "AxiomVerdict":
        return cls(
            Axiom(data["axiom"]),
            data["checks_total"],
            data["violated"],
            method=data["method"],
            assessed=data["assessed"],
            notes=tuple(data.get("notes", ())),
        )


def _nan_to_none(x: float) -> float | None:
    return None if x is None or math.isnan(x) else float(x)


def _none_to_nan(x) -> float:
    return math.nan if x is None else float(x)


@dataclass(frozen=True)
class RhoSummary:
    """Per-column Spearman correlations between object and explanation distances.

    Degenerate columns (rho undefined) hold NaN in ``per_column_rho`` and are
    listed in ``degenerate_columns``; the aggregates ignore them.
    """

    min: float
    max: float
    mean: float
    median: float
    per_column_rho: tuple[float, ...]
    degenerate_columns: tuple[int, ...] = ()

    @classmethod
    def from_rhos(cls, rhos: Sequence[float]) -> "RhoSummary":
        rhos = np.asarray(rhos, dtype=float)
        finite = rhos[~np.isnan(rhos)]
        degenerate = tuple(int(i) for i in np.flatnonzero(np.isnan(rhos)))
        if finite.size == 0:
            stats = (math.nan,) * 4
        else:
            stats = (
                float(finite.min()),
                float(finite.max()),
                float(finite.mean()),
                float(np.median(finite)),
            )
        return cls(*stats, tuple(float(r) for r in rhos), degenerate)

    def to_dict(self) -> dict[str, Any]:
        return {
            "min": _nan_to_none(self.min),
            "max": _nan_to_none(self.max),
            "mean": _nan_to_none(self.mean),
            "median": _nan_to_none(self.median),
            "degenerate_columns": list(self.degenerate_columns),
            "per_column_rho": [_nan_to_none(r) for r in self.per_column_rho],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RhoSummary":
        return cls(
            _none_to_nan(data["min"]),
            _none_to_nan(data["max"]),
            _none_to_nan(data["mean"]),
            _none_to_nan(data["median"]),
            tuple(_none_to_nan(r) for r in data["per_column_rho"]),
            tuple(data.get("degenerate_columns", ())),
        )


@dataclass(frozen=True)
class ClusterSimilarityTable:
    """Jaccard similarity between each label's members and its explanation cluster."""

    per_label_jaccard: Mapping[int, float]
    algorithm: ClusteringAlgorithm
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "algorithm", ClusteringAlgorithm(self.algorithm))
        object.__setattr__(
            self,
            "per_label_jaccard",
            {int(k): float(v) for k, v in sorted(self.per_label_jaccard.items())},
        )
        object.__setattr__(self, "notes", tuple(self.notes))

    def to_dict(self) -> dict[str, Any]:
        return {
            "algorithm": self.algorithm.value,
            "per_label_jaccard": {str(k): v for k, v in self.per_label_jaccard.items()},
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ClusterSimilarityTable":
        return cls(
            {int(k): v for k, v in data["per_label_jaccard"].items()},
            ClusteringAlgorithm(data["algorithm"]),
            tuple(data.get("notes", ())),
        )


@dataclass(frozen=True)
class EvaluationReport:
    method_name: str
    task: Task
    verdicts: tuple[AxiomVerdict, AxiomVerdict, AxiomVerdict]
    rho_summary: RhoSummary | None = None
    cluster_table: ClusterSimilarityTable | None = None
    config_echo: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "task", Task(self.task))
        axioms = tuple(v.axiom for v in self.verdicts)
        if axioms != (Axiom.IDENTITY, Axiom.SEPARABILITY, Axiom.STABILITY):
            raise ValidationError(f"verdicts must be identity, separability, stability; got {axioms}")
        # binned large-n regression stability yields a cluster table instead of rhos
        if self.task is Task.REGRESSION and self.rho_summary is None and self.cluster_table is None:
            raise ValidationError("a regression report needs a rho summary or a binned cluster table")
        if self.task is Task.CLASSIFICATION and self.cluster_table is None:
            raise ValidationError("a classification report needs a cluster table")

    def verdict(self, axiom: Axiom | str) -> AxiomVerdict:
        axiom = Axiom(axiom)
        return next(v for v in self.verdicts if v.axiom is axiom)

    def to_dict(self) -> dict[str, Any]:
        return {
            "method_name": self.method_name,
            "task": self.task.value,
            "verdicts": [v.to_dict() for v in self.verdicts],
            "rho_summary": self.rho_summary.to_dict() if self.rho_summary else None,
            "cluster_table": self.cluster_table.to_dict() if self.cluster_table else None,
            "config": dict(self.config_echo),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "EvaluationReport":
        return cls(
            data["method_name"],
            Task(data["task"]),
            tuple(AxiomVerdict.from_dict(v) for v in data["verdicts"]),
            RhoSummary.from_dict(data["rho_summary"]) if data.get("rho_summary") else None,
            ClusterSimilarityTable.from_dict(data["cluster_table"]) if data.get("cluster_table") else None,
            dict(data.get("config", {})),
        )
