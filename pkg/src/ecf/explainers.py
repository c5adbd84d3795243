"""Reference prediction models and explanation methods.

Models: ``LinearModel`` (with an OLS fitter), ``KnnModel`` and
``SoftmaxModel``. Explainers: exact Shapley values under marginal masking
and a local linear surrogate fitted to kernel-weighted Gaussian
perturbations. Explainers are callables ``explainer(x, prediction)``; for
classifiers they explain the model's score for the given class label.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ._parallel import ordered_map
from .core import AugmentedObjectSet, ExplanationSet, Task
from .errors import (
    DegenerateWeights,
    DimensionMismatch,
    ExplainerFailure,
    RankDeficient,
    TooManyFeatures,
    ValidationError,
)

RIDGE_LAMBDA = 1e-8


class PredictionModel:
    """Deterministic black box: ``predict_batch`` is the only required method.

    Classifiers also implement ``class_scores(X)`` returning an (n, L) matrix
    whose row-wise argmax is the predicted label.
    """

    task: Task = Task.REGRESSION
    n_features: int

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def class_scores(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} has no class scores")

    def predict(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_features,):
            raise DimensionMismatch("model input length", self.n_features, x.size)
        out = self.predict_batch(x[None, :])[0]
        return int(out) if self.task is Task.CLASSIFICATION else float(out)

    def value_batch(self, X: np.ndarray, label: int | None = None) -> np.ndarray:
        """Real-valued output an explainer attributes: the prediction for
        regression, the score of ``label`` for classification."""
        if self.task is Task.REGRESSION:
            return self.predict_batch(X)
        if label is None:
            raise ValidationError("explaining a classifier needs the class label")
        return self.class_scores(X)[:, int(label)]

    def describe(self) -> dict[str, Any]:
        return {"model": type(self).__name__, "task": self.task.value, "n_features": self.n_features}


@dataclass(frozen=True)
class LinearModel(PredictionModel):
    intercept: float
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float).reshape(-1))

    @property
    def n_features(self) -> int:
        return self.weights.size

    def predict_batch(self, X):
        return self.intercept + np.asarray(X, dtype=float) @ self.weights


def fit_linear(features, targets) -> LinearModel:
    """Ordinary least squares through the normal equations.

    Falls back to a ridge penalty of 1e-8 on the slopes when the design
    matrix (with intercept column) is rank deficient.
    """
    X = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float).reshape(-1)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise DimensionMismatch("target rows", X.shape[0] if X.ndim == 2 else -1, y.size)
    n, m = X.shape
    if n <= m:
        raise ValidationError(f"fit_linear needs n > m, got n={n}, m={m}")
    design = np.column_stack([np.ones(n), X])
    gram = design.T @ design
    rhs = design.T @ y
    if np.linalg.matrix_rank(design) < m + 1:
        penalty = RIDGE_LAMBDA * np.eye(m + 1)
        penalty[0, 0] = 0.0
        gram = gram + penalty
        if np.linalg.cond(gram) > 1 / np.finfo(float).eps:
            raise RankDeficient("design matrix is singular even with the ridge fallback")
    try:
        beta = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as exc:
        raise RankDeficient(str(exc)) from exc
    return LinearModel(float(beta[0]), beta[1:])


@dataclass(frozen=True)
class KnnModel(PredictionModel):
    """k-nearest-neighbour regressor or majority-vote classifier.

    Neighbours are ordered by (distance, training index); vote ties go to the
    lowest label.
    """

    train_features: np.ndarray
    train_targets: np.ndarray
    k: int = 5
    task: Task = Task.REGRESSION
    n_classes: int | None = None

    def __post_init__(self):
        X = np.asarray(self.train_features, dtype=float)
        y = np.asarray(self.train_targets)
        if X.ndim != 2 or X.shape[0] != y.size:
            raise DimensionMismatch("training targets", X.shape[0] if X.ndim == 2 else -1, y.size)
        if not 1 <= self.k <= X.shape[0]:
            raise ValidationError(f"k={self.k} outside [1, {X.shape[0]}]")
        task = Task(self.task)
        object.__setattr__(self, "task", task)
        object.__setattr__(self, "train_features", X)
        if task is Task.CLASSIFICATION:
            y = y.astype(np.int64)
            object.__setattr__(self, "n_classes", self.n_classes or int(y.max()) + 1)
        else:
            y = y.astype(float)
        object.__setattr__(self, "train_targets", y)

    @property
    def n_features(self) -> int:
        return self.train_features.shape[1]

    def _neighbours(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.empty((X.shape[0], self.k), dtype=np.int64)
        step = max(1, 2_000_000 // (self.train_features.shape[0] * self.n_features))
        for s in range(0, X.shape[0], step):
            block = X[s : s + step]
            d2 = np.sum((block[:, None, :] - self.train_features[None]) ** 2, axis=2)
            out[s : s + step] = np.argsort(d2, axis=1, kind="stable")[:, : self.k]
        return out

    def class_scores(self, X):
        if self.task is not Task.CLASSIFICATION:
            return super().class_scores(X)
        votes = self.train_targets[self._neighbours(X)]
        scores = np.zeros((votes.shape[0], self.n_classes))
        for c in range(self.n_classes):
            scores[:, c] = np.sum(votes == c, axis=1)
        return scores / self.k

    def predict_batch(self, X):
        if self.task is Task.CLASSIFICATION:
            return np.argmax(self.class_scores(X), axis=1)
        return self.train_targets[self._neighbours(X)].mean(axis=1)

    def describe(self):
        return {**super().describe(), "k": self.k, "n_train": int(self.train_features.shape[0])}


@dataclass(frozen=True)
class SoftmaxModel(PredictionModel):
    """Multinomial linear classifier with logits ``intercepts + W x``.

    ``output`` selects what ``class_scores`` returns, and therefore what an
    explainer attributes: the raw logits (default) or softmax probabilities.
    Both give the same predicted label.
    """

    intercepts: np.ndarray
    weights: np.ndarray
    output: str = "logit"
    task: Task = field(default=Task.CLASSIFICATION, init=False)

    def __post_init__(self):
        if self.output not in ("logit", "probability"):
            raise ValidationError(f"output must be 'logit' or 'probability', got {self.output!r}")
        object.__setattr__(self, "intercepts", np.asarray(self.intercepts, dtype=float).reshape(-1))
        object.__setattr__(self, "weights", np.atleast_2d(np.asarray(self.weights, dtype=float)))
        if self.weights.shape[0] != self.intercepts.size or self.intercepts.size < 2:
            raise ValidationError("softmax model needs one intercept and weight row per class (>= 2)")

    @classmethod
    def from_centroids(cls, centroids, scale: float = 1.0, output: str = "logit") -> "SoftmaxModel":
        """Gaussian nearest-centroid posterior: logit_c = scale * (c.x - |c|^2 / 2)."""
        c = np.asarray(centroids, dtype=float)
        return cls(-0.5 * scale * np.sum(c**2, axis=1), scale * c, output)

    @property
    def n_features(self) -> int:
        return self.weights.shape[1]

    @property
    def n_classes(self) -> int:
        return self.intercepts.size

    def class_scores(self, X):
        logits = self.intercepts + np.asarray(X, dtype=float) @ self.weights.T
        if self.output == "logit":
            return logits
        logits = logits - logits.max(axis=1, keepdims=True)
        p = np.exp(logits)
        return p / p.sum(axis=1, keepdims=True)

    def predict_batch(self, X):
        return np.argmax(self.class_scores(X), axis=1)

    def describe(self):
        return {**super().describe(), "n_classes": self.n_classes, "output": self.output}


def default_background(train_features, cap: int = 100, seed: int = 0) -> np.ndarray:
    """The training rows, subsampled without replacement to at most ``cap`` rows."""
    X = np.asarray(train_features, dtype=float)
    if X.shape[0] <= cap:
        return X.copy()
    rows = np.sort(np.random.default_rng(seed).choice(X.shape[0], size=cap, replace=False))
    return X[rows]


def _shapley_weights(m: int) -> np.ndarray:
    return np.array([math.factorial(s) * math.factorial(m - s - 1) / math.factorial(m) for s in range(m)])


@dataclass(frozen=True)
class ShapleyExplainer:
    """Exact Shapley values with the value of a coalition S defined by
    marginal masking: the mean model output over background rows, with the
    features outside S taken from the background row."""

    model: PredictionModel
    background: np.ndarray
    max_features_exact: int = 12

    def __post_init__(self):
        bg = np.atleast_2d(np.asarray(self.background, dtype=float))
        if bg.shape[0] < 1:
            raise ValidationError("background needs at least one row")
        if bg.shape[1] != self.model.n_features:
            raise DimensionMismatch("background columns", self.model.n_features, bg.shape[1])
        object.__setattr__(self, "background", bg)

    @property
    def m(self) -> int:
        return self.background.shape[1]

    def coalition_values(self, x, label: int | None = None) -> np.ndarray:
        """Value of every coalition, indexed by bitmask (bit i set = feature i kept)."""
        x = np.asarray(x, dtype=float).reshape(-1)
        m = self.m
        if x.size != m:
            raise DimensionMismatch("object length", m, x.size)
        if m > self.max_features_exact:
            raise TooManyFeatures(m, self.max_features_exact)
        masks = (np.arange(2**m)[:, None] >> np.arange(m)) & 1
        b = self.background.shape[0]
        hybrid = np.where(masks[:, None, :].astype(bool), x[None, None, :], self.background[None, :, :])
        out = self.model.value_batch(hybrid.reshape(-1, m), label)
        return np.asarray(out, dtype=float).reshape(2**m, b).mean(axis=1)

    def explain(self, x, prediction=None) -> np.ndarray:
        label = prediction if self.model.task is Task.CLASSIFICATION else None
        if label is None and self.model.task is Task.CLASSIFICATION:
            label = self.model.predict(x)
        values = self.coalition_values(x, label)
        m = self.m
        weights = _shapley_weights(m)
        subsets = np.arange(2**m)
        sizes = np.array([bin(s).count("1") for s in subsets])
        phi = np.zeros(m)
        for i in range(m):
            bit = 1 << i
            without = subsets[(subsets & bit) == 0]
            phi[i] = np.sum(weights[sizes[without]] * (values[without | bit] - values[without]))
        return phi

    __call__ = explain

    def describe(self) -> dict[str, Any]:
        return {
            "explainer": "shapley-exact",
            "background_rows": int(self.background.shape[0]),
            **self.model.describe(),
        }


def shapley_explain(explainer: ShapleyExplainer, x, prediction=None) -> np.ndarray:
    return explainer.explain(x, prediction)


def shapley_permutation_form(explainer: ShapleyExplainer, x, prediction=None) -> np.ndarray:
    """Average marginal contribution over all m! feature orderings (brute force)."""
    label = prediction if explainer.model.task is Task.CLASSIFICATION else None
    values = explainer.coalition_values(x, label)
    m = explainer.m
    phi = np.zeros(m)
    count = 0
    for order in itertools.permutations(range(m)):
        mask = 0
        for i in order:
            phi[i] += values[mask | (1 << i)] - values[mask]
            mask |= 1 << i
        count += 1
    return phi / count


@dataclass(frozen=True)
class SurrogateFit:
    coefficients: np.ndarray
    intercept: float
    samples: np.ndarray
    weights: np.ndarray
    targets: np.ndarray


@dataclass(frozen=True)
class SurrogateExplainer:
    """Local linear surrogate (LIME-style) for tabular data.

    Perturbations are drawn from independent per-feature Gaussians with the
    training means/STDs; each sample is weighted by
    ``exp(-d(x, z)**2 / kernel_width**2)`` with ``d`` Euclidean on
    standardized coordinates; a weighted least-squares fit of the model output
    on the samples gives the explanation (its slopes). With ``seed=None``
    every call draws fresh entropy, so repeated explanations differ.
    """

    model: PredictionModel
    feature_means: np.ndarray
    feature_stds: np.ndarray
    n_samples: int = 1000
    kernel_width: float | None = None
    seed: int | None = None

    def __post_init__(self):
        means = np.asarray(self.feature_means, dtype=float).reshape(-1)
        stds = np.asarray(self.feature_stds, dtype=float).reshape(-1)
        m = self.model.n_features
        if means.size != m or stds.size != m:
            raise DimensionMismatch("sampling summary length", m, means.size)
        if np.any(stds < 0):
            raise ValidationError("feature STDs must be non-negative")
        if self.n_samples < m + 2:
            raise ValidationError(f"n_samples must be >= m + 2 = {m + 2}")
        width = 0.75 * math.sqrt(m) if self.kernel_width is None else float(self.kernel_width)
        if width <= 0:
            raise ValidationError("kernel_width must be > 0")
        object.__setattr__(self, "feature_means", means)
        object.__setattr__(self, "feature_stds", stds)
        object.__setattr__(self, "kernel_width", width)

    @classmethod
    def from_training(cls, model: PredictionModel, train_features, **kwargs) -> "SurrogateExplainer":
        X = np.asarray(train_features, dtype=float)
        return cls(model, X.mean(axis=0), X.std(axis=0), **kwargs)

    def fit(self, x, prediction=None) -> SurrogateFit:
        x = np.asarray(x, dtype=float).reshape(-1)
        m = self.model.n_features
        if x.size != m:
            raise DimensionMismatch("object length", m, x.size)
        label = prediction if self.model.task is Task.CLASSIFICATION else None
        if label is None and self.model.task is Task.CLASSIFICATION:
            label = self.model.predict(x)
        rng = np.random.default_rng(self.seed)
        samples = rng.normal(self.feature_means, self.feature_stds, size=(self.n_samples, m))
        scale = np.where(self.feature_stds > 0, self.feature_stds, 1.0)
        dist2 = np.sum(((samples - x) / scale) ** 2, axis=1)
        weights = np.exp(-dist2 / self.kernel_width**2)
        if np.all(weights < 1e-300):
            raise DegenerateWeights()
        targets = np.asarray(self.model.value_batch(samples, label), dtype=float)
        design = np.column_stack([np.ones(self.n_samples), samples])
        root = np.sqrt(weights)
        beta, *_ = np.linalg.lstsq(design * root[:, None], targets * root, rcond=None)
        return SurrogateFit(beta[1:], float(beta[0]), samples, weights, targets)

    def explain(self, x, prediction=None) -> np.ndarray:
        return self.fit(x, prediction).coefficients

    __call__ = explain

    def describe(self) -> dict[str, Any]:
        return {
            "explainer": "surrogate-linear",
            "n_samples": self.n_samples,
            "kernel_width": self.kernel_width,
            "seed": self.seed,
            **self.model.describe(),
        }


def surrogate_explain(explainer: SurrogateExplainer, x, prediction=None) -> np.ndarray:
    return explainer.explain(x, prediction)


def explain_all(explainer, augmented: AugmentedObjectSet, parallel: bool = False) -> ExplanationSet:
    """Explain every object in order; failures carry the row index.

    ``parallel`` spreads rows over ``ECF_THREADS`` workers; only use it with
    explainers that hold no shared mutable state.
    """
    features = augmented.objects.features
    predictions = augmented.predictions
    m = augmented.m

    def one(i: int) -> np.ndarray:
        try:
            out = np.asarray(explainer(features[i].copy(), predictions.item(i)), dtype=float).reshape(-1)
        except Exception as exc:  # noqa: BLE001 - re-raised with the row index
            raise ExplainerFailure(i, f"{type(exc).__name__}: {exc}") from exc
        if out.size != m:
            raise ExplainerFailure(i, f"expected {m} importances, got {out.size}")
        return out

    rows = ordered_map(one, range(augmented.n), parallel=parallel)
    return ExplanationSet(np.vstack(rows))
