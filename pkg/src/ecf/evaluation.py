"""Top-level orchestration: run all three checks and assemble a report."""
from __future__ import annotations

import logging
from typing import Any, Mapping

import numpy as np

from .axioms import (
    EcfConfig,
    LargeRegressionStability,
    check_identity,
    check_separability,
    check_stability_classification,
    check_stability_regression,
)
from .core import (
    Axiom,
    AxiomVerdict,
    ClusteringAlgorithm,
    EvaluationReport,
    ExplanationSet,
    ObjectSet,
    PredictionVector,
    Task,
    build_augmented,
    validate_aligned,
)
from .errors import ValidationError
from .explainers import explain_all
from .metrics import pairwise_distances
from .scalable import (
    bin_predictions,
    binned_stability_regression,
    duplicate_separability,
    probe_identity_sampled,
)

log = logging.getLogger(__name__)


def evaluate(
    objects: ObjectSet,
    predictions: PredictionVector,
    explanations: ExplanationSet | None = None,
    explainer=None,
    config: EcfConfig = EcfConfig(),
    method_name: str = "explanations",
    extra_echo: Mapping[str, Any] | None = None,
) -> EvaluationReport:
    """Score one explanation method on one dataset.

    Pass a callable ``explainer(x, prediction)`` to have identity assessed
    (and, if ``explanations`` is omitted, to generate them). With only a
    static ``explanations`` matrix the identity verdict is marked not
    assessed. Datasets larger than ``config.exact_threshold`` rows switch to
    the sampled / duplicate-scan / binned heuristics.
    """
    if explanations is None and explainer is None:
        raise ValidationError("evaluate needs explanations, an explainer, or both")
    validate_aligned(objects, predictions)
    augmented = build_augmented(objects, predictions)
    if explanations is None:
        explanations = explain_all(explainer, augmented, parallel=config.reentrant_explainer)
    validate_aligned(objects, predictions, explanations)
    n = objects.n
    exact = n <= config.exact_threshold
    log.info("evaluating %s: n=%d m=%d exact=%s", method_name, n, objects.m, exact)

    if explainer is None:
        identity = AxiomVerdict.not_assessed(Axiom.IDENTITY, "no callable explainer supplied")
    elif exact:
        identity = check_identity(explainer, augmented, config)
    else:
        size = min(config.identity_sample_size, n)
        identity = probe_identity_sampled(
            explainer, augmented, size, config.identity_repeats, config.seed, config
        )

    if exact:
        separability = check_separability(objects, explanations, config)
    else:
        separability = duplicate_separability(objects, explanations, config)

    rho_summary = cluster_table = None
    if predictions.task is Task.REGRESSION:
        if exact:
            stability, rho_summary = _exact_regression_stability(augmented, explanations, config)
        elif config.large_regression_stability is LargeRegressionStability.SUBSAMPLE:
            rng = np.random.default_rng(config.seed)
            rows = np.sort(rng.choice(n, size=min(config.subsample_size, n), replace=False))
            stability, rho_summary = _exact_regression_stability(
                augmented.take(rows), explanations.take(rows), config
            )
            stability = AxiomVerdict(
                Axiom.STABILITY,
                stability.checks_total,
                stability.violated,
                method=f"subsample-{rows.size}-exact-rho",
                notes=stability.notes,
            )
        else:
            bins = bin_predictions(predictions, config.regression_bins)
            stability, cluster_table = binned_stability_regression(explanations, bins, config)
    else:
        cfg = config
        if not exact and config.stability_clustering is not ClusteringAlgorithm.KMEANS_INFORMED:
            cfg = EcfConfig(**{**config.to_dict(), "stability_clustering": ClusteringAlgorithm.KMEANS_INFORMED})
        stability, cluster_table = check_stability_classification(explanations, predictions, cfg)
        if cfg is not config:
            note = "AGNES skipped above exact_threshold; k-means with informed centroids used"
            stability = AxiomVerdict(
                Axiom.STABILITY, stability.checks_total, stability.violated, stability.method, notes=(note,)
            )

    echo = {**config.to_dict(), "n": n, "m": objects.m, "exact": exact}
    if explainer is not None and hasattr(explainer, "describe"):
        echo["explainer"] = explainer.describe()
    if extra_echo:
        echo.update(extra_echo)
    return EvaluationReport(
        method_name,
        predictions.task,
        (identity, separability, stability),
        rho_summary,
        cluster_table,
        echo,
    )


def _exact_regression_stability(augmented, explanations: ExplanationSet, config: EcfConfig):
    z = augmented.augmented if config.include_prediction_in_distance else augmented.feature_part
    return check_stability_regression(pairwise_distances(z), pairwise_distances(explanations.importances))
