"""Exit criteria for the package, one test per criterion.

Run ``pytest tests/test_acceptance.py`` to get a PASS/FAIL line per
criterion in the terminal summary (printed by ``conftest.py``).
"""
import itertools
import time

import numpy as np
import pytest

from ecf import (
    Axiom,
    ClusteringAlgorithm,
    EcfConfig,
    ExplanationSet,
    KnnModel,
    LinearModel,
    ObjectSet,
    PredictionVector,
    ShapleyExplainer,
    SurrogateExplainer,
    Task,
    build_augmented,
    check_identity,
    check_separability,
    check_stability_classification,
    evaluate,
    fit_linear,
)
from ecf.axioms import separability_partner_counts
from ecf.cli import main
from ecf.clustering import Linkage, agnes
from ecf.io import read_report
from ecf.metrics import jaccard, spearman_rho
from ecf.scalable import duplicate_violations

from oracles import masked_value, permutation_shapley, prim_mst_weights
from test_scalable import planted_instance

pytestmark = pytest.mark.acceptance


def test_criterion_01_spearman_exam_scores():
    """Spearman on the ten maths/stats score pairs equals 1 - 360/990."""
    maths = [13, 22, 7, 20, 17, 18, 14, 24, 23, 16]
    stats = [52, 72, 27, 43, 50, 39, 45, 87, 66, 58]
    assert abs(spearman_rho(maths, stats) - (1 - 360 / 990)) <= 1e-4


def test_criterion_02_jaccard_baskets():
    """Jaccard of the two shopping baskets is exactly 0.2."""
    assert jaccard({"strawberries", "ice-cream", "water"}, {"salad", "bread", "water"}) == 0.2


def test_criterion_03_ordered_pair_count():
    """n = 5355 rows give 28,670,670 ordered separability checks within 60 s."""
    rng = np.random.default_rng(0)
    n = 5355
    x = rng.normal(size=(n, 6))
    e = rng.normal(size=(n, 6))
    e[1:134:2] = e[0:133:2]  # 67 planted pairs -> 134 ordered violations
    start = time.perf_counter()
    verdict = check_separability(ObjectSet(x), ExplanationSet(e))
    elapsed = time.perf_counter() - start
    assert verdict.checks_total == 28_670_670 == n * (n - 1)
    assert (verdict.violated, verdict.satisfied) == (134, 28_670_536)
    assert elapsed < 60


def test_criterion_04_exam_model():
    """Noiseless exam-score data: fit recovers (10, 1.5, 5); predict(40, 4) = 90."""
    rng = np.random.default_rng(4)
    X = np.column_stack([rng.uniform(0, 60, 25), rng.integers(1, 11, 25)])
    model = fit_linear(X, 10 + 1.5 * X[:, 0] + 5 * X[:, 1])
    assert abs(model.intercept - 10) <= 1e-8
    assert np.all(np.abs(model.weights - [1.5, 5]) <= 1e-8)
    assert LinearModel(10.0, np.array([1.5, 5.0])).predict([40, 4]) == 90


def test_criterion_05_identity_discrimination():
    """Exact Shapley satisfies identity on every object; the seedless surrogate on none."""
    rng = np.random.default_rng(5)
    X = rng.normal(size=(100, 4))
    # a nonlinear black box: a linear surrogate of a linear model is exact for any sample
    model = KnnModel(X, X @ [1.0, -1.0, 2.0, 0.5] + np.sin(2 * X[:, 0]), k=5)
    aug = build_augmented(ObjectSet(X), PredictionVector.regression(model.predict_batch(X)))
    config = EcfConfig(identity_repeats=2)
    exact = check_identity(ShapleyExplainer(model, X[:20]), aug, config)
    sampled = check_identity(SurrogateExplainer.from_training(model, X, n_samples=200), aug, config)
    assert exact.satisfied_fraction == 1.0 and exact.checks_total == 100
    assert sampled.satisfied_fraction == 0.0 and sampled.checks_total == 100


def test_criterion_06_shapley_efficiency():
    """Attributions sum to predict(x) minus the mean background prediction, within 1e-9."""
    rng = np.random.default_rng(6)
    worst = 0.0
    for trial in range(50):
        train = rng.normal(size=(60, 5))
        if trial % 2 == 0:
            model = LinearModel(float(rng.normal()), rng.normal(size=5))
        else:
            model = KnnModel(train, train @ rng.normal(size=5) + np.cos(train[:, 1]), k=4)
        background = train[:20]
        x = rng.normal(size=5)
        gap = model.predict(x) - model.predict_batch(background).mean()
        worst = max(worst, abs(ShapleyExplainer(model, background)(x).sum() - gap))
    assert worst <= 1e-9


def test_criterion_07_subset_equals_permutation_form():
    """Subset-form Shapley equals the all-orderings average for every m <= 6."""
    worst = 0.0
    for m in range(1, 7):
        for seed in range(10):
            rng = np.random.default_rng(100 * m + seed)
            train = rng.normal(size=(30, m))
            model = KnnModel(train, train @ rng.normal(size=m) + train[:, 0] ** 2, k=3)
            background = train[:5]
            x = rng.normal(size=m)
            subset = ShapleyExplainer(model, background)(x)
            brute = permutation_shapley(lambda s: masked_value(model.predict, x, background, s), m)
            worst = max(worst, float(np.max(np.abs(subset - brute))))
    assert worst <= 1e-9


def test_criterion_08_regression_stability_perfect_case():
    """Equal-weights linear model on standardized features: every rho is 1 without the
    prediction column, and above 0.9 with it."""
    rng = np.random.default_rng(8)
    raw = rng.normal(size=(150, 4)) * [1.0, 5.0, 0.2, 2.0] + [0.0, 3.0, -1.0, 10.0]
    z = (raw - raw.mean(axis=0)) / raw.std(axis=0)
    model = LinearModel(0.0, np.full(4, 0.5))
    explainer = ShapleyExplainer(model, z)
    objects, preds = ObjectSet(z), PredictionVector.regression(model.predict_batch(z))
    expected = 0.5 * (z - z.mean(axis=0))
    explanations = ExplanationSet(np.array([explainer(row) for row in z]))
    assert np.allclose(explanations.importances, expected, atol=1e-12)

    without = evaluate(objects, preds, explanations, config=EcfConfig(include_prediction_in_distance=False))
    rhos = np.array(without.rho_summary.per_column_rho)
    assert np.all(np.abs(rhos - 1) <= 1e-12)
    assert without.verdict(Axiom.STABILITY).satisfied_fraction == 1.0

    with_pred = evaluate(objects, preds, explanations)
    assert np.all(np.array(with_pred.rho_summary.per_column_rho) > 0.9)


def test_criterion_09_single_linkage_is_mst():
    """Sorted single-linkage merge heights equal sorted Prim MST edge weights."""
    for seed in range(20):
        rng = np.random.default_rng(900 + seed)
        n = int(rng.integers(2, 31))
        points = rng.normal(size=(n, int(rng.integers(1, 5))))
        heights = sorted(step.height for step in agnes(points, Linkage.SINGLE))
        assert heights == prim_mst_weights(points)


def test_criterion_10_duplicate_scan_matches_exact():
    """Duplicate-scan separability flags exactly the objects the pairwise check flags."""
    for seed in range(50):
        objects, explanations = planted_instance(1000 + seed)
        assert objects.n <= 500
        fast = set(np.flatnonzero(duplicate_violations(objects, explanations, 1e-9)).tolist())
        exact = set(np.flatnonzero(separability_partner_counts(objects, explanations, 1e-9) > 0).tolist())
        assert fast == exact


@pytest.mark.parametrize("algorithm", [ClusteringAlgorithm.KMEANS_INFORMED, ClusteringAlgorithm.AGNES_WARD])
def test_criterion_11_classification_stability_perfect_case(algorithm):
    """Per-class constant explanations: no violations and every Jaccard equals 1."""
    labels = np.random.default_rng(11).permutation(np.repeat([0, 1, 2], [7, 11, 5]))
    explanations = np.array([[2.0, 0.0, -1.0], [0.0, 1.0, 1.0], [-3.0, -3.0, 0.5]])[labels]
    verdict, table = check_stability_classification(
        ExplanationSet(explanations), PredictionVector.classification(labels), EcfConfig(stability_clustering=algorithm)
    )
    assert verdict.violated == 0
    assert table.per_label_jaccard == {0: 1.0, 1: 1.0, 2: 1.0}


def test_criterion_12_demo_end_to_end(tmp_path):
    """Seeded demo: identity and separability at 100%, all rho > 0, all Jaccard >= 0.9,
    byte-identical outputs across two runs, under 5 minutes."""
    start = time.perf_counter()
    assert main(["demo", "--seed", "7", "--out", str(tmp_path / "a")]) == 0
    assert main(["demo", "--seed", "7", "--out", str(tmp_path / "b")]) == 0
    assert time.perf_counter() - start < 300

    regression = read_report(tmp_path / "a" / "regression" / "report.json")
    classification = read_report(tmp_path / "a" / "classification" / "report.json")
    assert regression.config_echo["n"] == 300 and regression.config_echo["m"] == 4
    assert classification.config_echo["n"] == 300 and len(classification.cluster_table.per_label_jaccard) == 3
    for report in (regression, classification):
        assert report.verdict(Axiom.IDENTITY).satisfied_fraction == 1.0
        assert report.verdict(Axiom.SEPARABILITY).satisfied_fraction == 1.0
    assert min(regression.rho_summary.per_column_rho) > 0
    assert min(classification.cluster_table.per_label_jaccard.values()) >= 0.9

    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    assert files
    for rel in files:
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()
