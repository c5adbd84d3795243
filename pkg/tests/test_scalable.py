import numpy as np
import pytest

from ecf import EcfConfig, ExplanationSet, ObjectSet, PredictionVector, build_augmented
from ecf.axioms import separability_partner_counts
from ecf.errors import AllPredictionsEqual, ClassTooSmall, ValidationError
from ecf.scalable import (
    bin_predictions,
    binned_stability_regression,
    duplicate_separability,
    duplicate_violations,
    probe_identity_sampled,
    stratified_sample,
)

from oracles import pair_violations


def planted_instance(seed, n=None):
    """Random rows with duplicated explanations, near-duplicates and repeated objects."""
    rng = np.random.default_rng(seed)
    n = n or int(rng.integers(5, 501))
    m = int(rng.integers(1, 6))
    x = rng.normal(size=(n, m))
    e = rng.normal(size=(n, m)) * rng.choice([1.0, 1e3, 1e-3])
    k = int(rng.integers(1, max(2, n // 4)))
    src = rng.integers(0, n, k)
    dst = rng.integers(0, n, k)
    e[dst] = e[src]
    # near-duplicates: some inside the tolerance, some just outside
    for factor in (3e-10, 5e-9):
        idx = rng.integers(0, n, max(1, n // 20))
        e[idx] = e[idx - 1] * (1 + factor * rng.choice([-1, 1], size=(idx.size, m)))
    # repeated objects with repeated explanations (vacuous pairs)
    rep = rng.integers(0, n, max(1, n // 30))
    x[rep - 2] = x[rep]
    e[rep - 2] = e[rep]
    # repeated objects with different explanations
    x[rng.integers(0, n, 3)] = x[0]
    return ObjectSet(x), ExplanationSet(e)


class TestDuplicateSeparability:
    def test_all_distinct(self):
        v = duplicate_separability(ObjectSet(np.eye(5)), ExplanationSet(np.eye(5) * 2))
        assert v.violated == 0 and v.checks_total == 5

    def test_vacuous_pair(self):
        x = np.array([[1.0, 2], [1.0, 2], [0.0, 0], [5.0, 5]])
        e = np.array([[3.0, 3], [3.0, 3], [1.0, 0], [0.0, 1]])
        mask = duplicate_violations(ObjectSet(x), ExplanationSet(e), 1e-9)
        assert not mask.any()
        assert pair_violations(x, e) == set()

    def test_mixed_group(self):
        # objects 0 and 1 identical, object 2 differs; all three share an explanation
        x = np.array([[1.0], [1.0], [2.0], [9.0]])
        e = np.array([[4.0], [4.0], [4.0], [0.0]])
        mask = duplicate_violations(ObjectSet(x), ExplanationSet(e), 1e-9)
        np.testing.assert_array_equal(mask, [True, True, True, False])

    def test_chained_tolerance(self):
        # a~b and b~c within tolerance, a and c are not; only pairwise equality counts
        e = np.array([[1.0], [1.0 + 0.9e-9], [1.0 + 1.8e-9]])
        x = np.array([[0.0], [1.0], [2.0]])
        mask = duplicate_violations(ObjectSet(x), ExplanationSet(e), 1e-9)
        counts = separability_partner_counts(ObjectSet(x), ExplanationSet(e), 1e-9)
        np.testing.assert_array_equal(mask, counts > 0)

    @pytest.mark.parametrize("seed", range(50))
    def test_equivalent_to_exact(self, seed):
        objects, expl = planted_instance(seed)
        heuristic = set(np.flatnonzero(duplicate_violations(objects, expl, 1e-9)))
        exact = set(np.flatnonzero(separability_partner_counts(objects, expl, 1e-9) > 0))
        assert heuristic == exact

    def test_planted_rate(self):
        rng = np.random.default_rng(0)
        n, dup = 20_000, 2_032
        x = rng.normal(size=(n, 3))
        e = rng.normal(size=(n, 3))
        e[1 : dup // 2 * 2 : 2] = e[0 : dup // 2 * 2 : 2]
        v = duplicate_separability(ObjectSet(x), ExplanationSet(e))
        assert v.violated == dup
        assert v.checks_total == n


class TestBinning:
    def test_uniform_quartiles(self):
        b = bin_predictions(PredictionVector.regression(np.arange(1, 101.0)), 4)
        assert b.n_bins == 4
        np.testing.assert_array_equal(np.bincount(b.labels), [25, 25, 25, 25])
        np.testing.assert_allclose(b.edges[1:-1], np.percentile(np.arange(1, 101.0), [25, 50, 75]))

    def test_skewed_merges(self):
        b = bin_predictions(PredictionVector.regression([1.0] * 99 + [1000.0]), 4)
        assert b.n_bins == 2
        np.testing.assert_array_equal(np.bincount(b.labels), [99, 1])

    def test_median_split(self):
        b = bin_predictions(PredictionVector.regression([1.0, 2, 3, 4]), 2)
        np.testing.assert_array_equal(b.labels, [0, 0, 1, 1])

    def test_no_empty_bins(self):
        rng = np.random.default_rng(0)
        values = np.round(rng.exponential(size=500), 1)
        b = bin_predictions(PredictionVector.regression(values), 10)
        assert np.all(np.bincount(b.labels, minlength=b.n_bins) > 0)
        assert np.all(np.diff(b.edges) > 0)
        for k in range(b.n_bins):
            inside = values[b.labels == k]
            assert inside.max() <= b.edges[k + 1]
            assert k == 0 or inside.min() > b.edges[k]

    def test_constant(self):
        with pytest.raises(AllPredictionsEqual):
            bin_predictions(PredictionVector.regression([2.0] * 5), 2)

    def test_bad_bins(self):
        with pytest.raises(ValidationError):
            bin_predictions(PredictionVector.regression([1.0, 2.0]), 1)


class TestBinnedStability:
    @pytest.mark.parametrize("bins", [2, 3, 5, 8])
    def test_constant_per_bin(self, bins):
        values = np.arange(80.0)
        b = bin_predictions(PredictionVector.regression(values), bins)
        e = np.stack([b.labels * 1.0, -(b.labels**2) * 1.0], axis=1)
        v, table = binned_stability_regression(ExplanationSet(e), b)
        assert v.violated == 0 and set(table.per_label_jaccard.values()) == {1.0}

    def test_independent_of_bins(self):
        rng = np.random.default_rng(0)
        b = bin_predictions(PredictionVector.regression(rng.normal(size=400)), 4)
        v, table = binned_stability_regression(ExplanationSet(rng.normal(size=(400, 3))), b)
        assert all(j < 0.5 for j in table.per_label_jaccard.values())

    def test_single_bin_flagged(self):
        from ecf.scalable import BinAssignment

        b = BinAssignment(np.array([0.0, 1.0]), np.zeros(6, dtype=np.int64))
        v, table = binned_stability_regression(ExplanationSet(np.random.default_rng(0).normal(size=(6, 2))), b)
        assert v.violated == 0 and table.per_label_jaccard == {0: 1.0}
        assert any("degenerate" in note for note in v.notes)


class TestSampling:
    def test_identity_probe(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(200, 3))
        aug = build_augmented(ObjectSet(x), PredictionVector.regression(x[:, 0]))
        det = probe_identity_sampled(lambda r, p: r * 3, aug, 50, seed=1)
        assert det.violated == 0 and det.checks_total == 50 and det.method == "sampled-50"
        noisy = probe_identity_sampled(lambda r, p: rng.random(3), aug, 50, seed=1)
        assert noisy.violated == 50

    def test_probe_seeded(self):
        x = np.arange(60.0).reshape(20, 3)
        aug = build_augmented(ObjectSet(x), PredictionVector.regression(x[:, 0]))
        seen = []
        probe_identity_sampled(lambda r, p: seen.append(r[0]) or r, aug, 5, seed=3)
        again = []
        probe_identity_sampled(lambda r, p: again.append(r[0]) or r, aug, 5, seed=3)
        assert seen == again

    def test_probe_bounds(self):
        aug = build_augmented(ObjectSet(np.eye(3)), PredictionVector.regression([1.0, 2, 3]))
        with pytest.raises(ValidationError):
            probe_identity_sampled(lambda r, p: r, aug, 4)

    def test_full_fraction(self):
        preds = PredictionVector.classification([0, 1, 1, 0, 2])
        np.testing.assert_array_equal(stratified_sample(preds, 1.0), np.arange(5))

    def test_proportional(self):
        preds = PredictionVector.classification([0] * 90 + [1] * 10)
        idx = stratified_sample(preds, 0.1, seed=4)
        assert len(idx) == 10
        np.testing.assert_array_equal(np.bincount(preds.values[idx]), [9, 1])

    def test_seeded(self):
        preds = PredictionVector.classification(np.arange(300) % 3)
        np.testing.assert_array_equal(stratified_sample(preds, 0.3, 5), stratified_sample(preds, 0.3, 5))

    @pytest.mark.parametrize("seed", range(10))
    def test_proportions_within_one(self, seed):
        rng = np.random.default_rng(seed)
        labels = rng.integers(0, 4, 311)
        labels[:4] = np.arange(4)
        preds = PredictionVector.classification(labels)
        frac = float(rng.uniform(0.3, 0.9))
        idx = stratified_sample(preds, frac, seed)
        assert len(idx) == int(np.floor(311 * frac + 0.5)) == len(set(idx))
        got = np.bincount(labels[idx], minlength=4)
        assert np.all(np.abs(got - np.bincount(labels) * frac) <= 1)

    def test_class_too_small(self):
        with pytest.raises(ClassTooSmall):
            stratified_sample(PredictionVector.classification([0] * 50 + [1] * 2), 0.1)
