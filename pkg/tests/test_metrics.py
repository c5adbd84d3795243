import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecf.errors import BothEmpty, DegenerateInput, ValidationError
from ecf.metrics import euclidean, jaccard, pairwise_distances, rank_average_ties, spearman_rho, spearman_rho_rows

from oracles import closed_form_spearman, naive_distance_matrix, naive_ranks, naive_spearman

MATHS = [13, 22, 7, 20, 17, 18, 14, 24, 23, 16]
STATS = [52, 72, 27, 43, 50, 39, 45, 87, 66, 58]

distinct_floats = st.lists(
    st.floats(-1e3, 1e3, allow_nan=False), min_size=3, max_size=30, unique=True
)


class TestEuclidean:
    @pytest.mark.parametrize("a,b,d", [([0, 0], [3, 4], 5.0), ([1, 2, 3], [1, 2, 4], 1.0), ([2.5, -1], [2.5, -1], 0.0)])
    def test_examples(self, a, b, d):
        assert euclidean(a, b) == d

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            euclidean([1, 2], [1, 2, 3])


class TestPairwise:
    def test_one_dimensional(self):
        d = pairwise_distances([[0.0], [1.0], [3.0]]).entries
        assert (d[0, 1], d[0, 2], d[1, 2]) == (1.0, 3.0, 2.0)

    def test_matches_loop_oracle(self):
        rows = np.random.default_rng(0).normal(size=(4, 3))
        np.testing.assert_allclose(pairwise_distances(rows).entries, naive_distance_matrix(rows), atol=1e-12)

    def test_duplicate_rows_zero(self):
        d = pairwise_distances([[1.0, 2.0], [0.0, 0.0], [1.0, 2.0]]).entries
        assert d[0, 2] == 0.0

    def test_needs_two_rows(self):
        with pytest.raises(ValidationError):
            pairwise_distances([[1.0, 2.0]])

    def test_triangle_inequality(self):
        d = pairwise_distances(np.random.default_rng(5).normal(size=(30, 4))).entries
        # d[i, k] <= d[i, j] + d[j, k] for every triple
        assert np.all(d[:, None, :] <= d[:, :, None] + d[None, :, :] + 1e-9)


class TestRanks:
    def test_descending(self):
        np.testing.assert_array_equal(rank_average_ties([24, 23, 20, 13]), [1, 2, 3, 4])

    def test_ties(self):
        np.testing.assert_array_equal(rank_average_ties([5, 5, 1]), [1.5, 1.5, 3])

    def test_singleton(self):
        np.testing.assert_array_equal(rank_average_ties([7]), [1])

    def test_table_ranks(self):
        np.testing.assert_array_equal(rank_average_ties(MATHS), [9, 3, 10, 4, 6, 5, 8, 1, 2, 7])
        np.testing.assert_array_equal(rank_average_ties(STATS), [5, 2, 10, 8, 6, 9, 7, 1, 3, 4])

    @given(st.lists(st.integers(-5, 5), min_size=1, max_size=40))
    def test_matches_counting_oracle(self, values):
        ranks = rank_average_ties(values)
        np.testing.assert_allclose(ranks, naive_ranks(values))
        n = len(values)
        assert ranks.sum() == pytest.approx(n * (n + 1) / 2, abs=1e-9)


class TestSpearman:
    def test_exam_scores(self):
        assert spearman_rho(MATHS, STATS) == pytest.approx(1 - 360 / 990, abs=1e-12)

    def test_self_and_reverse(self):
        v = [3.0, 1.0, 4.0, 1.5, 9.0]
        assert spearman_rho(v, v) == pytest.approx(1.0)
        assert spearman_rho(v, [-t for t in v]) == pytest.approx(-1.0)

    def test_constant_rejected(self):
        with pytest.raises(DegenerateInput):
            spearman_rho([1, 1, 1], [1, 2, 3])

    def test_too_short(self):
        with pytest.raises(ValidationError):
            spearman_rho([1, 2], [2, 1])

    @given(distinct_floats, st.randoms(use_true_random=False))
    @settings(max_examples=60)
    def test_closed_form_without_ties(self, u, rnd):
        v = list(u)
        rnd.shuffle(v)
        if len(set(v)) < 2:
            return
        assert spearman_rho(u, v) == pytest.approx(closed_form_spearman(u, v), abs=1e-12)

    @given(st.lists(st.tuples(st.integers(0, 6), st.integers(0, 6)), min_size=3, max_size=30))
    def test_ties_match_rank_pearson(self, pairs):
        u, v = zip(*pairs)
        if len(set(u)) < 2 or len(set(v)) < 2:
            return
        assert spearman_rho(u, v) == pytest.approx(naive_spearman(u, v), abs=1e-12)
        assert spearman_rho(u, v) == pytest.approx(spearman_rho(v, u), abs=1e-15)

    @given(st.lists(st.integers(-500, 500), min_size=3, max_size=30, unique=True))
    def test_monotone_invariance(self, u):
        u = np.array(u) / 100.0
        v = np.random.default_rng(len(u)).permutation(u)
        base = spearman_rho(u, v)
        assert spearman_rho(np.exp(u), v) == pytest.approx(base, abs=1e-12)
        assert spearman_rho(u, v**3) == pytest.approx(base, abs=1e-12)

    def test_rows_nan_on_constant(self):
        a = np.array([[1.0, 2, 3], [1.0, 1, 1]])
        b = np.array([[3.0, 2, 1], [1.0, 2, 3]])
        out = spearman_rho_rows(a, b)
        assert out[0] == pytest.approx(-1.0) and np.isnan(out[1])


class TestJaccard:
    def test_baskets(self):
        assert jaccard({"strawberries", "ice-cream", "water"}, {"salad", "bread", "water"}) == 0.2

    def test_identical_and_disjoint(self):
        assert jaccard({1, 2}, {1, 2}) == 1.0
        assert jaccard({1, 2}, {3, 4}) == 0.0

    def test_both_empty(self):
        with pytest.raises(BothEmpty):
            jaccard(set(), [])

    @given(st.sets(st.integers(0, 8)), st.sets(st.integers(0, 8)))
    def test_extremes(self, a, b):
        if not a | b:
            return
        j = jaccard(a, b)
        assert (j == 1.0) == (a == b)
        assert (j == 0.0) == (not a & b)
