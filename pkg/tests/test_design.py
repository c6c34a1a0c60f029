"""SRSWOR design, HT totals and conditional bias against exhaustive enumeration."""

from collections import Counter
from itertools import combinations
from math import comb

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from mrimpute.design import (
    FinitePopulation,
    Sample,
    SrsworDesign,
    cond_bias_ht_population,
    draw_srswor,
    draw_srswor_ids,
    est_cond_bias_ht,
    ht_total,
    robust_ht,
    srswor_cond_bias_closed_form,
)
from mrimpute.errors import IncompleteDataError, InvalidDesignError, NotInSampleError

SKEWED = np.array([1.0, 2.0, 3.0, 4.0, 5.0, 100.0])


def all_samples(N, n):
    design = SrsworDesign(N, n)
    return [Sample(np.array(s), design) for s in combinations(range(N), n)]


def enum_cond_bias(y, n, i):
    """E(t_HT | unit i sampled) - t_y by brute force over all samples."""
    N = len(y)
    ests = [N / n * y[list(s)].sum() for s in combinations(range(N), n) if i in s]
    return np.mean(ests) - y.sum()


populations = st.integers(2, 8).flatmap(
    lambda N: st.tuples(
        st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=N, max_size=N).map(np.array),
        st.integers(1, N),
    )
)


class TestDraw:
    def test_census(self, rng):
        assert sorted(draw_srswor_ids(5, 5, rng)) == [0, 1, 2, 3, 4]

    def test_n_exceeds_N(self, rng):
        with pytest.raises(InvalidDesignError):
            draw_srswor_ids(3, 4, rng)
        with pytest.raises(InvalidDesignError):
            SrsworDesign(3, 4)

    def test_single_unit_uniform(self, rng):
        reps = 100_000
        counts = np.bincount([draw_srswor_ids(5, 1, rng)[0] for _ in range(reps)], minlength=5)
        sd = np.sqrt(reps * 0.2 * 0.8)
        assert np.all(np.abs(counts - reps / 5) < 3 * sd)

    def test_all_twenty_samples_equally_likely(self, rng):
        reps = 100_000
        freq = Counter(tuple(sorted(draw_srswor_ids(6, 3, rng))) for _ in range(reps))
        assert len(freq) == 20
        p = 1 / 20
        sd = np.sqrt(reps * p * (1 - p))
        # 20 cells: allow a Bonferroni-style 4 sigma
        assert all(abs(c - reps * p) < 4 * sd for c in freq.values())

    def test_distinct_and_deterministic(self):
        a = draw_srswor_ids(10_000, 500, np.random.default_rng(3))
        b = draw_srswor_ids(10_000, 500, np.random.default_rng(3))
        assert len(np.unique(a)) == 500
        np.testing.assert_array_equal(a, b)

    def test_sample_validation(self):
        d = SrsworDesign(5, 2)
        with pytest.raises(InvalidDesignError):
            Sample(np.array([1, 1]), d)
        with pytest.raises(InvalidDesignError):
            Sample(np.array([1, 2, 3]), d)


class TestHT:
    def test_census(self):
        pop = FinitePopulation(np.array([1.0, 2.0, 3.0]))
        s = draw_srswor(pop, 3, np.random.default_rng(0))
        assert ht_total(s, pop.y[s.ids]) == pytest.approx(6.0)

    def test_zero(self):
        s = draw_srswor(10, 4, np.random.default_rng(0))
        assert ht_total(s, np.zeros(4)) == 0.0

    def test_missing_value(self):
        s = draw_srswor(10, 2, np.random.default_rng(0))
        with pytest.raises(IncompleteDataError):
            ht_total(s, np.array([1.0, np.nan]))

    def test_enumeration_mean_equals_total(self):
        ests = [ht_total(s, SKEWED[s.ids]) for s in all_samples(6, 3)]
        assert len(ests) == comb(6, 3)
        assert np.mean(ests) == pytest.approx(SKEWED.sum(), rel=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(populations)
    def test_enumeration_unbiased(self, case):
        y, n = case
        ests = [ht_total(s, y[s.ids]) for s in all_samples(len(y), n)]
        assert np.mean(ests) == pytest.approx(y.sum(), rel=1e-10, abs=1e-9)


class TestConditionalBias:
    def test_inclusion_probabilities(self):
        d = SrsworDesign(6, 3)
        assert d.inclusion == 0.5
        assert d.joint_inclusion == pytest.approx(3 * 2 / (6 * 5))
        pij = d.pi_joint(np.arange(6))
        # each pair appears in C(4,1)=4 of the 20 samples
        assert pij[0, 1] == pytest.approx(4 / 20)
        assert pij[2, 2] == 0.5

    def test_constant_y(self):
        d = SrsworDesign(6, 3)
        y = np.full(6, 7.0)
        assert np.allclose(srswor_cond_bias_closed_form(d, y), 0.0)
        assert all(abs(cond_bias_ht_population(d, y, i)) < 1e-12 for i in range(6))

    def test_census_is_zero(self):
        d = SrsworDesign(6, 6)
        assert all(abs(cond_bias_ht_population(d, SKEWED, i)) < 1e-12 for i in range(6))
        s = Sample(np.arange(6), d)
        assert np.allclose(est_cond_bias_ht(s, SKEWED), 0.0)

    def test_population_matches_enumeration(self):
        d = SrsworDesign(6, 3)
        for i in range(6):
            assert cond_bias_ht_population(d, SKEWED, i) == pytest.approx(enum_cond_bias(SKEWED, 3, i), rel=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(populations)
    def test_delta_sum_matches_closed_form(self, case):
        y, n = case
        d = SrsworDesign(len(y), n)
        closed = srswor_cond_bias_closed_form(d, y)
        delta = np.array([cond_bias_ht_population(d, y, i) for i in range(len(y))])
        np.testing.assert_allclose(delta, closed, rtol=1e-12, atol=1e-9)

    @settings(max_examples=60, deadline=None)
    @given(populations)
    def test_conditionally_unbiased(self, case):
        y, n = case
        N = len(y)
        # needs every pi_ik > 0, i.e. n >= 2
        assume(n >= 2)
        samples = all_samples(N, n)
        for i in range(N):
            hits = [est_cond_bias_ht(s, y[s.ids], i) for s in samples if i in s.ids]
            target = cond_bias_ht_population(SrsworDesign(N, n), y, i)
            assert np.mean(hits) == pytest.approx(target, rel=1e-10, abs=1e-8)

    def test_closed_form_matches_generic_matrix(self, rng):
        d = SrsworDesign(40, 7)
        s = draw_srswor(40, 7, rng)
        v = rng.gamma(1.0, 5.0, 7)
        generic = d.cond_bias_matrix(s.ids) @ v
        np.testing.assert_allclose(d.cond_bias_estimates(v), generic, rtol=1e-12)

    def test_not_in_sample(self):
        s = Sample(np.array([0, 2, 4]), SrsworDesign(6, 3))
        with pytest.raises(NotInSampleError):
            est_cond_bias_ht(s, SKEWED[s.ids], 1)


class TestRobustHT:
    def test_identity(self, rng):
        s = draw_srswor(50, 10, rng)
        v = rng.lognormal(0, 1, 10)
        b = est_cond_bias_ht(s, v)
        assert robust_ht(s, v) == ht_total(s, v) - (b.min() + b.max()) / 2

    def test_symmetric_influence_unchanged(self):
        s = Sample(np.array([0, 1, 2]), SrsworDesign(6, 3))
        v = np.array([1.0, 2.0, 3.0])  # contrasts are symmetric around the middle value
        assert robust_ht(s, v) == pytest.approx(ht_total(s, v))

    def test_enumeration_mse_improves_on_skewed_population(self):
        samples = all_samples(6, 3)
        t = SKEWED.sum()
        mse_ht = np.mean([(ht_total(s, SKEWED[s.ids]) - t) ** 2 for s in samples])
        mse_rob = np.mean([(robust_ht(s, SKEWED[s.ids]) - t) ** 2 for s in samples])
        assert mse_rob < mse_ht
