import itertools

import numpy as np
import pytest

from conftest import best_inlier_count_1d
from rrwoc import (
    Assignment,
    Config1D,
    DegenerateCovariates,
    DimensionMismatch,
    InvalidParams,
    NoValidHypothesis,
    ZeroMomentSum,
    ols_1d,
    oracle_margin_1d,
    q_iterations_1d,
    rrwoc_1d_exhaustive,
    rrwoc_1d_randomized,
    rwoc_1d_moments,
)
from rrwoc.regress1d import sample_schedule_1d


def identity_map(n):
    return Assignment([(i, i) for i in range(n)], n, n)


class TestOls1d:
    def test_exact_fit(self):
        assert ols_1d([1, 2, 3], [3, 6, 9], identity_map(3)) == pytest.approx(3.0)

    def test_single_zero_response(self):
        assert ols_1d([1], [0], identity_map(1)) == 0.0

    def test_hand_computed(self):
        assert ols_1d([1, 2], [2.1, 3.9], identity_map(2)) == pytest.approx(1.98)

    def test_degenerate_covariates(self):
        with pytest.raises(DegenerateCovariates):
            ols_1d([0.0, 0.0], [1.0, 2.0], identity_map(2))

    def test_empty_assignment(self):
        with pytest.raises(InvalidParams):
            ols_1d([1.0], [1.0], Assignment(np.zeros((0, 2)), 1, 1))


class TestMoments:
    def test_shuffled_exact(self):
        beta, assignment = rwoc_1d_moments([1, 2, 3], [6, 2, 4])
        assert beta == pytest.approx(2.0)
        assert assignment.source_of() == {0: 2, 1: 0, 2: 1}

    def test_single_negative(self):
        beta, assignment = rwoc_1d_moments([5], [-5])
        assert beta == -1.0 and assignment.size == 1

    def test_zero_moment_sum(self):
        with pytest.raises(ZeroMomentSum):
            rwoc_1d_moments([1.0, -1.0], [1.0, 2.0])

    def test_requires_complete_permutation(self):
        with pytest.raises(DimensionMismatch):
            rwoc_1d_moments([1.0, 2.0], [1.0])

    def test_recovers_generating_permutation(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n = 6
            x = rng.normal(size=n) + 3.0  # keep the moment sum well away from zero
            beta_true = rng.normal() + 2.0
            perm = rng.permutation(n)
            y = (x * beta_true)[perm]
            beta, assignment = rwoc_1d_moments(x, y)
            assert beta == pytest.approx(beta_true, rel=1e-12)
            # y[t] was generated from x[perm[t]]
            assert assignment.source_of() == {t: int(perm[t]) for t in range(n)}
            fitted = x * beta
            ssr = sum((y[t] - fitted[s]) ** 2 for t, s in assignment.pairs)
            assert ssr <= 1e-18
            brute = min(
                sum((y[i] - fitted[p[i]]) ** 2 for i in range(n))
                for p in itertools.permutations(range(n))
            )
            assert ssr <= brute + 1e-18


class TestIterationBound:
    def test_reference_value(self):
        assert q_iterations_1d(20, 20, 5, 0.9) == 61

    def test_certain_hit(self):
        assert q_iterations_1d(1, 1, 0, 0.5) == 1

    def test_exact_integer_boundary(self):
        assert q_iterations_1d(2, 2, 0, 0.5) == 1

    def test_rejects_k_ge_n(self):
        with pytest.raises(InvalidParams):
            q_iterations_1d(5, 5, 5, 0.9)

    def test_rejects_bad_delta(self):
        with pytest.raises(InvalidParams):
            q_iterations_1d(5, 5, 1, 1.0)

    def test_monotone_in_k(self):
        qs = [q_iterations_1d(20, 20, k, 0.9) for k in range(0, 10)]
        assert qs == sorted(qs)


FIXTURE_X = [1.0, 2.0, 3.0, 4.0]
FIXTURE_Y = [2.0, 4.0, 8.0, 100.0]  # y = 2x with y=100 an outlier, x=3 unmatched


class TestExhaustive1D:
    def test_outlier_fixture(self):
        est = rrwoc_1d_exhaustive(FIXTURE_X, FIXTURE_Y, Config1D(margin=1e-9))
        assert est.beta_1d == pytest.approx(2.0)
        assert est.inliers == (0, 1, 2)
        lookup = est.assignment.source_of()
        assert {lookup[t] for t in est.inliers} == {0, 1, 3}
        # Brute force over every hypothesis and every injective map agrees.
        assert est.inlier_count == best_inlier_count_1d(FIXTURE_X, FIXTURE_Y, 1e-9) == 3

    def test_no_outliers_exact(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            n = int(rng.integers(3, 9))
            x = rng.normal(size=n)
            beta_true = rng.normal() * 2 + 0.5
            y = (x * beta_true)[rng.permutation(n)]
            est = rrwoc_1d_exhaustive(x, y, Config1D(margin=1e-9))
            assert abs(est.beta_1d - beta_true) <= 1e-9
            assert est.inlier_count == n

    def test_two_points_zero_margin(self):
        est = rrwoc_1d_exhaustive([1, 2], [2, 4], Config1D(margin=0.0))
        assert est.beta_1d == 2.0 and est.inliers == (0, 1)

    def test_hypothesis_count(self):
        est = rrwoc_1d_exhaustive(FIXTURE_X, FIXTURE_Y, Config1D(margin=1e-9))
        assert est.n_iterations == len(FIXTURE_X) * len(FIXTURE_Y)

    def test_zero_covariates_skipped(self):
        est = rrwoc_1d_exhaustive([0.0, 1.0, 2.0], [2.0, 4.0], Config1D(margin=1e-9))
        assert est.beta_1d == pytest.approx(2.0)
        assert est.n_iterations == 2 * 2  # the x=0 column is skipped

    def test_all_zero_covariates(self):
        with pytest.raises(NoValidHypothesis):
            rrwoc_1d_exhaustive([0.0, 0.0], [1.0, 2.0], Config1D(margin=1e-9))

    def test_inlier_maximality_vs_truth(self):
        from rrwoc import Coefficients, count_inliers, linear_assignment, residual_matrix

        rng = np.random.default_rng(2)
        for _ in range(10):
            n = 8
            k = 3
            x = rng.normal(size=10)
            beta_true = 1.5
            perm = rng.permutation(10)[: n - k]
            y = np.concatenate([x[perm] * beta_true, rng.uniform(-5, 5, size=k)])
            nu = 1e-9
            est = rrwoc_1d_exhaustive(x, y, Config1D(margin=nu))
            # Ground-truth hypothesis pushed through the same body: residual
            # assignment, then the margin filter.
            D = residual_matrix(x, y, Coefficients([[beta_true]]))
            truth_assignment, _ = linear_assignment(D)
            _, truth_count = count_inliers(
                x.reshape(-1, 1), y.reshape(-1, 1),
                Coefficients([[beta_true]]), truth_assignment, nu,
            )
            assert est.inlier_count >= truth_count
            assert abs(est.beta_1d - beta_true) <= 1e-9

    def test_scale_equivariance(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=6)
        beta_true = 1.3
        y = (x * beta_true)[rng.permutation(6)]
        c = -2.5
        est = rrwoc_1d_exhaustive(x, y, Config1D(margin=1e-9))
        est_scaled = rrwoc_1d_exhaustive(x, c * y, Config1D(margin=1e-9 * abs(c)))
        assert est_scaled.beta_1d == pytest.approx(c * est.beta_1d, rel=1e-12)
        assert est_scaled.inliers == est.inliers
        assert np.array_equal(est_scaled.assignment.pairs, est.assignment.pairs)

    def test_oracle_margin_separates(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=7)
        beta_true = 2.2
        y = (x * beta_true)[rng.permutation(7)]
        nu = oracle_margin_1d(x, beta_true)
        est = rrwoc_1d_exhaustive(x, y, Config1D(margin=nu))
        assert abs(est.beta_1d - beta_true) <= 1e-9


class TestRandomized1D:
    def test_fixture_with_forced_success(self):
        cfg = Config1D(margin=1e-9, delta=0.999, max_outliers_hint=1, rng_seed=5)
        q = q_iterations_1d(4, 4, 1, 0.999)
        ii, jj = sample_schedule_1d(4, 4, q, 5)
        true_pairs = {(0, 0), (1, 1), (2, 3)}  # correspondences of the fixture
        assert any((i, j) in true_pairs for i, j in zip(ii, jj))
        est = rrwoc_1d_randomized(FIXTURE_X, FIXTURE_Y, cfg)
        assert est.beta_1d == pytest.approx(2.0)
        assert est.inliers == (0, 1, 2)

    def test_single_point(self):
        est = rrwoc_1d_randomized([2.0], [6.0], Config1D(margin=1e-9, rng_seed=0))
        assert est.beta_1d == 3.0 and est.n_iterations == 1

    def test_success_rate_bound(self):
        rng = np.random.default_rng(6)
        n = 5
        x = rng.normal(size=n)
        beta_true = 1.7
        y = (x * beta_true)[rng.permutation(n)]
        delta = 0.9
        hits = 0
        seeds = 500
        for seed in range(seeds):
            cfg = Config1D(margin=1e-9, delta=delta, max_outliers_hint=0, rng_seed=seed)
            est = rrwoc_1d_randomized(x, y, cfg)
            hits += abs(est.beta_1d - beta_true) <= 1e-9
        assert hits / seeds >= delta - 3 * np.sqrt(delta * (1 - delta) / seeds)

    def test_deterministic_given_seed(self):
        cfg = Config1D(margin=1e-9, delta=0.99, rng_seed=11)
        a = rrwoc_1d_randomized(FIXTURE_X, FIXTURE_Y, cfg)
        b = rrwoc_1d_randomized(FIXTURE_X, FIXTURE_Y, cfg)
        assert a.beta_1d == b.beta_1d
        assert np.array_equal(a.assignment.pairs, b.assignment.pairs)
        assert a.inliers == b.inliers

    def test_degenerate_draws_replaced(self):
        # Half the covariates are zero; replacements keep the budget intact.
        x = np.array([0.0, 0.0, 1.0, 2.0])
        y = np.array([2.0, 4.0])
        cfg = Config1D(margin=1e-9, delta=0.99, max_outliers_hint=0, rng_seed=1)
        est = rrwoc_1d_randomized(x, y, cfg)
        assert est.n_iterations == q_iterations_1d(2, 4, 0, 0.99)
        assert est.beta_1d == pytest.approx(2.0)
