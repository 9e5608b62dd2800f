import numpy as np
import pytest

from rrwoc import (
    Config1D,
    ConfigND,
    InstanceTooLarge,
    InvalidParams,
    PointSet,
    SimConfig,
    evaluate_hypothesis,
    generate_instance,
    q_iterations_1d,
    q_iterations_nd,
    rrwoc_1d_exhaustive,
    rrwoc_nd_exhaustive,
    rrwoc_nd_randomized,
)
from rrwoc.regressnd import sample_schedule_nd


class TestIterationBound:
    def test_reference_value(self):
        assert q_iterations_nd(10, 10, 2, 3, 0.9) == 591

    def test_d1_reduces_to_1d_bound(self):
        for n, m, k, delta in [(20, 20, 5, 0.9), (7, 11, 2, 0.5), (3, 3, 0, 0.99)]:
            assert q_iterations_nd(n, m, k, 1, delta) == q_iterations_1d(n, m, k, delta)

    def test_single_possible_draw(self):
        assert q_iterations_nd(4, 4, 0, 4, 0.9) == 1

    def test_conservative_grows_budget(self):
        base = q_iterations_nd(20, 20, 5, 3, 0.9)
        grown = q_iterations_nd(20, 20, 5, 3, 0.9, conservative=True)
        assert grown > base
        # The conservative rule divides the hit probability by d!.
        import math

        p = math.comb(15, 3) / (math.comb(20, 3) ** 2)
        expected = math.ceil(math.log1p(-0.9) / math.log1p(-p / 6))
        assert grown == expected

    def test_inlier_pool_side(self):
        target = q_iterations_nd(12, 20, 4, 3, 0.9, inlier_pool="target")
        source = q_iterations_nd(12, 20, 4, 3, 0.9, inlier_pool="source")
        assert target != source  # n - k = 8 vs m - k = 16 candidate draws

    def test_rejects_d_too_large(self):
        with pytest.raises(InvalidParams):
            q_iterations_nd(3, 5, 0, 4, 0.9)

    def test_rejects_k_ge_n(self):
        with pytest.raises(InvalidParams):
            q_iterations_nd(5, 5, 5, 2, 0.9)

    def test_rejects_pool_smaller_than_d(self):
        with pytest.raises(InvalidParams):
            q_iterations_nd(6, 6, 5, 2, 0.9)


def small_instance(seed, d=2, n=6, m=6, k=1, sigma=0.0):
    cfg = SimConfig(d=d, m_source=m, n_target=n, k_outliers=k, sigma=sigma, rng_seed=seed)
    return generate_instance(cfg)


class TestHypothesisBody:
    def test_purity_across_solver_paths(self):
        inst = small_instance(0)
        cfg = ConfigND(margin=1e-9)
        tuples = [((0, 1), (2, 3)), ((4, 2), (1, 5)), ((3, 5), (0, 4))]
        for tt, jj in tuples:
            b1, a1, i1, c1 = evaluate_hypothesis(inst.X, inst.Y, tt, jj, cfg)
            b2, a2, i2, c2 = evaluate_hypothesis(inst.X, inst.Y, tt, jj, cfg)
            assert np.array_equal(b1.matrix, b2.matrix)
            assert np.array_equal(a1.pairs, a2.pairs)
            assert i1 == i2 and c1 == c2

    def test_correct_tuple_forces_truth(self):
        inst = small_instance(1)
        lookup = inst.truth_assignment.source_of()
        tt = tuple(inst.truth_inliers[:2])
        jj = tuple(lookup[t] for t in tt)
        beta, _, inliers, _ = evaluate_hypothesis(inst.X, inst.Y, tt, jj, ConfigND(margin=1e-9))
        assert np.linalg.norm(beta.matrix - inst.truth_beta.matrix) <= 1e-9
        assert set(inst.truth_inliers) <= set(inliers)


class TestExhaustiveND:
    def test_noiseless_exact_recovery(self):
        for seed in range(5):
            inst = small_instance(seed)
            est = rrwoc_nd_exhaustive(inst.X, inst.Y, ConfigND(margin=1e-9))
            assert np.linalg.norm(est.beta.matrix - inst.truth_beta.matrix) <= 1e-9

    def test_d1_matches_1d_solver(self):
        for seed in range(5):
            inst = small_instance(seed, d=1, n=6, m=7, k=1)
            est_nd = rrwoc_nd_exhaustive(inst.X, inst.Y, ConfigND(margin=1e-9))
            est_1d = rrwoc_1d_exhaustive(
                inst.X.points[:, 0], inst.Y.points[:, 0], Config1D(margin=1e-9)
            )
            assert est_nd.beta.matrix[0, 0] == pytest.approx(est_1d.beta_1d, rel=1e-12)
            assert est_nd.inlier_count == est_1d.inlier_count
            assert est_nd.inliers == est_1d.inliers

    def test_full_set_hypothesis(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(3, 3))
        beta = rng.normal(size=(3, 3))
        Y = X @ beta
        est = rrwoc_nd_exhaustive(X, Y, ConfigND(margin=1e-9))
        assert np.linalg.norm(est.beta.matrix - beta) <= 1e-9
        assert est.inlier_count == 3

    def test_hypothesis_count(self):
        inst = small_instance(3, d=2, n=5, m=5, k=1)
        est = rrwoc_nd_exhaustive(inst.X, inst.Y, ConfigND(margin=1e-9))
        assert est.n_iterations == 10 * 10 * 2  # C(5,2)^2 * 2!

    def test_instance_too_large(self):
        inst = small_instance(4, d=3, n=12, m=12, k=1)
        with pytest.raises(InstanceTooLarge):
            rrwoc_nd_exhaustive(inst.X, inst.Y, ConfigND(margin=1e-9, max_hypotheses=1000))


class TestRandomizedND:
    def test_identity_instance_1d_zero_margin(self):
        # In 1D the ratio hypothesis x/x is exactly 1.0, so a zero margin
        # genuinely admits every point.
        rng = np.random.default_rng(5)
        X = rng.normal(size=(8, 1))
        est = rrwoc_nd_randomized(X, X.copy(), ConfigND(margin=0.0, rng_seed=0))
        assert est.beta.matrix[0, 0] == 1.0
        assert est.inlier_count == 8
        assert est.assignment.pairs.tolist() == [[i, i] for i in range(8)]

    def test_identity_instance(self):
        # The d >= 2 tuple solve leaves ~1e-16 residue, so "arbitrarily
        # small margin" is realized at 1e-12 rather than exactly zero.
        rng = np.random.default_rng(5)
        X = rng.normal(size=(8, 3))
        est = rrwoc_nd_randomized(X, X.copy(), ConfigND(margin=1e-12, rng_seed=0))
        assert np.allclose(est.beta.matrix, np.eye(3), atol=1e-12)
        assert est.inlier_count == 8
        assert est.assignment.pairs.tolist() == [[i, i] for i in range(8)]

    def test_matches_exhaustive_on_success_seed(self):
        inst = small_instance(6, d=2, n=4, m=4, k=1)
        cfg = ConfigND(margin=1e-9, delta=0.99, max_outliers_hint=1, rng_seed=3)
        est_r = rrwoc_nd_randomized(inst.X, inst.Y, cfg)
        est_e = rrwoc_nd_exhaustive(inst.X, inst.Y, cfg)
        assert est_r.inlier_count == est_e.inlier_count
        assert np.linalg.norm(est_r.beta.matrix - est_e.beta.matrix) <= 1e-9

    def test_rotation_equivariance(self):
        from rrwoc import random_rotation_scaled

        inst = small_instance(7, d=3, n=8, m=8, k=0)
        cfg = ConfigND(margin=1e-9, max_outliers_hint=0, rng_seed=11)
        est = rrwoc_nd_randomized(inst.X, inst.Y, cfg)
        R = random_rotation_scaled(3, (1.0, 1.0), 99).matrix
        est_rot = rrwoc_nd_randomized(inst.X, PointSet(inst.Y.points @ R), cfg)
        assert np.linalg.norm(est_rot.beta.matrix - est.beta.matrix @ R) <= 1e-9
        assert est_rot.inliers == est.inliers
        assert np.array_equal(est_rot.assignment.pairs, est.assignment.pairs)

    def test_inlier_maximality_vs_truth_hypothesis(self):
        inst = small_instance(8, d=3, n=8, m=9, k=2)
        lookup = inst.truth_assignment.source_of()
        tt = tuple(inst.truth_inliers[:3])
        jj = tuple(lookup[t] for t in tt)
        cfg = ConfigND(margin=1e-9, max_outliers_hint=2, rng_seed=0)
        _, _, truth_inliers, _ = evaluate_hypothesis(inst.X, inst.Y, tt, jj, cfg)
        # The exhaustive search dominates the truth hypothesis unconditionally.
        est = rrwoc_nd_exhaustive(inst.X, inst.Y, cfg)
        assert est.inlier_count >= len(truth_inliers)
        # The randomized search dominates it on any draw schedule that hits
        # a correct tuple (seed picked accordingly; misses happen with
        # probability 1 - delta).
        est_r = rrwoc_nd_randomized(inst.X, inst.Y, cfg)
        assert est_r.inlier_count >= len(truth_inliers)

    def test_refit_consistency(self):
        inst = small_instance(9, d=2, n=8, m=8, k=2, sigma=0.01)
        nu = 0.05
        cfg = ConfigND(margin=nu, max_outliers_hint=2, rng_seed=2)
        est = rrwoc_nd_randomized(inst.X, inst.Y, cfg)
        assert est.assignment.size == est.inlier_count  # restricted to inliers
        assert np.all(est.residuals <= nu)

    def test_deterministic(self):
        inst = small_instance(10, d=2, n=6, m=6, k=1)
        cfg = ConfigND(margin=1e-9, rng_seed=4)
        a = rrwoc_nd_randomized(inst.X, inst.Y, cfg)
        b = rrwoc_nd_randomized(inst.X, inst.Y, cfg)
        assert np.array_equal(a.beta.matrix, b.beta.matrix)
        assert np.array_equal(a.assignment.pairs, b.assignment.pairs)
        assert a.inliers == b.inliers

    def test_schedule_is_reproducible(self):
        tt, jj = sample_schedule_nd(8, 9, 3, 100, seed=5)
        tt2, jj2 = sample_schedule_nd(8, 9, 3, 100, seed=5)
        assert np.array_equal(tt, tt2) and np.array_equal(jj, jj2)
        assert tt.shape == (100, 3)
        # Without replacement within each tuple.
        assert all(len(set(row)) == 3 for row in tt.tolist())
        assert tt.min() >= 0 and tt.max() < 8 and jj.max() < 9

    def test_iteration_cap(self):
        inst = small_instance(11, d=3, n=20, m=20, k=9)
        cfg = ConfigND(margin=1e-9, delta=0.9, max_outliers_hint=9,
                       rng_seed=0, max_iterations_cap=1000)
        with pytest.raises(InvalidParams):
            rrwoc_nd_randomized(inst.X, inst.Y, cfg)

    def test_noiseless_success_rate_no_outliers(self):
        # Fresh instance per seed, k=0, tight margin: the protocol behind
        # the simulated recovery experiments.
        delta = 0.9
        runs = 200
        hits = 0
        for seed in range(runs):
            inst = generate_instance(
                SimConfig(d=3, m_source=20, n_target=20, k_outliers=0, sigma=0.0, rng_seed=seed)
            )
            cfg = ConfigND(margin=1e-6, delta=delta, max_outliers_hint=0, rng_seed=seed)
            est = rrwoc_nd_randomized(inst.X, inst.Y, cfg)
            hits += np.linalg.norm(est.beta.matrix - inst.truth_beta.matrix) <= 1e-6
        assert hits / runs >= delta

    def test_success_rate_bound_500_runs(self):
        # Fixed noiseless instance; only the solver seed varies.
        inst = generate_instance(
            SimConfig(d=3, m_source=20, n_target=20, k_outliers=5, sigma=0.0, rng_seed=123)
        )
        delta = 0.9
        runs = 500
        hits = 0
        for seed in range(runs):
            cfg = ConfigND(margin=1e-9, delta=delta, max_outliers_hint=5, rng_seed=seed)
            est = rrwoc_nd_randomized(inst.X, inst.Y, cfg)
            hits += np.linalg.norm(est.beta.matrix - inst.truth_beta.matrix) <= 1e-6
        assert hits / runs >= delta - 3 * np.sqrt(delta * (1 - delta) / runs)

    def test_offset_instance_recovered(self):
        rng = np.random.default_rng(12)
        X = rng.normal(size=(10, 2))
        beta = rng.normal(size=(2, 2))
        off = np.array([2.0, -1.0])
        Y = (X @ beta + off)[rng.permutation(10)]
        cfg = ConfigND(margin=1e-9, max_outliers_hint=0, rng_seed=0, fit_offset=True)
        est = rrwoc_nd_randomized(X, Y, cfg)
        assert np.linalg.norm(est.beta.matrix - beta) <= 1e-8
        assert np.linalg.norm(est.beta.offset - off) <= 1e-8
        assert est.inlier_count == 10
