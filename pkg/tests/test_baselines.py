import numpy as np
import pytest

from rrwoc import (
    Coefficients,
    ConfigND,
    IcpConfig,
    InvalidParams,
    SimConfig,
    generate_instance,
    rrwoc_nd_randomized,
    trimmed_icp,
)
from rrwoc.baselines import trimmed_objective


def rotated_instance(seed, k=0, sigma=0.0, n=12):
    cfg = SimConfig(d=3, m_source=n, n_target=n, k_outliers=k, sigma=sigma, rng_seed=seed)
    return generate_instance(cfg)


def test_identity_fixed_point():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(10, 3))
    cfg = IcpConfig(init=Coefficients.identity(3), trim_fraction=0.0)
    est = trimmed_icp(X, X.copy(), cfg)
    assert est.converged and est.n_iterations == 1
    assert np.allclose(est.beta.matrix, np.eye(3), atol=1e-12)
    assert est.inlier_count == 10  # no margin: every matched pair counts


def test_truth_init_is_fixed_point():
    inst = rotated_instance(1)
    cfg = IcpConfig(init=inst.truth_beta, trim_fraction=0.2)
    est = trimmed_icp(inst.X, inst.Y, cfg)
    assert np.linalg.norm(est.beta.matrix - inst.truth_beta.matrix) <= 1e-9
    assert est.converged


def test_trim_zero_bijective_fixed_point():
    inst = rotated_instance(2)
    cfg = IcpConfig(init=inst.truth_beta, trim_fraction=0.0)
    est = trimmed_icp(inst.X, inst.Y, cfg)
    assert np.linalg.norm(est.beta.matrix - inst.truth_beta.matrix) <= 1e-12


def test_objective_non_increasing():
    inst = rotated_instance(3, k=3, sigma=0.05, n=16)
    trim = 0.25
    values = []
    for t in range(1, 9):
        cfg = IcpConfig(trim_fraction=trim, max_iters=t, convergence_tol=1e-300, init_seed=7)
        est = trimmed_icp(inst.X, inst.Y, cfg)
        values.append(trimmed_objective(inst.X, inst.Y, est.beta, trim))
    for a, b in zip(values, values[1:]):
        assert b <= a + 1e-9


def test_nonconvergence_flagged():
    inst = rotated_instance(4, k=4, n=16)
    cfg = IcpConfig(max_iters=1, convergence_tol=1e-300, init_seed=3)
    est = trimmed_icp(inst.X, inst.Y, cfg)
    assert not est.converged and est.n_iterations == 1


def test_outliers_break_icp_but_not_consensus():
    # Random-rotation inits on outlier instances: the descent baseline
    # rarely lands in the right basin, the consensus solver does not care.
    icp_hits = 0
    consensus_hits = 0
    seeds = 12
    for seed in range(seeds):
        inst = rotated_instance(100 + seed, k=3, n=12)
        icp_est = trimmed_icp(inst.X, inst.Y, IcpConfig(init_seed=seed))
        icp_hits += np.linalg.norm(icp_est.beta.matrix - inst.truth_beta.matrix) <= 1e-3
        cfg = ConfigND(margin=1e-9, delta=0.9, max_outliers_hint=3, rng_seed=seed)
        est = rrwoc_nd_randomized(inst.X, inst.Y, cfg)
        consensus_hits += np.linalg.norm(est.beta.matrix - inst.truth_beta.matrix) <= 1e-3
    assert consensus_hits > icp_hits


def test_margin_labels_inliers():
    inst = rotated_instance(5)
    cfg = IcpConfig(init=inst.truth_beta, margin=1e-6)
    est = trimmed_icp(inst.X, inst.Y, cfg)
    assert est.inlier_count == inst.Y.count


def test_config_validation():
    with pytest.raises(InvalidParams):
        IcpConfig(trim_fraction=1.0)
    with pytest.raises(InvalidParams):
        IcpConfig(max_iters=0)
    with pytest.raises(InvalidParams):
        IcpConfig(convergence_tol=0.0)


def test_too_aggressive_trim_rejected():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(3, 3))
    with pytest.raises(InvalidParams):
        trimmed_icp(X, X, IcpConfig(trim_fraction=0.9))
