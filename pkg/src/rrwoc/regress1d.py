"""One-dimensional solvers.

Covers the whole 1D ladder: ordinary least squares with known pairing, the
moment-ratio estimator plus order-statistic matching for the outlier-free
shuffled case, and the consensus solvers (exhaustive over all response/
covariate ratio hypotheses, or a randomized subset of them with an explicit
success-probability iteration bound).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import _engine
from .core import Assignment, Coefficients, MarginSpec, ModelEstimate, as_margin_spec
from .errors import (
    DegenerateCovariates,
    DimensionMismatch,
    InvalidParams,
    NoValidHypothesis,
    ZeroMomentSum,
)

_BATCH = 1 << 15


@dataclass(frozen=True)
class Config1D:
    """Options for the 1D consensus solvers.

    margin: inlier residual threshold (scalar or per-target).
    delta: requested success probability of the randomized variant.
    max_outliers_hint: presumed outlier count used only to size the random
        draw budget; defaults to the worst case allowed, floor(n/2) - 1.
    rng_seed: seed for the draw schedule (randomized variant only).
    """

    margin: MarginSpec | float = 1e-9
    delta: float = 0.9
    max_outliers_hint: int | None = None
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.delta < 1.0:
            raise InvalidParams(f"delta must be in (0, 1), got {self.delta}")
        as_margin_spec(self.margin)


def _as_vector(v: ArrayLike, name: str) -> NDArray[np.float64]:
    a = np.asarray(v, dtype=np.float64).reshape(-1)
    if a.size == 0:
        raise InvalidParams(f"{name} must be nonempty")
    if not np.all(np.isfinite(a)):
        raise InvalidParams(f"{name} must be finite")
    return a


def ols_1d(x: ArrayLike, y: ArrayLike, assignment: Assignment) -> float:
    """Univariate normal equation over the matched pairs.

    beta = sum(y_t * x_s) / sum(x_s^2) for pairs (t, s) of the assignment.
    """
    x = _as_vector(x, "x")
    y = _as_vector(y, "y")
    if assignment.size == 0:
        raise InvalidParams("assignment must contain at least one pair")
    xs = x[assignment.source_indices]
    yt = y[assignment.target_indices]
    denom = float(np.dot(xs, xs))
    if denom == 0.0:
        raise DegenerateCovariates("all matched covariates are zero")
    return float(np.dot(yt, xs) / denom)


def rwoc_1d_moments(x: ArrayLike, y: ArrayLike) -> tuple[float, Assignment]:
    """Moment-ratio estimate plus order-statistic matching (no outliers).

    Assumes y is a complete noiseless permutation of x * beta. The slope is
    the ratio of first moments sum(y)/sum(x); the correspondence matches the
    i-th smallest y to the i-th smallest x * beta, which minimizes the sum of
    squared differences over all permutations.
    """
    x = _as_vector(x, "x")
    y = _as_vector(y, "y")
    if x.size != y.size:
        raise DimensionMismatch(f"need a complete permutation: {x.size} != {y.size}")
    sx = float(np.sum(x))
    if sx == 0.0:
        raise ZeroMomentSum("sum of covariates is zero; moment ratio undefined")
    beta = float(np.sum(y)) / sx
    order_y = np.argsort(y, kind="stable")
    order_fit = np.argsort(x * beta, kind="stable")
    pairs = np.stack([order_y, order_fit], axis=1)
    return beta, Assignment(pairs, y.size, x.size)


def q_iterations_1d(n: int, m: int, k: int, delta: float) -> int:
    """Random draw budget for the 1D consensus solver.

    Smallest q with 1 - (1 - (n-k)/(m n))^q >= delta: enough uniform (i, j)
    draws that at least one true correspondence pair is sampled with
    probability delta.
    """
    if n < 1 or m < 1:
        raise InvalidParams("n and m must be positive")
    if not 0 <= k < n:
        raise InvalidParams(f"need 0 <= k < n, got k={k}, n={n}")
    if not 0.0 < delta < 1.0:
        raise InvalidParams(f"delta must be in (0, 1), got {delta}")
    p_hit = (n - k) / (m * n)
    if p_hit >= 1.0:
        return 1
    q = math.log1p(-delta) / math.log1p(-p_hit)
    return max(1, math.ceil(q))


def oracle_margin_1d(x: ArrayLike, beta: float) -> float:
    """Half the smallest nonzero gap between mapped covariates.

    Residuals of mismatched pairs under the true slope are at least twice
    this value, so it is the widest margin that still separates inliers.
    Requires knowledge of the true slope; intended for tests and diagnostics.
    """
    x = _as_vector(x, "x")
    if x.size < 2:
        raise InvalidParams("need at least two covariates")
    gaps = np.diff(np.sort(x * beta))
    return float(0.5 * gaps.min())


def sample_schedule_1d(
    n: int, m: int, q: int, seed: int
) -> tuple[NDArray[np.int64], NDArray[np.int64]]:
    """The deterministic (i, j) draw schedule used by the randomized solver."""
    rng = np.random.default_rng(seed)
    ii = rng.integers(0, n, size=q)
    jj = rng.integers(0, m, size=q)
    return ii, jj


def _default_k(n: int) -> int:
    return max(0, n // 2 - 1)


def _consensus_1d(
    x: NDArray[np.float64],
    y: NDArray[np.float64],
    ii: NDArray[np.int64],
    jj: NDArray[np.int64],
    margins: NDArray[np.float64],
    extend_rng: np.random.Generator | None,
) -> ModelEstimate:
    """Shared body of the exhaustive and randomized 1D solvers.

    Evaluates the (ii, jj) hypothesis schedule, optionally redrawing
    degenerate (zero-covariate) draws from extend_rng so they do not consume
    budget, then refits on the winning inlier set and keeps whichever of the
    two fits explains more inliers.
    """
    n, m = y.size, x.size
    best_count, best_cost, best_pair = -1, np.inf, None
    evaluated = 0
    offset = 0
    draw_cap = 100 * ii.size + 100
    while offset < ii.size:
        bi = ii[offset : offset + _BATCH]
        bj = jj[offset : offset + _BATCH]
        idx, best_count, best_cost, statuses = _engine._eval_1d_batch(
            x, y, bi, bj, margins, best_count, best_cost
        )
        if idx >= 0:
            best_pair = (int(bi[idx]), int(bj[idx]))
        n_degenerate = int(np.count_nonzero(statuses == _engine.STATUS_DEGENERATE))
        evaluated += statuses.size - n_degenerate
        offset += statuses.size
        if n_degenerate and extend_rng is not None and ii.size + n_degenerate <= draw_cap:
            # Replacement draws keep the effective budget at full strength.
            ri = extend_rng.integers(0, n, size=n_degenerate)
            rj = extend_rng.integers(0, m, size=n_degenerate)
            ii = np.concatenate([ii, ri])
            jj = np.concatenate([jj, rj])
    if best_pair is None:
        raise NoValidHypothesis("every hypothesis pair had a zero covariate")

    _, beta, src, res, total, count, mask = _engine._eval_1d_single(
        x, y, best_pair[0], best_pair[1], margins, -1
    )
    beta, src, res, count, mask = _refit_1d(x, y, beta, src, res, count, mask, margins)
    matched = np.nonzero(src >= 0)[0]
    assignment = Assignment(np.stack([matched, src[matched]], axis=1), n, m)
    return ModelEstimate(
        beta=Coefficients([[beta]]),
        assignment=assignment,
        inliers=tuple(int(t) for t in np.nonzero(mask)[0]),
        residuals=res[matched],
        converged=True,
        n_iterations=evaluated,
    )


def _refit_1d(x, y, beta, src, res, count, mask, margins):
    """Normal-equation refit on the inliers; keep it only if it loses nothing."""
    inl = np.nonzero(mask)[0]
    if inl.size == 0:
        return beta, src, res, count, mask
    xs = x[src[inl]]
    denom = float(np.dot(xs, xs))
    if denom == 0.0:
        return beta, src, res, count, mask
    beta_ref = float(np.dot(y[inl], xs) / denom)
    _, src2, res2, _, count2, mask2 = _engine._score_beta_1d(x, y, beta_ref, margins, -1)
    if count2 >= count:
        return beta_ref, src2, res2, count2, mask2
    return beta, src, res, count, mask


def rrwoc_1d_exhaustive(x: ArrayLike, y: ArrayLike, config: Config1D) -> ModelEstimate:
    """Consensus search over every response/covariate ratio hypothesis.

    Tries beta = y_i / x_j for all (i, j), matches the mapped covariates to
    the responses by optimal assignment, and keeps the hypothesis with the
    most margin-inliers (ties: smaller total matched residual, then earlier
    (i, j)). Pairs with |x_j| below 1e-12 are skipped. The returned slope is
    refit on the winning inlier set.
    """
    x = _as_vector(x, "x")
    y = _as_vector(y, "y")
    margins = as_margin_spec(config.margin).resolve(y.size)
    ii = np.repeat(np.arange(y.size, dtype=np.int64), x.size)
    jj = np.tile(np.arange(x.size, dtype=np.int64), y.size)
    return _consensus_1d(x, y, ii, jj, margins, None)


def rrwoc_1d_randomized(x: ArrayLike, y: ArrayLike, config: Config1D) -> ModelEstimate:
    """Randomized consensus: q uniform (i, j) draws instead of all n*m.

    q comes from q_iterations_1d so a true correspondence is sampled with
    probability config.delta under the outlier hint. Degenerate draws are
    replaced, not counted. Deterministic given config.rng_seed.
    """
    x = _as_vector(x, "x")
    y = _as_vector(y, "y")
    n, m = y.size, x.size
    margins = as_margin_spec(config.margin).resolve(n)
    k = config.max_outliers_hint if config.max_outliers_hint is not None else _default_k(n)
    q = q_iterations_1d(n, m, k, config.delta)
    # Same derivation as sample_schedule_1d; replacement draws for degenerate
    # pairs continue this stream after the main schedule.
    rng = np.random.default_rng(config.rng_seed)
    ii = rng.integers(0, n, size=q)
    jj = rng.integers(0, m, size=q)
    return _consensus_1d(x, y, ii, jj, margins, rng)
