"""Consensus solvers for point sets of any dimension d >= 1.

A hypothesis is an ordered tuple of target indices paired positionally with
an ordered tuple of source indices; solving the tuple's least-squares system
proposes coefficients whose quality is the number of targets matched within
margin by an optimal assignment. The randomized solver samples hypothesis
tuples with an explicit success-probability budget; the exhaustive solver
enumerates every subset pair and ordering and serves as the correctness
oracle for small instances.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import _engine
from .core import (
    Assignment,
    Coefficients,
    MarginSpec,
    ModelEstimate,
    PointSet,
    RANK_TOL,
    as_margin_spec,
    as_point_set,
    solve_lstsq,
)
from .errors import (
    DimensionMismatch,
    InstanceTooLarge,
    InvalidParams,
    NoValidHypothesis,
    RankDeficient,
)

_BATCH = 1 << 15


@dataclass(frozen=True)
class ConfigND:
    """Options for the d-dimensional consensus solvers.

    margin: inlier residual threshold (scalar or per-target).
    delta: requested success probability of the randomized variant.
    max_outliers_hint: presumed outlier count for the draw budget; defaults
        to the worst case allowed, floor(n/2) - 1.
    conservative_q: grow the draw budget by the extra d! factor that ordered
        positional tuple matching costs; guarantees delta either way. Off
        reproduces the optimistic subset-counting bound exactly.
    inlier_pool: which side's non-outlier count feeds the hit-probability
        numerator, "target" (n - k, the derivation consistent with outliers
        living in the target set) or "source" (m - k).
    fit_offset: also estimate an affine offset (tuples grow to d + 1).
    max_iterations_cap: refuse budgets beyond this (guards delta -> 1).
    max_hypotheses: enumeration cap for the exhaustive solver.
    """

    margin: MarginSpec | float = 1e-9
    delta: float = 0.9
    max_outliers_hint: int | None = None
    rng_seed: int = 0
    conservative_q: bool = True
    inlier_pool: str = "target"
    fit_offset: bool = False
    rank_tol: float = RANK_TOL
    max_iterations_cap: int = 10_000_000
    max_hypotheses: int = 1_000_000

    def __post_init__(self) -> None:
        if not 0.0 < self.delta < 1.0:
            raise InvalidParams(f"delta must be in (0, 1), got {self.delta}")
        if self.inlier_pool not in ("target", "source"):
            raise InvalidParams("inlier_pool must be 'target' or 'source'")
        as_margin_spec(self.margin)


def q_iterations_nd(
    n: int,
    m: int,
    k: int,
    d: int,
    delta: float,
    *,
    conservative: bool = False,
    inlier_pool: str = "target",
) -> int:
    """Random tuple-draw budget for the d-dimensional consensus solver.

    Smallest q such that q draws of paired d-tuples contain a fully correct
    correspondence with probability delta, assuming k outliers. The per-draw
    hit probability is C(pool, d) / (C(n, d) C(m, d)) with pool = n - k (or
    m - k with inlier_pool="source"); ``conservative`` divides it by d! to
    account for the positional ordering of the drawn tuples. Binomials are
    evaluated exactly in integer arithmetic.
    """
    if d < 1:
        raise InvalidParams("d must be >= 1")
    if d > min(n, m):
        raise InvalidParams(f"d={d} exceeds min(n, m)={min(n, m)}")
    if not 0 <= k < n:
        raise InvalidParams(f"need 0 <= k < n, got k={k}, n={n}")
    if not 0.0 < delta < 1.0:
        raise InvalidParams(f"delta must be in (0, 1), got {delta}")
    pool = (n - k) if inlier_pool == "target" else (m - k)
    if pool < d:
        raise InvalidParams(f"only {pool} presumed inliers, cannot draw {d}-tuples")
    p_hit = Fraction(math.comb(pool, d), math.comb(n, d) * math.comb(m, d))
    if conservative:
        p_hit /= math.factorial(d)
    if p_hit >= 1:
        return 1
    p = float(p_hit)
    if p <= 0.0:
        raise InvalidParams("hit probability underflows; instance far too large")
    q = math.log1p(-delta) / math.log1p(-p)
    return max(1, math.ceil(q))


def sample_schedule_nd(
    n: int, m: int, tuple_size: int, q: int, seed: int
) -> tuple[NDArray[np.int64], NDArray[np.int64]]:
    """Deterministic draw schedule: q ordered index tuples per side.

    Tuples are without replacement within themselves (rank order of iid
    uniforms), drawn target side then source side per batch.
    """
    rng = np.random.default_rng(seed)
    tt = np.empty((q, tuple_size), dtype=np.int64)
    jj = np.empty((q, tuple_size), dtype=np.int64)
    done = 0
    while done < q:
        b = min(_BATCH, q - done)
        tt[done : done + b] = _draw_tuples(rng, b, n, tuple_size)
        jj[done : done + b] = _draw_tuples(rng, b, m, tuple_size)
        done += b
    return tt, jj


def _draw_tuples(rng: np.random.Generator, count: int, extent: int, size: int) -> NDArray[np.int64]:
    return np.argsort(rng.random((count, extent)), axis=1)[:, :size].astype(np.int64)


def evaluate_hypothesis(
    X: PointSet | ArrayLike,
    Y: PointSet | ArrayLike,
    target_tuple: ArrayLike,
    source_tuple: ArrayLike,
    config: ConfigND,
) -> tuple[Coefficients, Assignment, tuple[int, ...], float]:
    """Score one correspondence hypothesis: the body both solvers share.

    Solves the tuple system, optimally assigns mapped sources to targets,
    and collects margin inliers. Returns (coefficients, full assignment,
    inlier indices, total matched cost). Raises RankDeficient when the drawn
    covariate block is numerically singular.
    """
    X = as_point_set(X)
    Y = as_point_set(Y)
    _check_dims(X, Y)
    margins = as_margin_spec(config.margin).resolve(Y.count)
    tt = np.asarray(target_tuple, dtype=np.int64).reshape(-1)
    jj = np.asarray(source_tuple, dtype=np.int64).reshape(-1)
    if tt.size != jj.size:
        raise InvalidParams("tuples must have equal length")
    status, beta_full, src, res, total, count, mask = _engine._eval_nd_single(
        X.points, Y.points, tt, jj, margins, config.rank_tol, config.fit_offset, -1
    )
    if status == _engine.STATUS_DEGENERATE:
        raise RankDeficient("hypothesis tuple draw is rank deficient")
    beta = _beta_from_full(beta_full, X.dim, config.fit_offset)
    matched = np.nonzero(src >= 0)[0]
    assignment = Assignment(np.stack([matched, src[matched]], axis=1), Y.count, X.count)
    inliers = tuple(int(t) for t in np.nonzero(mask)[0])
    return beta, assignment, inliers, float(total)


def rrwoc_nd_randomized(
    X: PointSet | ArrayLike, Y: PointSet | ArrayLike, config: ConfigND
) -> ModelEstimate:
    """Randomized consensus over sampled correspondence tuples.

    Draws q paired index tuples (q from q_iterations_nd under the config's
    outlier hint and bound flags), scores each hypothesis, and returns the
    best by (inlier count, total matched cost, draw order). The winner's
    coefficients are refit on its matched inlier pairs and the assignment is
    restricted to the final inlier set. Rank-deficient draws are replaced
    and do not consume budget. Deterministic given config.rng_seed.
    """
    X = as_point_set(X)
    Y = as_point_set(Y)
    _check_dims(X, Y)
    n, m, d = Y.count, X.count, X.dim
    ts = d + 1 if config.fit_offset else d
    if min(n, m) < ts:
        raise InvalidParams(f"need at least {ts} points per side, got n={n}, m={m}")
    margins = as_margin_spec(config.margin).resolve(n)
    k = config.max_outliers_hint if config.max_outliers_hint is not None else max(0, n // 2 - 1)
    q = q_iterations_nd(
        n, m, k, ts, config.delta,
        conservative=config.conservative_q, inlier_pool=config.inlier_pool,
    )
    if q > config.max_iterations_cap:
        raise InvalidParams(
            f"iteration bound {q} exceeds max_iterations_cap={config.max_iterations_cap}"
        )

    rng = np.random.default_rng(config.rng_seed)
    best: _Best = _Best()
    remaining = q
    draw_cap = 100 * q + 100
    drawn = 0
    while remaining > 0 and drawn < draw_cap:
        b = min(_BATCH, remaining)
        tt = _draw_tuples(rng, b, n, ts)
        jj = _draw_tuples(rng, b, m, ts)
        drawn += b
        n_degenerate = _scan_batch(X.points, Y.points, tt, jj, margins, config, best)
        remaining -= b - n_degenerate
    if best.tuple_pair is None:
        raise NoValidHypothesis("all sampled tuples were rank deficient")
    return _finalize(X, Y, margins, config, best, n_iterations=q - remaining)


def rrwoc_nd_exhaustive(
    X: PointSet | ArrayLike, Y: PointSet | ArrayLike, config: ConfigND
) -> ModelEstimate:
    """Enumerate every subset pair and ordering; the small-instance oracle.

    Evaluates the same hypothesis body as the randomized solver on all
    C(n, d) * C(m, d) * d! ordered tuple pairs (target subsets ascending,
    source subsets in every order). Deterministic; refuses instances whose
    hypothesis count exceeds config.max_hypotheses.
    """
    X = as_point_set(X)
    Y = as_point_set(Y)
    _check_dims(X, Y)
    n, m, d = Y.count, X.count, X.dim
    ts = d + 1 if config.fit_offset else d
    if min(n, m) < ts:
        raise InvalidParams(f"need at least {ts} points per side, got n={n}, m={m}")
    total = math.comb(n, ts) * math.comb(m, ts) * math.factorial(ts)
    if total > config.max_hypotheses:
        raise InstanceTooLarge(
            f"{total} hypotheses exceed max_hypotheses={config.max_hypotheses}"
        )
    margins = as_margin_spec(config.margin).resolve(n)

    best = _Best()
    evaluated = 0
    pairs = itertools.product(
        itertools.combinations(range(n), ts),
        itertools.permutations(range(m), ts),
    )
    # Orderings of the source tuple against a fixed ascending target tuple
    # realize the d! pairings; batches keep the kernel call count low.
    while True:
        chunk = list(itertools.islice(pairs, _BATCH))
        if not chunk:
            break
        tt = np.asarray([c[0] for c in chunk], dtype=np.int64)
        jj = np.asarray([c[1] for c in chunk], dtype=np.int64)
        n_degenerate = _scan_batch(X.points, Y.points, tt, jj, margins, config, best)
        evaluated += len(chunk) - n_degenerate
    if best.tuple_pair is None:
        raise NoValidHypothesis("all hypothesis tuples were rank deficient")
    return _finalize(X, Y, margins, config, best, n_iterations=evaluated)


class _Best:
    """Running optimum with the deterministic tie-break."""

    __slots__ = ("count", "cost", "tuple_pair")

    def __init__(self) -> None:
        self.count = -1
        self.cost = np.inf
        self.tuple_pair: tuple[NDArray[np.int64], NDArray[np.int64]] | None = None


def _check_dims(X: PointSet, Y: PointSet) -> None:
    if X.dim != Y.dim:
        raise DimensionMismatch(f"source dim {X.dim} != target dim {Y.dim}")
    if X.count < 1 or Y.count < 1:
        raise InvalidParams("point sets must be nonempty")


def _scan_batch(Xp, Yp, tt, jj, margins, config: ConfigND, best: _Best) -> int:
    idx, best.count, best.cost, statuses = _engine._eval_nd_batch(
        Xp, Yp, tt, jj, margins, config.rank_tol, config.fit_offset,
        best.count, best.cost,
    )
    if idx >= 0:
        best.tuple_pair = (tt[idx].copy(), jj[idx].copy())
    return int(np.count_nonzero(statuses == _engine.STATUS_DEGENERATE))


def _beta_from_full(beta_full: NDArray[np.float64], d: int, fit_offset: bool) -> Coefficients:
    return Coefficients(beta_full[:d], beta_full[d] if fit_offset else None)


def _finalize(
    X: PointSet,
    Y: PointSet,
    margins: NDArray[np.float64],
    config: ConfigND,
    best: _Best,
    n_iterations: int,
) -> ModelEstimate:
    """Re-evaluate the winner, refit on its inliers, restrict to the inlier set."""
    tt, jj = best.tuple_pair
    _, beta_full, src, res, total, count, mask = _engine._eval_nd_single(
        X.points, Y.points, tt, jj, margins, config.rank_tol, config.fit_offset, -1
    )
    beta = _beta_from_full(beta_full, X.dim, config.fit_offset)
    beta, src, res, count, mask = _refit_nd(X, Y, margins, config, beta, src, res, count, mask)
    inliers = np.nonzero(mask)[0]
    pairs = np.stack([inliers, src[inliers]], axis=1)
    assignment = Assignment(pairs, Y.count, X.count)
    return ModelEstimate(
        beta=beta,
        assignment=assignment,
        inliers=tuple(int(t) for t in inliers),
        residuals=res[inliers],
        converged=True,
        n_iterations=n_iterations,
    )


def _refit_nd(X, Y, margins, config: ConfigND, beta, src, res, count, mask):
    """Least-squares refit on the matched inlier pairs, kept only if it loses nothing.

    Offset-free 1D runs delegate to the 1D normal-equation refit so this
    solver family and the dedicated 1D solvers stay bit-identical there.
    """
    if X.dim == 1 and not config.fit_offset:
        from .regress1d import _refit_1d

        b, src, res, count, mask = _refit_1d(
            X.points[:, 0], Y.points[:, 0],
            float(beta.matrix[0, 0]), src, res, count, mask, margins,
        )
        return Coefficients([[b]]), src, res, count, mask
    inl = np.nonzero(mask)[0]
    min_rows = X.dim + 1 if config.fit_offset else X.dim
    if inl.size < min_rows:
        return beta, src, res, count, mask
    try:
        refit = solve_lstsq(
            X.points[src[inl]], Y.points[inl],
            fit_offset=config.fit_offset, rank_tol=config.rank_tol,
        )
    except RankDeficient:
        return beta, src, res, count, mask
    offset = refit.offset if refit.offset is not None else np.zeros(X.dim)
    _, src2, res2, _, count2, mask2 = _engine._score_beta_nd(
        X.points, Y.points, refit.matrix, offset, margins, -1
    )
    if count2 >= count:
        return refit, src2, res2, count2, mask2
    return beta, src, res, count, mask
