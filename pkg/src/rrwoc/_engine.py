"""JIT-compiled hypothesis evaluation kernels.

A consensus run scores up to millions of candidate coefficient hypotheses,
each requiring a dense solve, a residual matrix, and a linear assignment.
These kernels keep that loop in machine code. The randomized and exhaustive
solvers share the single-hypothesis body, so a given index tuple produces
bit-identical results regardless of which solver evaluated it.

The assignment step minimizes the total Euclidean residual of the matched
pairs. In 1D such costs tie exactly whenever a point lies between two
others; the assignment kernel's fixed scan order resolves those ties
deterministically.

Pruning: a target can only be an inlier if some mapped source lies within its
margin, so the count of such targets upper-bounds the assignment-based inlier
count. Hypotheses whose bound is strictly below the best count seen so far
skip the assignment solve; this cannot change the returned optimum or the
deterministic tie-breaking (count desc, matched cost asc, draw index asc).

Status codes: 0 evaluated, 1 degenerate draw, 2 pruned.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .assignment import _lap_match

STATUS_OK = 0
STATUS_DEGENERATE = 1
STATUS_PRUNED = 2

# Covariates smaller than this cannot anchor a 1D ratio hypothesis.
ZERO_COVARIATE_TOL = 1e-12


@njit(cache=True)
def _score_beta_1d(x, y, beta, margins, prune_below):  # pragma: no cover
    """1D specialization of the scoring body (absolute-difference costs)."""
    m = x.shape[0]
    n = y.shape[0]
    dist = np.empty((n, m))
    bound = 0
    for q in range(n):
        row_min = np.inf
        for p in range(m):
            r = abs(x[p] * beta - y[q])
            dist[q, p] = r
            if r < row_min:
                row_min = r
        if row_min <= margins[q]:
            bound += 1
    src = np.full(n, -1, np.int64)
    res = np.zeros(n)
    mask = np.zeros(n, np.bool_)
    if bound < prune_below:
        return STATUS_PRUNED, src, res, 0.0, -1, mask
    src, total = _lap_match(dist)
    count = 0
    for q in range(n):
        if src[q] >= 0:
            res[q] = dist[q, src[q]]
            if res[q] <= margins[q]:
                mask[q] = True
                count += 1
    return STATUS_OK, src, res, total, count, mask


@njit(cache=True)
def _eval_1d_single(x, y, i, j, margins, prune_below):  # pragma: no cover
    if abs(x[j]) < ZERO_COVARIATE_TOL:
        n = y.shape[0]
        src = np.full(n, -1, np.int64)
        res = np.zeros(n)
        mask = np.zeros(n, np.bool_)
        return STATUS_DEGENERATE, 0.0, src, res, 0.0, -1, mask
    beta = y[i] / x[j]
    status, src, res, total, count, mask = _score_beta_1d(x, y, beta, margins, prune_below)
    return status, beta, src, res, total, count, mask


@njit(cache=True)
def _eval_1d_batch(x, y, ii, jj, margins, best_count, best_cost):  # pragma: no cover
    B = ii.shape[0]
    statuses = np.zeros(B, np.int8)
    best_idx = -1
    for b in range(B):
        status, beta, src, res, total, count, mask = _eval_1d_single(
            x, y, ii[b], jj[b], margins, best_count
        )
        statuses[b] = status
        if status != STATUS_OK:
            continue
        if count > best_count or (count == best_count and total < best_cost):
            best_count = count
            best_cost = total
            best_idx = b
    return best_idx, best_count, best_cost, statuses


@njit(cache=True)
def _score_beta_nd(Xp, Yp, matrix, offset, margins, prune_below):  # pragma: no cover
    """Score a candidate map: assignment, matched residuals, margin inliers."""
    m, d = Xp.shape
    n = Yp.shape[0]
    mapped = Xp @ matrix
    for p in range(m):
        for e in range(d):
            mapped[p, e] += offset[e]
    dist = np.empty((n, m))
    bound = 0
    for q in range(n):
        row_min = np.inf
        for p in range(m):
            acc = 0.0
            for e in range(d):
                diff = mapped[p, e] - Yp[q, e]
                acc += diff * diff
            r = np.sqrt(acc)
            dist[q, p] = r
            if r < row_min:
                row_min = r
        if row_min <= margins[q]:
            bound += 1
    src = np.full(n, -1, np.int64)
    res = np.zeros(n)
    mask = np.zeros(n, np.bool_)
    if bound < prune_below:
        return STATUS_PRUNED, src, res, 0.0, -1, mask
    src, total = _lap_match(dist)
    count = 0
    for q in range(n):
        if src[q] >= 0:
            res[q] = dist[q, src[q]]
            if res[q] <= margins[q]:
                mask[q] = True
                count += 1
    return STATUS_OK, src, res, total, count, mask


@njit(cache=True)
def _eval_nd_single(Xp, Yp, t_tuple, j_tuple, margins, rank_tol, fit_offset, prune_below):  # pragma: no cover
    """Solve the tuple hypothesis and score it.

    The coefficient block is returned as a (d+1, d) array whose last row is
    the affine offset (zero when offsets are not being fit). Offset-free 1D
    hypotheses are the response/covariate ratio, evaluated exactly as the
    dedicated 1D body does (same skip rule for near-zero anchors), so the
    two solver families agree bit for bit when d = 1.
    """
    d = Xp.shape[1]
    n = Yp.shape[0]
    ts = t_tuple.shape[0]
    beta_full = np.zeros((d + 1, d))
    if d == 1 and not fit_offset:
        x = np.ascontiguousarray(Xp[:, 0])
        y = np.ascontiguousarray(Yp[:, 0])
        status, beta, src, res, total, count, mask = _eval_1d_single(
            x, y, t_tuple[0], j_tuple[0], margins, prune_below
        )
        beta_full[0, 0] = beta
        return status, beta_full, src, res, total, count, mask
    cols = d + 1 if fit_offset else d
    design = np.empty((ts, cols))
    rhs = np.empty((ts, d))
    for r in range(ts):
        for e in range(d):
            design[r, e] = Xp[j_tuple[r], e]
            rhs[r, e] = Yp[t_tuple[r], e]
        if fit_offset:
            design[r, d] = 1.0
    U, s, Vt = np.linalg.svd(design, full_matrices=False)
    if s[0] == 0.0 or s[s.shape[0] - 1] < rank_tol * s[0]:
        src = np.full(n, -1, np.int64)
        res = np.zeros(n)
        mask = np.zeros(n, np.bool_)
        return STATUS_DEGENERATE, beta_full, src, res, 0.0, -1, mask
    solution = Vt.T @ ((U.T @ rhs) / s.reshape(-1, 1))
    for e in range(cols):
        for f in range(d):
            beta_full[e, f] = solution[e, f]
    matrix = np.ascontiguousarray(beta_full[:d])
    offset = np.ascontiguousarray(beta_full[d])
    status, src, res, total, count, mask = _score_beta_nd(
        Xp, Yp, matrix, offset, margins, prune_below
    )
    return status, beta_full, src, res, total, count, mask


@njit(cache=True)
def _eval_nd_batch(Xp, Yp, t_tuples, j_tuples, margins, rank_tol, fit_offset,
                   best_count, best_cost):  # pragma: no cover
    """Evaluate a batch of tuple hypotheses, keeping a running best.

    best_count/best_cost carry the optimum from earlier batches so pruning
    and tie-breaking stay globally consistent. Returns the batch-local index
    of any improvement (-1 when the incumbent survives), the updated best
    pair, and per-hypothesis status codes.
    """
    B = t_tuples.shape[0]
    statuses = np.zeros(B, np.int8)
    best_idx = -1
    for b in range(B):
        status, beta_full, src, res, total, count, mask = _eval_nd_single(
            Xp, Yp, t_tuples[b], j_tuples[b], margins, rank_tol, fit_offset, best_count
        )
        statuses[b] = status
        if status != STATUS_OK:
            continue
        if count > best_count or (count == best_count and total < best_cost):
            best_count = count
            best_cost = total
            best_idx = b
    return best_idx, best_count, best_cost, statuses


def warm_up() -> None:
    """Force JIT compilation of every kernel on tiny inputs."""
    x = np.array([1.0, 2.0])
    y = np.array([2.0, 4.0])
    margins1 = np.full(2, 1e-9)
    _eval_1d_batch(x, y, np.array([0, 1]), np.array([0, 1]), margins1, -1, np.inf)
    Xp = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    Yp = Xp.copy()
    t = np.array([[0, 1], [1, 2]], dtype=np.int64)
    j = np.array([[0, 1], [1, 2]], dtype=np.int64)
    margins2 = np.full(3, 1e-9)
    _eval_nd_batch(Xp, Yp, t, j, margins2, 1e-8, False, -1, np.inf)
    _eval_nd_batch(Xp, Yp, t, j, margins2, 1e-8, True, -1, np.inf)
    ones = np.array([[1.0], [2.0]])
    t1 = np.array([[0], [1]], dtype=np.int64)
    _eval_nd_batch(ones, ones.copy(), t1, t1, margins1, 1e-8, False, -1, np.inf)
