"""Optimal rectangular linear assignment.

Shortest-augmenting-path solver in the Jonker-Volgenant style, O(max(n,m)^3).
Rectangular inputs terminate after min(n, m) augmentations instead of being
padded square. The kernel is JIT-compiled because the consensus solvers call
it once per hypothesis, which can mean millions of calls per run.

Costs may be arbitrary finite reals; negatives are fine. Ties between equally
cheap assignments are broken deterministically by the fixed row processing
order (rows are satisfied lowest index first).
"""

from __future__ import annotations

import numpy as np
from numba import njit
from numpy.typing import ArrayLike, NDArray

from .core import Assignment
from .errors import InvalidParams


@njit(cache=True)
def _sap_kernel(cost):  # pragma: no cover - exercised via linear_assignment
    """Augmenting-path assignment for cost with n_rows <= n_cols.

    Returns col4row where col4row[i] is the column matched to row i.
    Maintains dual potentials u, v and grows one shortest augmenting path per
    row (Dijkstra over reduced costs).
    """
    n, m = cost.shape
    u = np.zeros(n)
    v = np.zeros(m)
    row4col = np.full(m, -1, np.int64)
    col4row = np.full(n, -1, np.int64)
    shortest = np.empty(m)
    path = np.full(m, -1, np.int64)
    remaining = np.empty(m, np.int64)
    sr = np.zeros(n, np.bool_)
    sc = np.zeros(m, np.bool_)
    for cur_row in range(n):
        min_val = 0.0
        i = cur_row
        num_remaining = m
        for jp in range(m):
            remaining[jp] = m - jp - 1
        sr[:] = False
        sc[:] = False
        shortest[:] = np.inf
        sink = -1
        while sink == -1:
            index = -1
            lowest = np.inf
            sr[i] = True
            for it in range(num_remaining):
                j = remaining[it]
                r = min_val + cost[i, j] - u[i] - v[j]
                if r < shortest[j]:
                    path[j] = i
                    shortest[j] = r
                # Prefer a column that closes the path when costs tie.
                if shortest[j] < lowest or (shortest[j] == lowest and row4col[j] == -1):
                    lowest = shortest[j]
                    index = it
            min_val = lowest
            if min_val == np.inf:
                return np.full(n, -1, np.int64)
            j = remaining[index]
            if row4col[j] == -1:
                sink = j
            else:
                i = row4col[j]
            sc[j] = True
            num_remaining -= 1
            remaining[index] = remaining[num_remaining]
        u[cur_row] += min_val
        for ip in range(n):
            if sr[ip] and ip != cur_row:
                u[ip] += min_val - shortest[col4row[ip]]
        for jp in range(m):
            if sc[jp]:
                v[jp] -= min_val - shortest[jp]
        j = sink
        while True:
            i = path[j]
            row4col[j] = i
            j, col4row[i] = col4row[i], j
            if i == cur_row:
                break
    return col4row


@njit(cache=True)
def _lap_match(cost):  # pragma: no cover - exercised via linear_assignment
    """Match min(n, m) pairs of an (n, m) cost matrix.

    Returns (src_of_tgt, total) where src_of_tgt[q] is the column matched to
    row q, -1 when row q is unmatched, and total is the summed matched cost.
    """
    n, m = cost.shape
    src_of_tgt = np.full(n, -1, np.int64)
    total = 0.0
    if n <= m:
        col4row = _sap_kernel(cost)
        for i in range(n):
            src_of_tgt[i] = col4row[i]
            total += cost[i, col4row[i]]
    else:
        col4row = _sap_kernel(np.ascontiguousarray(cost.T))
        for j in range(m):
            src_of_tgt[col4row[j]] = j
            total += cost[col4row[j], j]
    return src_of_tgt, total


def linear_assignment(cost: ArrayLike) -> tuple[Assignment, float]:
    """Minimum-cost partial injective matching of rows to columns.

    Matches exactly min(n, m) row/column pairs so that the summed matched
    cost is minimal over all injective matchings of that size. Returns the
    assignment (rows are target indices, columns source indices) and the
    total matched cost.
    """
    c = np.ascontiguousarray(np.asarray(cost, dtype=np.float64))
    if c.ndim != 2:
        raise InvalidParams(f"cost matrix must be 2-D, got shape {c.shape}")
    if c.shape[0] < 1 or c.shape[1] < 1:
        raise InvalidParams("cost matrix must be at least 1x1")
    if not np.all(np.isfinite(c)):
        raise InvalidParams("cost matrix must be finite")
    src_of_tgt, total = _lap_match(c)
    matched = np.nonzero(src_of_tgt >= 0)[0]
    pairs = np.stack([matched, src_of_tgt[matched]], axis=1)
    return Assignment(pairs, c.shape[0], c.shape[1]), float(total)
