import itertools

import numpy as np
import pytest

from rrwoc import _engine


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile (or load from cache) every JIT kernel before any test times anything."""
    _engine.warm_up()


def brute_force_lap(cost):
    """Exhaustive minimum over all injective matchings of size min(n, m).

    Returns (total, pairs) with pairs as a sorted list of (row, col). The
    oracle the fast solver is tested against; O(max! / (max-min)!).
    """
    cost = np.asarray(cost, dtype=float)
    n, m = cost.shape
    best_total, best_pairs = np.inf, None
    if n <= m:
        rows = range(n)
        for cols in itertools.permutations(range(m), n):
            total = sum(cost[i, c] for i, c in zip(rows, cols))
            if total < best_total:
                best_total, best_pairs = total, sorted(zip(rows, cols))
    else:
        cols = range(m)
        for rows_sel in itertools.permutations(range(n), m):
            total = sum(cost[r, j] for r, j in zip(rows_sel, cols))
            if total < best_total:
                best_total, best_pairs = total, sorted(zip(rows_sel, cols))
    return best_total, best_pairs


def best_inlier_count_1d(x, y, nu):
    """Max margin-inlier count over every ratio hypothesis and every injective map."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    best = -1
    for i in range(y.size):
        for j in range(x.size):
            if abs(x[j]) < 1e-12:
                continue
            beta = y[i] / x[j]
            best = max(best, _max_inliers_any_assignment(np.abs(np.subtract.outer(y, x * beta)), nu))
    return best


def _max_inliers_any_assignment(dist, nu):
    """Max inliers over injective matchings = max bipartite matching on dist <= nu."""
    n, m = dist.shape
    adj = dist <= nu
    match_of_col = [-1] * m

    def try_row(r, seen):
        for c in range(m):
            if adj[r, c] and not seen[c]:
                seen[c] = True
                if match_of_col[c] == -1 or try_row(match_of_col[c], seen):
                    match_of_col[c] = r
                    return True
        return False

    count = 0
    for r in range(n):
        if try_row(r, [False] * m):
            count += 1
    return count
