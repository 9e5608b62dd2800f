"""Trimmed iterative-closest-point baseline.

Descent-based comparison method: alternate nearest-neighbor matching of the
mapped sources to the targets, discard the worst-residual fraction of the
matches, and refit the map by least squares on the kept pairs. The transform
class is the same general d x d linear map the consensus solvers estimate,
so comparisons are like for like. Initialization-dependent by nature; when
the iteration stalls the result is flagged, not raised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .assignment import linear_assignment
from .core import (
    Coefficients,
    MarginSpec,
    ModelEstimate,
    PointSet,
    as_margin_spec,
    as_point_set,
    matched_residuals,
    residual_matrix,
    solve_lstsq,
)
from .errors import InvalidParams, RankDeficient


@dataclass(frozen=True)
class IcpConfig:
    """Trimmed-ICP options.

    trim_fraction: worst fraction of matches dropped each iteration.
    init: starting map; None draws a random rotation from init_seed using
        the same orthonormal-factor sampler the simulator uses.
    margin: optional inlier threshold for the reported estimate; None counts
        every matched pair of the final correspondence as an inlier.
    """

    trim_fraction: float = 0.2
    max_iters: int = 100
    convergence_tol: float = 1e-9
    init: Coefficients | None = None
    init_seed: int = 0
    fit_offset: bool = False
    margin: MarginSpec | float | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.trim_fraction < 1.0:
            raise InvalidParams("trim_fraction must be in [0, 1)")
        if self.max_iters < 1:
            raise InvalidParams("max_iters must be >= 1")
        if self.convergence_tol <= 0.0:
            raise InvalidParams("convergence_tol must be positive")


def nearest_neighbor_pairs(
    X: PointSet | ArrayLike, Y: PointSet | ArrayLike, beta: Coefficients
) -> tuple[NDArray[np.int64], NDArray[np.float64]]:
    """Closest target per mapped source point (ties to the lower target index).

    Returns (target_of_source, distances), both of length m.
    """
    X = as_point_set(X)
    Y = as_point_set(Y)
    dist = residual_matrix(X, Y, beta)  # (n, m): rows targets, cols sources
    nn = np.argmin(dist, axis=0)
    return nn.astype(np.int64), dist[nn, np.arange(X.count)]


def _kept_count(n_pairs: int, trim_fraction: float, d: int) -> int:
    keep = math.ceil((1.0 - trim_fraction) * n_pairs)
    return max(d, min(n_pairs, keep))


def trimmed_objective(
    X: PointSet | ArrayLike,
    Y: PointSet | ArrayLike,
    beta: Coefficients,
    trim_fraction: float,
) -> float:
    """Sum of kept squared nearest-neighbor residuals under the given map."""
    X = as_point_set(X)
    _, dists = nearest_neighbor_pairs(X, Y, beta)
    keep = _kept_count(dists.size, trim_fraction, X.dim)
    kept = np.sort(dists)[:keep]
    return float(np.dot(kept, kept))


def trimmed_icp(
    X: PointSet | ArrayLike, Y: PointSet | ArrayLike, config: IcpConfig
) -> ModelEstimate:
    """Alternating trimmed matching and least-squares map updates.

    Stops when the coefficient change drops below config.convergence_tol or
    after config.max_iters iterations; the returned estimate's ``converged``
    flag records which. The final correspondence is reported as an optimal
    injective assignment under the final map so the estimate is directly
    comparable with the consensus solvers' output.
    """
    X = as_point_set(X)
    Y = as_point_set(Y)
    if X.dim != Y.dim:
        raise InvalidParams(f"source dim {X.dim} != target dim {Y.dim}")
    d = X.dim
    min_rows = d + 1 if config.fit_offset else d
    if math.ceil((1.0 - config.trim_fraction) * X.count) < min_rows:
        raise InvalidParams("too few points survive trimming to fit the map")

    if config.init is not None:
        beta = config.init
    else:
        from .simulate import random_rotation_scaled

        beta = random_rotation_scaled(d, (1.0, 1.0), config.init_seed)

    converged = False
    iters_run = 0
    for _ in range(config.max_iters):
        iters_run += 1
        nn, dists = nearest_neighbor_pairs(X, Y, beta)
        keep = _kept_count(dists.size, config.trim_fraction, min_rows)
        kept_src = np.argsort(dists, kind="stable")[:keep]
        try:
            new_beta = solve_lstsq(
                X.points[kept_src], Y.points[nn[kept_src]], fit_offset=config.fit_offset
            )
        except RankDeficient:
            break  # stalled on a degenerate kept set
        change = float(np.linalg.norm(new_beta.matrix - beta.matrix))
        if new_beta.offset is not None and beta.offset is not None:
            change += float(np.linalg.norm(new_beta.offset - beta.offset))
        elif new_beta.offset is not None:
            change += float(np.linalg.norm(new_beta.offset))
        beta = new_beta
        if change < config.convergence_tol:
            converged = True
            break

    assignment, _ = linear_assignment(residual_matrix(X, Y, beta))
    t = assignment.target_indices
    residuals = matched_residuals(X, Y, beta, assignment)
    if config.margin is None:
        inliers = tuple(int(i) for i in t)
    else:
        margins = as_margin_spec(config.margin).resolve(Y.count)
        inliers = tuple(int(i) for i in t[residuals <= margins[t]])
    return ModelEstimate(
        beta=beta,
        assignment=assignment,
        inliers=inliers,
        residuals=residuals,
        converged=converged,
        n_iterations=iters_run,
    )
