"""Domain types shared by every solver plus the small dense linear-algebra helpers.

All types are immutable after construction (arrays are marked read-only) and
the operations are pure functions, so instances can be shared freely across
threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DimensionMismatch, InvalidParams, RankDeficient

# Relative singular-value ratio below which a covariate block is treated as
# rank deficient. Prevents explosive coefficients from near-collinear draws.
RANK_TOL = 1e-8


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class PointSet:
    """An unordered collection of d-dimensional real points, one per row.

    Zero-point sets are representable (sampling routines may produce them);
    solvers validate nonemptiness at their own boundaries.
    """

    points: NDArray[np.float64]

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2:
            raise DimensionMismatch(f"points must be a 2-D array, got shape {pts.shape}")
        if pts.shape[1] < 1:
            raise DimensionMismatch("points must have dimension >= 1")
        if not np.all(np.isfinite(pts)):
            raise InvalidParams("points must be finite (no NaN/inf)")
        object.__setattr__(self, "points", _frozen(pts))

    @property
    def count(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def as_point_set(data: PointSet | ArrayLike) -> PointSet:
    """Coerce a PointSet or array-like of shape (count, dim) into a PointSet."""
    if isinstance(data, PointSet):
        return data
    return PointSet(np.asarray(data, dtype=np.float64))


@dataclass(frozen=True, eq=False)
class Assignment:
    """A partial injective map from target indices to source indices.

    ``pairs`` holds (target_index, source_index) rows sorted by target index;
    each index appears at most once on its side.
    """

    pairs: NDArray[np.int64]
    n_target: int
    m_source: int

    def __post_init__(self) -> None:
        pairs = np.asarray(self.pairs, dtype=np.int64).reshape(-1, 2)
        if self.n_target < 0 or self.m_source < 0:
            raise InvalidParams("extents must be nonnegative")
        if pairs.shape[0] > min(self.n_target, self.m_source):
            raise InvalidParams("assignment larger than min(n_target, m_source)")
        if pairs.size:
            t, s = pairs[:, 0], pairs[:, 1]
            if t.min(initial=0) < 0 or s.min(initial=0) < 0:
                raise InvalidParams("negative index in assignment")
            if t.max(initial=-1) >= self.n_target or s.max(initial=-1) >= self.m_source:
                raise InvalidParams("assignment index out of range")
            if len(np.unique(t)) != len(t) or len(np.unique(s)) != len(s):
                raise InvalidParams("assignment must be injective on both sides")
            pairs = pairs[np.argsort(t)]
        object.__setattr__(self, "pairs", _frozen(pairs))

    @property
    def size(self) -> int:
        return self.pairs.shape[0]

    @property
    def target_indices(self) -> NDArray[np.int64]:
        return self.pairs[:, 0]

    @property
    def source_indices(self) -> NDArray[np.int64]:
        return self.pairs[:, 1]

    def source_of(self) -> dict[int, int]:
        """Target index -> source index lookup."""
        return {int(t): int(s) for t, s in self.pairs}

    def restrict(self, targets: Sequence[int]) -> "Assignment":
        """Keep only the pairs whose target index is in ``targets``."""
        keep = np.isin(self.pairs[:, 0], np.asarray(list(targets), dtype=np.int64))
        return Assignment(self.pairs[keep], self.n_target, self.m_source)


@dataclass(frozen=True, eq=False)
class Coefficients:
    """A square d x d linear map, optionally with an affine offset row."""

    matrix: NDArray[np.float64]
    offset: NDArray[np.float64] | None = None

    def __post_init__(self) -> None:
        mat = np.atleast_2d(np.asarray(self.matrix, dtype=np.float64))
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DimensionMismatch(f"coefficient matrix must be square, got {mat.shape}")
        if not np.all(np.isfinite(mat)):
            raise InvalidParams("coefficients must be finite")
        object.__setattr__(self, "matrix", _frozen(mat))
        if self.offset is not None:
            off = np.asarray(self.offset, dtype=np.float64).reshape(-1)
            if off.shape[0] != mat.shape[0]:
                raise DimensionMismatch("offset length must equal matrix dimension")
            if not np.all(np.isfinite(off)):
                raise InvalidParams("offset must be finite")
            object.__setattr__(self, "offset", _frozen(off))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def apply(self, points: ArrayLike) -> NDArray[np.float64]:
        """Map points (rows) through the linear part plus any offset."""
        out = np.asarray(points, dtype=np.float64) @ self.matrix
        if self.offset is not None:
            out = out + self.offset
        return out

    @staticmethod
    def identity(dim: int) -> "Coefficients":
        return Coefficients(np.eye(dim))


@dataclass(frozen=True, eq=False)
class MarginSpec:
    """Inlier residual threshold: one scalar for all targets or one value per target."""

    values: NDArray[np.float64]
    is_scalar: bool

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if vals.size == 0:
            raise InvalidParams("margin spec must hold at least one value")
        if np.any(np.isnan(vals)) or np.any(vals < 0):
            raise InvalidParams("margins must be nonnegative")
        if self.is_scalar and vals.size != 1:
            raise InvalidParams("scalar margin must hold exactly one value")
        object.__setattr__(self, "values", _frozen(vals))

    @staticmethod
    def scalar(value: float) -> "MarginSpec":
        return MarginSpec(np.asarray([value], dtype=np.float64), True)

    @staticmethod
    def per_target(values: ArrayLike) -> "MarginSpec":
        return MarginSpec(np.asarray(values, dtype=np.float64), False)

    def resolve(self, n_target: int) -> NDArray[np.float64]:
        """Margins as an (n_target,) array; per-target lengths must match."""
        if self.is_scalar:
            return np.full(n_target, self.values[0])
        if self.values.shape[0] != n_target:
            raise InvalidParams(
                f"per-target margins have length {self.values.shape[0]}, expected {n_target}"
            )
        return self.values.copy()


def as_margin_spec(margin: MarginSpec | float) -> MarginSpec:
    if isinstance(margin, MarginSpec):
        return margin
    return MarginSpec.scalar(float(margin))


@dataclass(frozen=True, eq=False)
class ModelEstimate:
    """Solution triple: coefficients, correspondence, inlier set, plus residuals.

    ``residuals`` is aligned with ``assignment.pairs`` (ascending target index).
    ``converged`` is only meaningful for iterative solvers; consensus solvers
    always report True. ``n_iterations`` counts hypotheses or iterations used.
    """

    beta: Coefficients
    assignment: Assignment
    inliers: tuple[int, ...]
    residuals: NDArray[np.float64]
    inlier_count: int = field(default=-1)
    converged: bool = True
    n_iterations: int = 0

    def __post_init__(self) -> None:
        res = np.asarray(self.residuals, dtype=np.float64).reshape(-1)
        if res.shape[0] != self.assignment.size:
            raise InvalidParams("residuals must align with assignment pairs")
        object.__setattr__(self, "residuals", _frozen(res))
        inliers = tuple(sorted(int(i) for i in self.inliers))
        object.__setattr__(self, "inliers", inliers)
        matched = set(int(t) for t in self.assignment.target_indices)
        if not set(inliers) <= matched:
            raise InvalidParams("inliers must be matched target indices")
        if self.inlier_count == -1:
            object.__setattr__(self, "inlier_count", len(inliers))
        elif self.inlier_count != len(inliers):
            raise InvalidParams("inlier_count does not match the inlier set")

    @property
    def beta_1d(self) -> float:
        """Convenience scalar view for one-dimensional estimates."""
        if self.beta.dim != 1:
            raise DimensionMismatch("estimate is not one-dimensional")
        return float(self.beta.matrix[0, 0])


# ---------------------------------------------------------------------------
# Dense solves and residual geometry
# ---------------------------------------------------------------------------


def solve_lstsq(
    A: ArrayLike,
    B: ArrayLike,
    *,
    fit_offset: bool = False,
    rank_tol: float = RANK_TOL,
) -> Coefficients:
    """Least-squares solve of A beta = B in the Frobenius norm.

    A is (k, d) covariate rows, B is (k, d) response rows, k >= d. With
    ``fit_offset`` a constant column of ones is appended to A and the extra
    solved row is returned as the affine offset (requires k >= d + 1).

    Raises RankDeficient when the smallest singular value of the (augmented)
    covariate block falls below ``rank_tol`` times the largest, which signals
    a degenerate hypothesis draw that the caller should skip.
    """
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    if A.ndim != 2 or B.ndim != 2:
        raise DimensionMismatch("A and B must be 2-D")
    if A.shape[0] != B.shape[0]:
        raise DimensionMismatch(f"row counts differ: {A.shape[0]} vs {B.shape[0]}")
    if A.shape[1] != B.shape[1]:
        raise DimensionMismatch(f"dimensions differ: {A.shape[1]} vs {B.shape[1]}")
    d = A.shape[1]
    design = np.hstack([A, np.ones((A.shape[0], 1))]) if fit_offset else A
    if A.shape[0] < design.shape[1]:
        raise InvalidParams(
            f"need at least {design.shape[1]} rows to determine a {d}-dim map, got {A.shape[0]}"
        )
    U, s, Vt = np.linalg.svd(design, full_matrices=False)
    if s[0] == 0.0 or s[-1] < rank_tol * s[0]:
        raise RankDeficient(f"singular-value ratio {s[-1]:.3e}/{s[0]:.3e} below {rank_tol:.0e}")
    solution = Vt.T @ ((U.T @ B) / s.reshape(-1, 1))
    if fit_offset:
        return Coefficients(solution[:d], solution[d])
    return Coefficients(solution)


def residual_matrix(
    X: PointSet | ArrayLike,
    Y: PointSet | ArrayLike,
    beta: Coefficients,
) -> NDArray[np.float64]:
    """Pairwise Euclidean distances between mapped sources and targets.

    Entry (q, p) is ``|| x_p beta - y_q ||_2``: rows index targets, columns
    index sources, matching the orientation the assignment step consumes.
    """
    X = as_point_set(X)
    Y = as_point_set(Y)
    if X.dim != Y.dim:
        raise DimensionMismatch(f"source dim {X.dim} != target dim {Y.dim}")
    if beta.dim != X.dim:
        raise DimensionMismatch(f"coefficients dim {beta.dim} != point dim {X.dim}")
    mapped = beta.apply(X.points)
    diff = Y.points[:, None, :] - mapped[None, :, :]
    return np.sqrt(np.einsum("qpd,qpd->qp", diff, diff))


def count_inliers(
    X: PointSet | ArrayLike,
    Y: PointSet | ArrayLike,
    beta: Coefficients,
    assignment: Assignment,
    margin: MarginSpec | float,
) -> tuple[tuple[int, ...], int]:
    """Matched target indices whose residual is within their margin.

    Returns the sorted inlier index tuple and its cardinality. Monotone in the
    margin: enlarging margins never removes an inlier.
    """
    X = as_point_set(X)
    Y = as_point_set(Y)
    if assignment.n_target != Y.count or assignment.m_source != X.count:
        raise DimensionMismatch("assignment extents do not match the point sets")
    margins = as_margin_spec(margin).resolve(Y.count)
    if assignment.size == 0:
        return (), 0
    t = assignment.target_indices
    s = assignment.source_indices
    res = np.linalg.norm(beta.apply(X.points[s]) - Y.points[t], axis=1)
    inliers = tuple(int(i) for i in t[res <= margins[t]])
    return inliers, len(inliers)


def matched_residuals(
    X: PointSet | ArrayLike,
    Y: PointSet | ArrayLike,
    beta: Coefficients,
    assignment: Assignment,
) -> NDArray[np.float64]:
    """Euclidean residual of every matched pair, aligned with assignment.pairs."""
    X = as_point_set(X)
    Y = as_point_set(Y)
    if assignment.size == 0:
        return np.zeros(0)
    t = assignment.target_indices
    s = assignment.source_indices
    return np.linalg.norm(beta.apply(X.points[s]) - Y.points[t], axis=1)


