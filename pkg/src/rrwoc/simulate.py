"""Ground-truth instance generation and Monte-Carlo recovery experiments.

Instances follow the generative model the solvers target: standard-normal
source points, a uniformly random scaled rotation, a noisy partial
permutation into the target set, and outlier targets drawn uniformly from
the convex hull of the inlier targets. The sweep harness measures recovery
rates (coefficient error within 1e-3 Frobenius) over parameter grids and
emits one stable-schema CSV row per cell.
"""

from __future__ import annotations

import csv
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.spatial import ConvexHull, Delaunay, QhullError

from .baselines import IcpConfig, trimmed_icp
from .core import Assignment, Coefficients, MarginSpec, PointSet, as_point_set
from .errors import DegenerateHull, InvalidParams, RrwocError
from .regress1d import Config1D, rrwoc_1d_exhaustive, rrwoc_1d_randomized
from .regressnd import ConfigND, rrwoc_nd_exhaustive, rrwoc_nd_randomized

# Margin used for noiseless cells, where any arbitrarily small value works.
NOISELESS_MARGIN = 1e-9

# Coefficient error below which a run counts as a recovery.
RECOVERY_TOL = 1e-3


def _as_rng(seed: int | np.random.Generator) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_rotation_scaled(
    d: int, scale_range: tuple[float, float], seed: int | np.random.Generator
) -> Coefficients:
    """A uniformly random rotation scaled by s ~ U[scale_range].

    The orthonormal factor of a Gaussian matrix, sign-normalized so the
    distribution is uniform over the orthogonal group (determinant sign
    unconstrained); every singular value of the result equals s.
    """
    if d < 1:
        raise InvalidParams("d must be >= 1")
    lo, hi = float(scale_range[0]), float(scale_range[1])
    if lo <= 0 or hi < lo:
        raise InvalidParams("scale_range must be positive and ordered")
    rng = _as_rng(seed)
    gauss = rng.normal(size=(d, d))
    Q, R = np.linalg.qr(gauss)
    Q = Q * np.sign(np.diag(R))
    s = rng.uniform(lo, hi)
    return Coefficients(s * Q)


def in_hull(points: PointSet | ArrayLike, queries: ArrayLike, tol: float = 1e-9) -> NDArray[np.bool_]:
    """Membership test of query rows in the convex hull of ``points``."""
    pts = as_point_set(points).points
    q = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    if pts.shape[1] == 1:
        lo, hi = pts.min(), pts.max()
        return (q[:, 0] >= lo - tol) & (q[:, 0] <= hi + tol)
    hull = _build_hull(pts)
    # Half-space form: A x + b <= 0 inside, rows of hull.equations are [A | b].
    vals = q @ hull.equations[:, :-1].T + hull.equations[:, -1]
    return np.all(vals <= tol, axis=1)


def _build_hull(pts: NDArray[np.float64]) -> ConvexHull:
    try:
        return ConvexHull(pts)
    except (QhullError, ValueError) as exc:
        raise DegenerateHull(f"points do not span a full-dimensional hull: {exc}") from exc


def sample_in_hull(
    points: PointSet | ArrayLike, count: int, seed: int | np.random.Generator
) -> PointSet:
    """Uniform samples from the convex hull of the input points.

    Rejection-samples the bounding box against the hull's half-spaces;
    switches to volume-weighted simplex sampling when the expected
    acceptance rate drops below 1%, which stays exactly uniform.
    """
    pts = as_point_set(points).points
    if count < 0:
        raise InvalidParams("count must be >= 0")
    d = pts.shape[1]
    rng = _as_rng(seed)
    if count == 0:
        return PointSet(np.zeros((0, d)))
    if d == 1:
        lo, hi = float(pts.min()), float(pts.max())
        if hi <= lo:
            raise DegenerateHull("1-D hull has zero length")
        return PointSet(rng.uniform(lo, hi, size=(count, 1)))

    hull = _build_hull(pts)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    box_volume = float(np.prod(hi - lo))
    acceptance = hull.volume / box_volume if box_volume > 0 else 0.0
    if acceptance >= 0.01:
        out = np.empty((count, d))
        filled = 0
        batch = max(32, int(2 * count / max(acceptance, 1e-6)))
        while filled < count:
            cand = rng.uniform(lo, hi, size=(batch, d))
            ok = cand[in_hull(pts, cand, tol=0.0)]
            take = min(count - filled, ok.shape[0])
            out[filled : filled + take] = ok[:take]
            filled += take
        return PointSet(out)
    return PointSet(_sample_simplices(pts, count, rng))


def _sample_simplices(pts: NDArray[np.float64], count: int, rng: np.random.Generator) -> NDArray[np.float64]:
    """Volume-weighted Delaunay simplex sampling (exactly uniform in the hull)."""
    d = pts.shape[1]
    try:
        tri = Delaunay(pts)
    except (QhullError, ValueError) as exc:
        raise DegenerateHull(f"triangulation failed: {exc}") from exc
    verts = pts[tri.simplices]  # (n_simplices, d+1, d)
    edges = verts[:, 1:, :] - verts[:, :1, :]
    volumes = np.abs(np.linalg.det(edges)) / math.factorial(d)
    total = volumes.sum()
    if total <= 0:
        raise DegenerateHull("triangulated hull has zero volume")
    chosen = rng.choice(volumes.size, size=count, p=volumes / total)
    weights = rng.dirichlet(np.ones(d + 1), size=count)
    return np.einsum("cv,cvd->cd", weights, verts[chosen])


@dataclass(frozen=True)
class SimConfig:
    """Instance-generation parameters.

    m_source points are drawn standard normal; n_target - k_outliers of them
    (a random subset) are mapped through a random scaled rotation plus
    N(0, sigma^2 I) noise, and k_outliers targets are drawn uniformly from
    the convex hull of those inliers. Target rows are shuffled uniformly.
    """

    d: int = 3
    m_source: int = 20
    n_target: int = 20
    k_outliers: int = 0
    sigma: float = 0.0
    scale_range: tuple[float, float] = (0.5, 1.5)
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.d < 1:
            raise InvalidParams("d must be >= 1")
        if not 0 <= self.k_outliers < self.n_target:
            raise InvalidParams("need 0 <= k_outliers < n_target")
        if self.m_source < self.n_target - self.k_outliers:
            raise InvalidParams("m_source must cover the inlier count")
        if self.sigma < 0:
            raise InvalidParams("sigma must be >= 0")
        if self.scale_range[0] <= 0 or self.scale_range[1] < self.scale_range[0]:
            raise InvalidParams("scale_range must be positive and ordered")


@dataclass(frozen=True)
class SimInstance:
    """A generated problem with its ground truth."""

    X: PointSet
    Y: PointSet
    truth_beta: Coefficients
    truth_assignment: Assignment
    truth_inliers: tuple[int, ...]
    sigma: float
    config: SimConfig | None = field(repr=False, default=None)


def generate_instance(config: SimConfig) -> SimInstance:
    """Draw one instance; deterministic for a fixed config (seed included)."""
    rng = np.random.default_rng(config.rng_seed)
    d, m, n, k = config.d, config.m_source, config.n_target, config.k_outliers
    n_inliers = n - k
    beta = random_rotation_scaled(d, config.scale_range, rng)
    X = rng.normal(size=(m, d))
    source_subset = rng.permutation(m)[:n_inliers]
    noise = rng.normal(scale=config.sigma, size=(n_inliers, d)) if config.sigma > 0 else 0.0
    inlier_rows = X[source_subset] @ beta.matrix + noise
    if k > 0:
        outlier_rows = sample_in_hull(inlier_rows, k, rng).points
        stacked = np.vstack([inlier_rows, outlier_rows])
    else:
        stacked = inlier_rows
    placement = rng.permutation(n)  # row r of stacked lands at target placement[r]
    Y = np.empty((n, d))
    Y[placement] = stacked
    pairs = np.stack([placement[:n_inliers], source_subset], axis=1)
    return SimInstance(
        X=PointSet(X),
        Y=PointSet(Y),
        truth_beta=beta,
        truth_assignment=Assignment(pairs, n, m),
        truth_inliers=tuple(int(t) for t in np.sort(placement[:n_inliers])),
        sigma=config.sigma,
        config=config,
    )


# ---------------------------------------------------------------------------
# Recovery-rate sweeps
# ---------------------------------------------------------------------------

SOLVER_NAMES = ("exhaustive1d", "randomized1d", "randomizednd", "exhaustivend", "icp")

SWEEP_COLUMNS = (
    "solver",
    "d",
    "n_target",
    "m_source",
    "k_outliers",
    "outlier_ratio",
    "missing_ratio",
    "sigma",
    "snr",
    "nu",
    "delta",
    "trials",
    "recovery_rate",
    "mean_beta_error",
)


@dataclass(frozen=True)
class SweepConfig:
    """Grid specification: one cell per (solver, k, sigma, m_source) combination."""

    solvers: tuple[str, ...] = ("randomizednd",)
    d: int = 3
    n_target: int = 20
    k_values: tuple[int, ...] = (1,)
    sigma_values: tuple[float, ...] = (0.0,)
    m_values: tuple[int, ...] = (20,)
    trials: int = 100
    delta: float = 0.9
    scale_range: tuple[float, float] = (0.5, 1.5)
    rng_seed: int = 0
    conservative_q: bool = True
    icp_trim_fraction: float = 0.2
    icp_max_iters: int = 100
    icp_tol: float = 1e-9
    max_hypotheses: int = 10_000_000

    def __post_init__(self) -> None:
        for s in self.solvers:
            if s not in SOLVER_NAMES:
                raise InvalidParams(f"unknown solver {s!r}; expected one of {SOLVER_NAMES}")
        if self.trials < 1:
            raise InvalidParams("trials must be >= 1")

    def cells(self) -> list[dict]:
        out = []
        for solver in self.solvers:
            for m in self.m_values:
                for k in self.k_values:
                    for sigma in self.sigma_values:
                        out.append({"solver": solver, "m_source": m, "k_outliers": k, "sigma": sigma})
        return out


def _trial_seeds(root_seed: int, cell: dict, solver_index: int, trial: int) -> tuple[int, int]:
    """Order-independent per-trial seeds for the instance and the solver.

    The instance seed depends only on the generator parameters, so every
    solver within a sweep sees identical instances and their recovery rates
    are directly comparable.
    """
    sigma_bits = int(np.float64(cell["sigma"]).view(np.uint64))
    instance_key = (0, cell["m_source"], cell["k_outliers"], sigma_bits, trial)
    solver_key = (1, solver_index) + instance_key
    a = np.random.SeedSequence(entropy=root_seed, spawn_key=instance_key).generate_state(1, np.uint64)
    b = np.random.SeedSequence(entropy=root_seed, spawn_key=solver_key).generate_state(1, np.uint64)
    return int(a[0]), int(b[0])


def margin_for_sigma(sigma: float) -> float:
    """The sweep margin rule: the noise scale itself, tiny when noiseless."""
    return sigma if sigma > 0 else NOISELESS_MARGIN


def _solve_cell_trial(sweep: SweepConfig, cell: dict, cell_index: int, trial: int):
    """Run one trial of one cell: returns (recovered, beta_error, scale_sq)."""
    solver_index = sweep.solvers.index(cell["solver"])
    instance_seed, solver_seed = _trial_seeds(sweep.rng_seed, cell, solver_index, trial)
    sim = SimConfig(
        d=sweep.d,
        m_source=cell["m_source"],
        n_target=sweep.n_target,
        k_outliers=cell["k_outliers"],
        sigma=cell["sigma"],
        scale_range=sweep.scale_range,
        rng_seed=instance_seed,
    )
    inst = generate_instance(sim)
    nu = margin_for_sigma(cell["sigma"])
    scale_sq = float(np.linalg.norm(inst.truth_beta.matrix, ord=2) ** 2)
    solver = cell["solver"]
    try:
        if solver in ("exhaustive1d", "randomized1d"):
            if sweep.d != 1:
                raise InvalidParams("1D solvers require d == 1")
            cfg = Config1D(
                margin=nu, delta=sweep.delta,
                max_outliers_hint=cell["k_outliers"], rng_seed=solver_seed,
            )
            fn = rrwoc_1d_exhaustive if solver == "exhaustive1d" else rrwoc_1d_randomized
            est = fn(inst.X.points[:, 0], inst.Y.points[:, 0], cfg)
        elif solver in ("randomizednd", "exhaustivend"):
            cfg = ConfigND(
                margin=nu, delta=sweep.delta,
                max_outliers_hint=cell["k_outliers"], rng_seed=solver_seed,
                conservative_q=sweep.conservative_q,
                max_hypotheses=sweep.max_hypotheses,
            )
            fn = rrwoc_nd_randomized if solver == "randomizednd" else rrwoc_nd_exhaustive
            est = fn(inst.X, inst.Y, cfg)
        else:
            cfg = IcpConfig(
                trim_fraction=sweep.icp_trim_fraction,
                max_iters=sweep.icp_max_iters,
                convergence_tol=sweep.icp_tol,
                init_seed=solver_seed,
                margin=nu,
            )
            est = trimmed_icp(inst.X, inst.Y, cfg)
    except RrwocError:
        return False, float("nan"), scale_sq
    err = float(np.linalg.norm(est.beta.matrix - inst.truth_beta.matrix))
    return err <= RECOVERY_TOL, err, scale_sq


def _trial_task(args):
    sweep, cell, cell_index, trial = args
    return cell_index, trial, _solve_cell_trial(sweep, cell, cell_index, trial)


def recovery_sweep(
    sweep: SweepConfig,
    *,
    workers: int = 1,
    progress: Callable[[str], None] | None = None,
) -> list[dict]:
    """Recovery rate per grid cell; rows follow SWEEP_COLUMNS.

    Per-trial seeds derive from the root seed and the cell parameters, so
    the table is identical for any worker count or execution order, and all
    solvers face identical instances. Solver failures count as
    non-recoveries.
    """
    cells = sweep.cells()
    results: dict[int, list] = {i: [None] * sweep.trials for i in range(len(cells))}
    tasks = [
        (sweep, cell, ci, t)
        for ci, cell in enumerate(cells)
        for t in range(sweep.trials)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for ci, t, outcome in pool.map(_trial_task, tasks, chunksize=8):
                results[ci][t] = outcome
    else:
        for task in tasks:
            ci, t, outcome = _trial_task(task)
            results[ci][t] = outcome

    rows = []
    for ci, cell in enumerate(cells):
        outcomes = results[ci]
        n_rec = sum(1 for ok, _, _ in outcomes if ok)
        errs = [e for _, e, _ in outcomes if not math.isnan(e)]
        scale_sq = float(np.mean([s for _, _, s in outcomes]))
        sigma = cell["sigma"]
        n_inl = sweep.n_target - cell["k_outliers"]
        row = {
            "solver": cell["solver"],
            "d": sweep.d,
            "n_target": sweep.n_target,
            "m_source": cell["m_source"],
            "k_outliers": cell["k_outliers"],
            "outlier_ratio": cell["k_outliers"] / sweep.n_target,
            "missing_ratio": (cell["m_source"] - n_inl) / cell["m_source"],
            "sigma": sigma,
            "snr": scale_sq / sigma**2 if sigma > 0 else float("inf"),
            "nu": margin_for_sigma(sigma),
            "delta": sweep.delta,
            "trials": sweep.trials,
            "recovery_rate": n_rec / sweep.trials,
            "mean_beta_error": float(np.mean(errs)) if errs else float("nan"),
        }
        rows.append(row)
        if progress is not None:
            progress(
                f"cell {ci + 1}/{len(cells)} solver={row['solver']} m={row['m_source']} "
                f"k={row['k_outliers']} sigma={row['sigma']:g} "
                f"recovery_rate={row['recovery_rate']:.3f}"
            )
    return rows


def write_sweep_csv(rows: Sequence[dict], path: str) -> None:
    """Write sweep rows atomically with the stable SWEEP_COLUMNS schema."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(SWEEP_COLUMNS)
            for row in rows:
                writer.writerow([_format_cell(row[c]) for c in SWEEP_COLUMNS])
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)
