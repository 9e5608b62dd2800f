"""Command-line interface.

Subcommands: solve (run a solver on two point-cloud files), simulate (write
a generated instance), sweep (recovery-rate grid to CSV), assign (raw linear
assignment on a cost-matrix CSV). stdout carries machine-readable output
only; all progress and warnings go to stderr. Exit codes: 0 success, 1
usage or input error, 2 the solver declared failure.

RRWOC_THREADS caps sweep parallelism; all randomness flows from --seed (one
is drawn from entropy and echoed when absent).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from .assignment import linear_assignment
from .baselines import IcpConfig, trimmed_icp
from .core import MarginSpec
from .errors import NoValidHypothesis, RrwocError
from .pointio import (
    _atomic_write,
    load_cost_matrix,
    load_point_cloud,
    save_point_cloud,
    save_truth,
)
from .regress1d import Config1D, rrwoc_1d_exhaustive, rrwoc_1d_randomized
from .regressnd import ConfigND, rrwoc_nd_exhaustive, rrwoc_nd_randomized
from .report import SCHEMA_VERSION, RunReport
from .simulate import (
    SOLVER_NAMES,
    SimConfig,
    SweepConfig,
    generate_instance,
    recovery_sweep,
    write_sweep_csv,
)

DEFAULT_MARGIN = 1e-9


def _warn(message: str) -> None:
    print(f"warning: {message}", file=sys.stderr)


def _info(message: str) -> None:
    print(message, file=sys.stderr)


def _threads() -> int:
    raw = os.environ.get("RRWOC_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        _warn(f"ignoring unparseable RRWOC_THREADS={raw!r}")
        return 1


def _fresh_seed() -> int:
    return int(np.random.SeedSequence().entropy) % (2**63)


class _Parser(argparse.ArgumentParser):
    # Exit-code contract: usage problems are input errors (1), not 2.
    def error(self, message):  # noqa: A003 - argparse API
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rrwoc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="estimate coefficients between two point clouds")
    solve.add_argument("source", help="source point cloud (CSV or JSON)")
    solve.add_argument("target", help="target point cloud (CSV or JSON)")
    solve.add_argument("--solver", choices=SOLVER_NAMES, default="randomizednd")
    solve.add_argument("--nu", type=float, default=None,
                       help=f"scalar inlier margin (default {DEFAULT_MARGIN:g})")
    solve.add_argument("--nu-column", default=None,
                       help="target-file column (name or index) holding per-point margins")
    solve.add_argument("--delta", type=float, default=None,
                       help="success probability for randomized solvers (default 0.9)")
    solve.add_argument("--k-hint", type=int, default=None,
                       help="presumed outlier count, sizes the randomized draw budget")
    solve.add_argument("--seed", type=int, default=None)
    solve.add_argument("--offset", action="store_true",
                       help="also fit an affine offset (column-of-ones augmentation)")
    solve.add_argument("--iteration-bound", choices=("conservative", "optimistic"),
                       default="conservative",
                       help="randomized budget rule; optimistic drops the ordered-tuple factor")
    solve.add_argument("--inlier-pool", choices=("target", "source"), default="target",
                       help="which side's non-outlier count feeds the budget formula")
    solve.add_argument("--max-hypotheses", type=int, default=1_000_000,
                       help="safety cap for the exhaustive d-dimensional solver")
    solve.add_argument("--trim-fraction", type=float, default=0.2,
                       help="ICP: worst fraction of matches dropped per iteration")
    solve.add_argument("--icp-max-iters", type=int, default=100)
    solve.add_argument("--icp-tol", type=float, default=1e-9)
    solve.add_argument("--output", choices=("json", "csv"), default="json")
    solve.add_argument("--out", default=None, help="write the report here instead of stdout")
    solve.add_argument("--figures", default=None, help="directory for alignment figures")

    sim = sub.add_parser("simulate", help="generate an instance with ground truth")
    sim.add_argument("--config", default=None, help="JSON file of generator parameters")
    sim.add_argument("--d", type=int, default=3)
    sim.add_argument("--m", type=int, default=20, help="source point count")
    sim.add_argument("--n", type=int, default=20, help="target point count")
    sim.add_argument("--k", type=int, default=0, help="outlier count in the target set")
    sim.add_argument("--sigma", type=float, default=0.0)
    sim.add_argument("--scale-min", type=float, default=0.5)
    sim.add_argument("--scale-max", type=float, default=1.5)
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--out", required=True, help="output directory (X.csv, Y.csv, truth.json)")

    sweep = sub.add_parser("sweep", help="recovery-rate grid experiment")
    sweep.add_argument("--config", required=True, help="JSON sweep specification")
    sweep.add_argument("--out", required=True, help="output CSV path")
    sweep.add_argument("--figures", default=None, help="directory for rendered figure PNGs")

    assign = sub.add_parser("assign", help="linear assignment on a raw cost-matrix CSV")
    assign.add_argument("cost", help="cost matrix CSV")
    assign.add_argument("--output", choices=("json", "csv"), default="json")
    assign.add_argument("--out", default=None)

    return parser


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        _atomic_write(out, text)


def cmd_solve(args) -> int:
    source, _ = load_point_cloud(args.source)
    target, file_margins = load_point_cloud(args.target, args.nu_column)
    if source.dim != target.dim:
        raise RrwocError(f"dimension mismatch: source is {source.dim}-D, target {target.dim}-D")

    if file_margins is not None:
        if args.nu is not None:
            _warn("--nu ignored: target file supplies per-point margins")
        margin = MarginSpec.per_target(file_margins)
        margin_echo: object = "per-target"
    else:
        margin = MarginSpec.scalar(args.nu if args.nu is not None else DEFAULT_MARGIN)
        margin_echo = float(margin.values[0])

    randomized = args.solver in ("randomized1d", "randomizednd")
    if args.delta is not None and not randomized:
        _warn(f"--delta has no effect on {args.solver}; ignored")
    if args.k_hint is not None and not randomized:
        _warn(f"--k-hint has no effect on {args.solver}; ignored")
    delta = args.delta if args.delta is not None else 0.9
    seed = args.seed if args.seed is not None else _fresh_seed()
    fit_offset = bool(args.offset)
    if fit_offset and args.solver in ("exhaustive1d", "randomized1d"):
        _warn("--offset is not supported by the 1D ratio solvers; ignored")
        fit_offset = False

    config_echo = {
        "margin": margin_echo,
        "delta": delta,
        "k_hint": args.k_hint,
        "offset": fit_offset,
        "iteration_bound": args.iteration_bound,
        "inlier_pool": args.inlier_pool,
        "source_file": str(args.source),
        "target_file": str(args.target),
    }

    start = time.perf_counter()
    if args.solver in ("exhaustive1d", "randomized1d"):
        cfg = Config1D(margin=margin, delta=delta,
                       max_outliers_hint=args.k_hint, rng_seed=seed)
        x = source.points[:, 0]
        y = target.points[:, 0]
        fn = rrwoc_1d_exhaustive if args.solver == "exhaustive1d" else rrwoc_1d_randomized
        estimate = fn(x, y, cfg)
    elif args.solver in ("randomizednd", "exhaustivend"):
        cfg = ConfigND(
            margin=margin, delta=delta, max_outliers_hint=args.k_hint,
            rng_seed=seed, conservative_q=args.iteration_bound == "conservative",
            inlier_pool=args.inlier_pool, fit_offset=fit_offset,
            max_hypotheses=args.max_hypotheses,
        )
        fn = rrwoc_nd_randomized if args.solver == "randomizednd" else rrwoc_nd_exhaustive
        estimate = fn(source, target, cfg)
    else:
        config_echo.update(
            trim_fraction=args.trim_fraction,
            icp_max_iters=args.icp_max_iters,
            icp_tol=args.icp_tol,
        )
        cfg = IcpConfig(
            trim_fraction=args.trim_fraction, max_iters=args.icp_max_iters,
            convergence_tol=args.icp_tol, init_seed=seed,
            fit_offset=fit_offset, margin=margin,
        )
        estimate = trimmed_icp(source, target, cfg)
    elapsed = time.perf_counter() - start

    report = RunReport.from_estimate(args.solver, config_echo, estimate, seed, elapsed)
    _emit(report.render(args.output), args.out)
    _info(f"solved in {elapsed:.3f}s: {estimate.inlier_count} inliers, "
          f"{estimate.n_iterations} hypotheses")
    if args.figures:
        from .figures import render_alignment

        fig_dir = Path(args.figures)
        fig_dir.mkdir(parents=True, exist_ok=True)
        render_alignment(source, target, estimate, fig_dir / "alignment.png")
        _info(f"figure written to {fig_dir / 'alignment.png'}")
    return 0


def cmd_simulate(args) -> int:
    if args.config is not None:
        payload = _load_json_config(args.config)
        seed = payload.get("rng_seed")
        config = SimConfig(
            d=payload.get("d", 3),
            m_source=payload.get("m_source", 20),
            n_target=payload.get("n_target", 20),
            k_outliers=payload.get("k_outliers", 0),
            sigma=payload.get("sigma", 0.0),
            scale_range=tuple(payload.get("scale_range", (0.5, 1.5))),
            rng_seed=seed if seed is not None else _fresh_seed(),
        )
    else:
        config = SimConfig(
            d=args.d, m_source=args.m, n_target=args.n, k_outliers=args.k,
            sigma=args.sigma, scale_range=(args.scale_min, args.scale_max),
            rng_seed=args.seed if args.seed is not None else _fresh_seed(),
        )
    instance = generate_instance(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_point_cloud(out / "X.csv", instance.X)
    save_point_cloud(out / "Y.csv", instance.Y)
    save_truth(out / "truth.json", instance)
    _info(f"instance written to {out} (seed {config.rng_seed})")
    return 0


def cmd_sweep(args) -> int:
    payload = _load_json_config(args.config)
    seed = payload.get("rng_seed")
    sweep = SweepConfig(
        solvers=tuple(_as_list(payload.get("solvers", ["randomizednd"]))),
        d=payload.get("d", 3),
        n_target=payload.get("n_target", 20),
        k_values=tuple(_as_list(payload.get("k_values", [1]))),
        sigma_values=tuple(_as_list(payload.get("sigma_values", [0.0]))),
        m_values=tuple(_as_list(payload.get("m_values", [payload.get("n_target", 20)]))),
        trials=payload.get("trials", 100),
        delta=payload.get("delta", 0.9),
        scale_range=tuple(payload.get("scale_range", (0.5, 1.5))),
        rng_seed=seed if seed is not None else _fresh_seed(),
        conservative_q=payload.get("conservative_q", True),
        icp_trim_fraction=payload.get("icp_trim_fraction", 0.2),
        icp_max_iters=payload.get("icp_max_iters", 100),
        icp_tol=payload.get("icp_tol", 1e-9),
        max_hypotheses=payload.get("max_hypotheses", 10_000_000),
    )
    workers = _threads()
    _info(f"sweep: {len(sweep.cells())} cells x {sweep.trials} trials "
          f"(seed {sweep.rng_seed}, workers {workers})")
    rows = recovery_sweep(sweep, workers=workers, progress=_info)
    write_sweep_csv(rows, args.out)
    _info(f"table written to {args.out}")
    if args.figures:
        from .figures import render_sweep_figures

        written = render_sweep_figures(rows, args.figures)
        for p in written:
            _info(f"figure written to {p}")
    return 0


def cmd_assign(args) -> int:
    cost = load_cost_matrix(args.cost)
    assignment, total = linear_assignment(cost)
    pairs = [[int(t), int(s)] for t, s in assignment.pairs]
    if args.output == "json":
        text = json.dumps(
            {"schema": SCHEMA_VERSION, "pairs": pairs, "total_cost": total}, indent=2
        ) + "\n"
    else:
        lines = [f"# schema={SCHEMA_VERSION}", f"# total_cost={total!r}", "target_index,source_index,cost"]
        for t, s in pairs:
            lines.append(f"{t},{s},{float(cost[t, s])!r}")
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    return 0


def _as_list(value) -> list:
    return list(value) if isinstance(value, (list, tuple)) else [value]


def _load_json_config(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise RrwocError(f"no such config file: {p}")
    try:
        payload = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise RrwocError(f"{p}, line {exc.lineno}: invalid JSON: {exc.msg}") from None
    if not isinstance(payload, dict):
        raise RrwocError(f"{p}: expected a JSON object")
    return payload


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handlers = {
        "solve": cmd_solve,
        "simulate": cmd_simulate,
        "sweep": cmd_sweep,
        "assign": cmd_assign,
    }
    try:
        return handlers[args.command](args)
    except NoValidHypothesis as exc:
        _info(f"solver failure: {exc}")
        return 2
    except RrwocError as exc:
        _info(f"error: {exc}")
        return 1
    except OSError as exc:
        _info(f"error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
