"""Figure rendering for CLI reports.

Renders PNGs next to the delimited outputs: an alignment view for a single
solve, and the three standard sweep views (recovery heatmaps against noise
for missing-data and outlier grids, and recovery curves against the outlier
ratio per solver).
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .core import ModelEstimate, PointSet


def render_alignment(
    X: PointSet, Y: PointSet, estimate: ModelEstimate, path: str | Path
) -> Path:
    """Targets vs mapped sources, inlier matches drawn as segments."""
    path = Path(path)
    mapped = estimate.beta.apply(X.points)
    targets = Y.points
    if X.dim == 1:
        mapped = np.hstack([mapped, np.zeros((mapped.shape[0], 1))])
        targets = np.hstack([targets, np.ones((targets.shape[0], 1))])
    fig, ax = plt.subplots(figsize=(6, 5))
    ax.scatter(mapped[:, 0], mapped[:, 1], marker="x", c="tab:red", label="mapped source")
    ax.scatter(targets[:, 0], targets[:, 1], marker="o", facecolors="none",
               edgecolors="tab:green", label="target")
    lookup = estimate.assignment.source_of()
    for t in estimate.inliers:
        s = lookup[t]
        ax.plot([mapped[s, 0], targets[t, 0]], [mapped[s, 1], targets[t, 1]],
                c="gray", lw=0.7, alpha=0.7)
    ax.set_title(f"{estimate.inlier_count} inliers of {Y.count} targets")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _sigma_labels(sigmas: Sequence[float]) -> list[str]:
    return ["noiseless" if s == 0 else f"{s:g}" for s in sigmas]


def _heatmap(ax, grid, x_labels, y_labels, x_title, y_title):
    im = ax.imshow(grid, origin="lower", aspect="auto", vmin=0.0, vmax=1.0, cmap="viridis")
    ax.set_xticks(range(len(x_labels)), labels=x_labels, rotation=45, fontsize=8)
    ax.set_yticks(range(len(y_labels)), labels=y_labels, fontsize=8)
    ax.set_xlabel(x_title)
    ax.set_ylabel(y_title)
    return im


def render_sweep_figures(rows: Sequence[dict], out_dir: str | Path) -> list[Path]:
    """Write whichever of the three standard views the grid supports."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    solvers = sorted({r["solver"] for r in rows})
    for solver in solvers:
        sub = [r for r in rows if r["solver"] == solver]
        sigmas = sorted({r["sigma"] for r in sub})
        ms = sorted({r["m_source"] for r in sub})
        ks = sorted({r["k_outliers"] for r in sub})
        if len(ms) > 1 and len(sigmas) > 1:
            written.append(_missing_data_view(sub, solver, ms, sigmas, out_dir))
        if len(ks) > 1 and len(sigmas) > 1:
            written.append(_outlier_view(sub, solver, ks, sigmas, out_dir))
    if len({r["k_outliers"] for r in rows}) > 1:
        written.append(_ratio_curves(rows, out_dir))
    return written


def _rate(rows: Sequence[dict], **match) -> float:
    for r in rows:
        if all(r[k] == v for k, v in match.items()):
            return r["recovery_rate"]
    return np.nan


def _missing_data_view(sub, solver, ms, sigmas, out_dir: Path) -> Path:
    n = sub[0]["n_target"]
    grid = np.array([
        [_rate(sub, m_source=m, sigma=s, k_outliers=sub[0]["k_outliers"]) for s in sigmas]
        for m in ms
    ])
    fig, ax = plt.subplots(figsize=(6, 4.5))
    im = _heatmap(ax, grid, _sigma_labels(sigmas),
                  [f"{(m - n) / m:.2f}" for m in ms],
                  "noise level", "missing data ratio")
    ax.set_title(f"recovery rate, {solver}")
    fig.colorbar(im, ax=ax)
    fig.tight_layout()
    path = out_dir / f"missing_data_vs_noise_{solver}.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _outlier_view(sub, solver, ks, sigmas, out_dir: Path) -> Path:
    n = sub[0]["n_target"]
    grid = np.array([
        [_rate(sub, k_outliers=k, sigma=s, m_source=sub[0]["m_source"]) for s in sigmas]
        for k in ks
    ])
    fig, ax = plt.subplots(figsize=(6, 4.5))
    im = _heatmap(ax, grid, _sigma_labels(sigmas),
                  [f"{k / n:.2f}" for k in ks],
                  "noise level", "outlier ratio")
    ax.set_title(f"recovery rate, {solver}")
    fig.colorbar(im, ax=ax)
    fig.tight_layout()
    path = out_dir / f"outliers_vs_noise_{solver}.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _ratio_curves(rows: Sequence[dict], out_dir: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for solver in sorted({r["solver"] for r in rows}):
        for sigma in sorted({r["sigma"] for r in rows if r["solver"] == solver}):
            pts = sorted(
                (r["outlier_ratio"], r["recovery_rate"])
                for r in rows
                if r["solver"] == solver and r["sigma"] == sigma
            )
            label = solver if len({r["sigma"] for r in rows}) == 1 else f"{solver} sigma={sigma:g}"
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=label)
    ax.set_xlabel("outlier ratio")
    ax.set_ylabel("recovery rate")
    ax.set_ylim(-0.05, 1.05)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    path = out_dir / "recovery_vs_outlier_ratio.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
