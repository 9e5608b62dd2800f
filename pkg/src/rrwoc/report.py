"""Solver run reports.

A report captures everything needed to reproduce a run: solver name, the
full configuration echo, the seed, and the estimate itself. Serialized
output is deterministic for a fixed seed and inputs, so wall time is carried
on the object for diagnostics but never written into the JSON/CSV forms.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .core import ModelEstimate

SCHEMA_VERSION = "1"


@dataclass(frozen=True)
class RunReport:
    solver: str
    config: dict
    seed: int | None
    beta: list[list[float]]
    offset: list[float] | None
    assignment: list[list[int]]
    inliers: list[int]
    residuals: list[float]
    inlier_count: int
    converged: bool
    iterations: int
    wall_time_s: float | None = field(default=None, compare=False)

    @staticmethod
    def from_estimate(
        solver: str,
        config: dict,
        estimate: ModelEstimate,
        seed: int | None,
        wall_time_s: float | None = None,
    ) -> "RunReport":
        return RunReport(
            solver=solver,
            config=config,
            seed=seed,
            beta=[[float(v) for v in row] for row in estimate.beta.matrix],
            offset=(
                [float(v) for v in estimate.beta.offset]
                if estimate.beta.offset is not None
                else None
            ),
            assignment=[[int(t), int(s)] for t, s in estimate.assignment.pairs],
            inliers=[int(i) for i in estimate.inliers],
            residuals=[float(r) for r in estimate.residuals],
            inlier_count=estimate.inlier_count,
            converged=estimate.converged,
            iterations=estimate.n_iterations,
        )

    def to_json(self) -> str:
        payload = {
            "schema": SCHEMA_VERSION,
            "solver": self.solver,
            "config": self.config,
            "seed": self.seed,
            "beta": self.beta,
            "offset": self.offset,
            "assignment": self.assignment,
            "inliers": self.inliers,
            "residuals": self.residuals,
            "inlier_count": self.inlier_count,
            "converged": self.converged,
            "iterations": self.iterations,
        }
        return json.dumps(payload, indent=2) + "\n"

    def to_csv(self) -> str:
        """Matched-pair table with '#'-prefixed metadata lines."""
        inlier_set = set(self.inliers)
        lines = [
            f"# schema={SCHEMA_VERSION}",
            f"# solver={self.solver}",
            f"# seed={self.seed}",
            f"# config={json.dumps(self.config, sort_keys=True)}",
            f"# beta={json.dumps(self.beta)}",
            f"# offset={json.dumps(self.offset)}",
            f"# inlier_count={self.inlier_count}",
            f"# converged={self.converged}",
            f"# iterations={self.iterations}",
            "target_index,source_index,residual,inlier",
        ]
        for (t, s), r in zip(self.assignment, self.residuals):
            lines.append(f"{t},{s},{r!r},{int(t in inlier_set)}")
        return "\n".join(lines) + "\n"

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return self.to_json()
        if fmt == "csv":
            return self.to_csv()
        raise ValueError(f"unknown report format {fmt!r}")
