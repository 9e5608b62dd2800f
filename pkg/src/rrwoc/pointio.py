"""Point-cloud and ground-truth file formats.

Point clouds are CSV (one point per row, optional header, optional per-point
margin column) or JSON objects with "dim" and "points" (optional "margin").
Parse failures carry the path and line number. Writers format floats with
repr, so a fixed input produces byte-identical files.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .core import Assignment, Coefficients, PointSet
from .errors import CloudFileError
from .simulate import SimInstance


def _atomic_write(path: str | Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _parse_float(token: str, path: Path, line_no: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise CloudFileError(f"{path}, line {line_no}: not a number: {token!r}") from None
    if not np.isfinite(value):
        raise CloudFileError(f"{path}, line {line_no}: non-finite value {token!r}")
    return value


def _looks_like_header(row: list[str]) -> bool:
    for token in row:
        try:
            float(token)
        except ValueError:
            return True
    return False


def load_point_cloud(
    path: str | Path, margin_column: str | None = None
) -> tuple[PointSet, NDArray[np.float64] | None]:
    """Read a point cloud and any per-point margins.

    ``margin_column`` selects the margin column by header name or 0-based
    index; without it, a CSV column literally named "margin" or a JSON
    "margin" field is used when present.
    """
    path = Path(path)
    if not path.exists():
        raise CloudFileError(f"no such file: {path}")
    if path.suffix.lower() == ".json":
        return _load_json_cloud(path, margin_column)
    return _load_csv_cloud(path, margin_column)


def _load_json_cloud(path: Path, margin_column: str | None):
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise CloudFileError(f"{path}, line {exc.lineno}: invalid JSON: {exc.msg}") from None
    if not isinstance(payload, dict) or "points" not in payload:
        raise CloudFileError(f"{path}: expected an object with a 'points' array")
    rows = payload["points"]
    if not isinstance(rows, list) or not rows:
        raise CloudFileError(f"{path}: 'points' must be a nonempty array")
    dim = payload.get("dim")
    points = np.asarray(rows, dtype=np.float64)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    if points.ndim != 2:
        raise CloudFileError(f"{path}: 'points' rows have inconsistent lengths")
    if dim is not None and points.shape[1] != int(dim):
        raise CloudFileError(f"{path}: dim={dim} but rows have {points.shape[1]} columns")
    if not np.all(np.isfinite(points)):
        raise CloudFileError(f"{path}: points must be finite")
    key = margin_column if margin_column is not None else "margin"
    margins = None
    if key in payload:
        margins = np.asarray(payload[key], dtype=np.float64).reshape(-1)
        _check_margins(margins, points.shape[0], path)
    elif margin_column is not None:
        raise CloudFileError(f"{path}: no field named {margin_column!r}")
    return PointSet(points), margins


def _load_csv_cloud(path: Path, margin_column: str | None):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        raw = [(no, row) for no, row in enumerate(reader, start=1) if row and any(t.strip() for t in row)]
    if not raw:
        raise CloudFileError(f"{path}: file holds no data rows")
    header: list[str] | None = None
    first_no, first_row = raw[0]
    if _looks_like_header([t.strip() for t in first_row]):
        header = [t.strip() for t in first_row]
        raw = raw[1:]
        if not raw:
            raise CloudFileError(f"{path}: header only, no data rows")

    margin_idx: int | None = None
    if margin_column is not None:
        if header is not None and margin_column in header:
            margin_idx = header.index(margin_column)
        elif margin_column.lstrip("-").isdigit():
            margin_idx = int(margin_column)
        else:
            raise CloudFileError(f"{path}: no column named {margin_column!r}")
    elif header is not None and "margin" in header:
        margin_idx = header.index("margin")

    width = len(raw[0][1])
    if margin_idx is not None and not 0 <= margin_idx < width:
        raise CloudFileError(f"{path}: margin column {margin_idx} out of range")
    rows = []
    margins = [] if margin_idx is not None else None
    for line_no, row in raw:
        if len(row) != width:
            raise CloudFileError(
                f"{path}, line {line_no}: expected {width} columns, got {len(row)}"
            )
        values = [_parse_float(t.strip(), path, line_no) for t in row]
        if margins is not None:
            margins.append(values.pop(margin_idx))
        rows.append(values)
    points = np.asarray(rows, dtype=np.float64)
    marr = None
    if margins is not None:
        marr = np.asarray(margins, dtype=np.float64)
        _check_margins(marr, points.shape[0], path)
    return PointSet(points), marr


def _check_margins(margins: NDArray[np.float64], count: int, path: Path) -> None:
    if margins.shape[0] != count:
        raise CloudFileError(f"{path}: {margins.shape[0]} margins for {count} points")
    if np.any(np.isnan(margins)) or np.any(margins < 0):
        raise CloudFileError(f"{path}: margins must be nonnegative")


def save_point_cloud(path: str | Path, points: PointSet) -> None:
    """Write a header + rows CSV; floats use repr for byte stability."""
    header = ",".join(f"x{i}" for i in range(points.dim))
    lines = [header]
    for row in points.points:
        lines.append(",".join(repr(float(v)) for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def save_truth(path: str | Path, instance: SimInstance) -> None:
    """Ground-truth JSON for a simulated instance."""
    cfg = instance.config
    payload = {
        "schema": "1",
        "d": cfg.d,
        "m_source": cfg.m_source,
        "n_target": cfg.n_target,
        "k_outliers": cfg.k_outliers,
        "sigma": cfg.sigma,
        "scale_range": list(cfg.scale_range),
        "rng_seed": cfg.rng_seed,
        "beta": [[float(v) for v in row] for row in instance.truth_beta.matrix],
        "assignment": [[int(t), int(s)] for t, s in instance.truth_assignment.pairs],
        "inliers": [int(i) for i in instance.truth_inliers],
    }
    _atomic_write(path, json.dumps(payload, indent=2) + "\n")


def load_truth(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise CloudFileError(f"no such file: {path}")
    payload = json.loads(path.read_text())
    payload["beta"] = Coefficients(np.asarray(payload["beta"], dtype=np.float64))
    payload["assignment"] = Assignment(
        np.asarray(payload["assignment"], dtype=np.int64).reshape(-1, 2),
        payload["n_target"],
        payload["m_source"],
    )
    return payload


def load_cost_matrix(path: str | Path) -> NDArray[np.float64]:
    """Raw numeric CSV matrix (optional header row is skipped)."""
    cloud, _ = load_point_cloud(path)
    return np.asarray(cloud.points)
