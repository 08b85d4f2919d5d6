"""File formats: dataset/matrix CSV, trace and trajectory CSV, summary JSON.

All floating-point output is serialized with 17 significant digits so files
round-trip exactly; identical inputs therefore produce byte-identical
artifacts.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np

from .core import Dataset
from .descent import OptTrace
from .errors import ParameterError
from .mc_training import Trajectory

TRACE_HEADER = "iter,step_type,g,f,sigma2,grad_norm,lambda_min,decrease"
TRAJECTORY_HEADER = "iter,sampled_distortion,mean_matrix_distortion,sigma2,proxy_value"


def fmt_float(x: float) -> str:
    return "%.17g" % float(x)


def _write_rows(path, rows, header: str | None):
    lines = []
    if header is not None:
        lines.append(header)
    lines.extend(rows)
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def write_matrix(path, matrix: np.ndarray) -> None:
    """k rows of comma-separated decimal floats."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise ParameterError(f"expected a 2-d matrix, got shape {matrix.shape}")
    _write_rows(path, (",".join(fmt_float(v) for v in row) for row in matrix), None)


def read_matrix(path) -> np.ndarray:
    rows = []
    for line in Path(path).read_text(encoding="ascii").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        rows.append([float(v) for v in line.split(",")])
    if not rows:
        raise ParameterError(f"no rows in matrix file {path}")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ParameterError(f"ragged rows in matrix file {path}")
    return np.array(rows, dtype=np.float64)


def write_dataset(path, data: Dataset) -> None:
    """One point per row, with a '# n=<n> d=<d>' header comment."""
    rows = (",".join(fmt_float(v) for v in p) for p in data.points)
    _write_rows(path, rows, f"# n={data.n} d={data.d}")


def read_dataset(path) -> Dataset:
    """Read a dataset CSV; points are re-normalized on ingest."""
    return Dataset(read_matrix(path))


def file_checksum(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_trace_csv(path, trace: OptTrace) -> None:
    rows = []
    for r in trace.records:
        rows.append(
            ",".join(
                [
                    str(r.iter),
                    r.step_type,
                    fmt_float(r.g),
                    fmt_float(r.f),
                    fmt_float(r.sigma2),
                    fmt_float(r.grad_norm),
                    "" if r.lambda_min is None else fmt_float(r.lambda_min),
                    "" if r.decrease is None else fmt_float(r.decrease),
                ]
            )
        )
    _write_rows(path, rows, TRACE_HEADER)


def write_trajectory_csv(path, traj: Trajectory) -> None:
    rows = (
        ",".join(
            [
                str(r.iter),
                fmt_float(r.sampled_distortion),
                fmt_float(r.mean_matrix_distortion),
                fmt_float(r.sigma2),
                fmt_float(r.proxy_value),
            ]
        )
        for r in traj.rows
    )
    _write_rows(path, rows, TRAJECTORY_HEADER)


def _json_value(obj) -> str:
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        escaped = obj.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
        return f'"{escaped}"'
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj)
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_json_value(v) for v in obj) + "]"
    if isinstance(obj, dict):
        parts = []
        for key, value in obj.items():
            if not isinstance(key, str):
                raise ParameterError(f"JSON keys must be strings, got {key!r}")
            parts.append(f"{_json_value(key)}: {_json_value(value)}")
        return "{" + ", ".join(parts) + "}"
    if isinstance(obj, np.ndarray):
        return _json_value(obj.tolist())
    raise ParameterError(f"cannot serialize {type(obj).__name__} to JSON")


def dump_json(obj: dict, path) -> None:
    """Write a deterministic JSON document (17-significant-digit floats)."""
    Path(path).write_text(_json_value(obj) + "\n", encoding="ascii")
