"""File formats: JSON matrices and CSV trajectories with a JSON sidecar.

Floats are written with 17 significant digits, which round-trips every
IEEE double exactly.
"""
import csv
import json
from pathlib import Path

import numpy as np

from .errors import DomainError

FLOAT_FORMAT = ".17g"


def _fmt(v):
    return format(float(v), FLOAT_FORMAT)


def matrix_to_dict(m):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise DomainError(f"expected a matrix, got shape {m.shape}")
    return {"rows": m.shape[0], "cols": m.shape[1], "data": [float(v) for v in m.ravel()]}


def matrix_from_dict(doc, name="matrix"):
    """Validate a ``{rows, cols, data}`` document and return the square matrix."""
    try:
        rows, cols, data = int(doc["rows"]), int(doc["cols"]), doc["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"{name}: expected fields rows, cols, data ({exc})") from exc
    if rows != cols or rows < 1:
        raise DomainError(f"{name}: matrix must be square and nonempty, got {rows}x{cols}")
    if len(data) != rows * cols:
        raise DomainError(f"{name}: data has {len(data)} entries, expected {rows * cols}")
    try:
        m = np.array(data, dtype=float).reshape(rows, cols)
    except (TypeError, ValueError) as exc:
        raise DomainError(f"{name}: non-numeric data ({exc})") from exc
    if not np.all(np.isfinite(m)):
        raise DomainError(f"{name}: data has non-finite entries")
    return m


def write_matrix(path, m):
    # json.dumps uses repr for floats, which is already shortest-round-trip;
    # the explicit format keeps the 17-digit contract visible in the file.
    doc = matrix_to_dict(m)
    body = ", ".join(_fmt(v) for v in doc["data"])
    text = f'{{"rows": {doc["rows"]}, "cols": {doc["cols"]}, "data": [{body}]}}\n'
    Path(path).write_text(text)


def read_matrix(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DomainError(f"{path}: cannot read matrix file ({exc})") from exc
    return matrix_from_dict(doc, str(path))


def trajectory_header(d, with_p=True):
    cols = ["t"] + [f"x_{i}{j}" for i in range(d) for j in range(d)]
    if with_p:
        cols += [f"p_{i}{j}" for i in range(d) for j in range(d)]
    return cols


def sidecar_path(path):
    path = Path(path)
    return path.with_name(path.name + ".json")


def write_trajectory(path, t, x, p=None, meta=None):
    """Write samples to CSV and, when ``meta`` is given, ``<path>.json`` beside it."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(np.diff(t) <= 0):
        raise DomainError("trajectory times must be strictly increasing")
    d = x.shape[-1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(trajectory_header(d, p is not None))
        for k, tk in enumerate(t):
            row = [_fmt(tk)] + [_fmt(v) for v in x[k].ravel()]
            if p is not None:
                row += [_fmt(v) for v in np.asarray(p[k]).ravel()]
            writer.writerow(row)
    if meta is not None:
        sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def read_trajectory(path):
    """Return ``(t, x, p_or_None, meta_or_None)`` from a trajectory CSV."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = np.array([[float(v) for v in row] for row in reader])
    nx = sum(1 for h in header if h.startswith("x_"))
    d = int(round(np.sqrt(nx)))
    t = rows[:, 0]
    x = rows[:, 1:1 + nx].reshape(-1, d, d)
    p = rows[:, 1 + nx:].reshape(-1, d, d) if len(header) > 1 + nx else None
    side = sidecar_path(path)
    meta = json.loads(side.read_text()) if side.exists() else None
    return t, x, p, meta
