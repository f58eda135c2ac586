"""Plain-text file formats.

Report file::

    <d>,<h>,<alpha>,<half>,<G>          one header line of values
    z_0,z_1,...,z_{G^d-1}               one row per client, row-major cells

Model file::

    <d>,<h>,<n>,<G>
    t_0
    t_1
    ...

Point files are CSV with a header ``x1,...,xd[,y]``.  Floats are written with
``repr`` so files round-trip exactly.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..classifier import ClassifierModel
from ..core import HALVES, GridSpec, as_points
from ..errors import ConfigError


def _fmt(v: float) -> str:
    return repr(float(v))


def write_reports(path, values: np.ndarray, half: str, grid: GridSpec, alpha: float) -> None:
    if half not in HALVES:
        raise ConfigError(f"unknown half {half!r}")
    values = np.atleast_2d(values)
    with open(path, "w", newline="") as fh:
        fh.write(f"{grid.d},{_fmt(grid.h)},{_fmt(alpha)},{half},{grid.size}\n")
        for row in values:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _parse_report_header(line: str):
    parts = line.strip().split(",")
    if len(parts) != 5:
        raise ConfigError(f"bad report header {line.strip()!r}")
    try:
        d, h, alpha, half, size = int(parts[0]), float(parts[1]), float(parts[2]), parts[3], int(parts[4])
    except ValueError as exc:
        raise ConfigError(f"bad report header {line.strip()!r}") from exc
    grid = GridSpec(d, h)
    if half not in HALVES or grid.size != size:
        raise ConfigError(f"inconsistent report header {line.strip()!r}")
    return grid, alpha, half


def read_report_header(path):
    with open(path) as fh:
        return _parse_report_header(fh.readline())


def iter_report_rows(path):
    """Yield report rows one at a time without loading the file."""
    with open(path) as fh:
        grid, _, _ = _parse_report_header(fh.readline())
        for line in fh:
            if line.strip():
                row = np.array([float(v) for v in line.split(",")])
                if row.size != grid.n_cells:
                    raise ConfigError(f"row with {row.size} values, expected {grid.n_cells}")
                yield row


def read_reports(path):
    """Return ``(values, half, grid, alpha)`` for a report file."""
    grid, alpha, half = read_report_header(path)
    rows = list(iter_report_rows(path))
    values = np.vstack(rows) if rows else np.zeros((0, grid.n_cells))
    return values, half, grid, alpha


def write_model(path, model: ClassifierModel) -> None:
    g = model.grid
    with open(path, "w") as fh:
        fh.write(f"{g.d},{_fmt(g.h)},{model.n},{g.size}\n")
        for v in model.t:
            fh.write(_fmt(v) + "\n")


def read_model(path) -> ClassifierModel:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        try:
            d, h, n, size = int(header[0]), float(header[1]), int(header[2]), int(header[3])
            t = np.array([float(line) for line in fh if line.strip()])
        except (ValueError, IndexError) as exc:
            raise ConfigError(f"malformed model file {path}") from exc
    grid = GridSpec(d, h)
    if grid.size != size:
        raise ConfigError("model header size does not match its bandwidth")
    return ClassifierModel(grid, t, n)


def read_points(path, d: int | None = None):
    """Read ``x1..xd[,y]`` CSV; returns ``(X, y or None)``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [c.strip() for c in next(reader)]
        except StopIteration as exc:
            raise ConfigError(f"{path} is empty") from exc
        xcols = [i for i, c in enumerate(header) if c.startswith("x")]
        ycol = header.index("y") if "y" in header else None
        if not xcols or (d is not None and len(xcols) != d):
            raise ConfigError(f"{path}: expected columns x1..x{d or 'd'}")
        rows = [r for r in reader if r]
    try:
        X = np.array([[float(r[i]) for i in xcols] for r in rows]).reshape(-1, len(xcols))
        y = None if ycol is None else np.array([int(r[ycol]) for r in rows])
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"{path}: malformed row") from exc
    return as_points(X, len(xcols)), y


def write_points(path, X, y=None) -> None:
    X = np.atleast_2d(X)
    d = X.shape[1]
    with open(path, "w", newline="") as fh:
        cols = [f"x{k + 1}" for k in range(d)] + (["y"] if y is not None else [])
        fh.write(",".join(cols) + "\n")
        for i, row in enumerate(X):
            vals = [_fmt(v) for v in row] + ([str(int(y[i]))] if y is not None else [])
            fh.write(",".join(vals) + "\n")


def write_labels(path, labels) -> None:
    Path(path).write_text("label\n" + "".join(f"{int(v)}\n" for v in labels))
