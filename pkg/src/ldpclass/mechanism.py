"""Client-side privatization: grid indicator arrays plus Laplace noise.

Each client turns its point into the binary array of cells whose open
sup-norm window of half-width ``h`` contains it, multiplies by its label when
it belongs to the label half, and adds i.i.d. Laplace noise with scale
``b = 2^(d+1) / alpha`` to every cell of the truncated grid.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import (
    DENSITY,
    LABEL,
    GridSpec,
    LabeledPoint,
    PrivatizedReport,
    _as_point,
    as_points,
    check_alpha,
)
from .errors import DomainError
from .rng import RngStream, ZeroNoise


@dataclass(frozen=True)
class NoiseSpec:
    d: int
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", check_alpha(self.alpha))

    @property
    def scale(self) -> float:
        return 2.0 ** (self.d + 1) / self.alpha

    @property
    def variance(self) -> float:
        return 2.0 * self.scale**2

    def pdf(self, z):
        b = self.scale
        return np.exp(-np.abs(z) / b) / (2.0 * b)


def laplace_from_uniform(u, scale: float) -> np.ndarray:
    """Inverse CDF ``z = -b sign(u) log(1 - 2|u|)`` for ``u`` in ``(-1/2, 1/2)``."""
    u = np.asarray(u, dtype=float)
    return -scale * np.sign(u) * np.log1p(-2.0 * np.abs(u))


def sample_laplace(spec: NoiseSpec, count: int, rng: RngStream | ZeroNoise, row: int = 0) -> np.ndarray:
    if count < 0:
        raise ValueError("count must be nonnegative")
    return laplace_from_uniform(rng.uniform_rows(1, count, first_row=row)[0], spec.scale)


@dataclass(frozen=True)
class IndicatorArray:
    grid: GridSpec
    cells: tuple[int, ...]

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.grid.n_cells)
        out[list(self.cells)] = 1.0
        return out


def _coordinate_candidates(X: np.ndarray, grid: GridSpec):
    """Per coordinate, the three lattice indices around ``x/h`` and which satisfy ``|x - jh| < h``."""
    f = np.floor(X / grid.h).astype(np.int64)
    cand = np.stack([f - 1, f, f + 1], axis=-1)  # (N, d, 3)
    ok = (np.abs(X[..., None] - cand * grid.h) < grid.h) & (cand >= 0) & (cand < grid.size)
    return cand, ok


def _window_cells(X: np.ndarray, grid: GridSpec):
    """Yield ``(flat_index, valid)`` pairs, one per combination of coordinate candidates."""
    cand, ok = _coordinate_candidates(X, grid)
    d = grid.d
    strides = grid.size ** np.arange(d - 1, -1, -1)
    for combo in itertools.product(range(3), repeat=d):
        sel = np.asarray(combo)
        idx = cand[:, np.arange(d), sel]
        valid = np.all(ok[:, np.arange(d), sel], axis=1)
        flat = np.where(valid, (np.clip(idx, 0, grid.size - 1) * strides).sum(axis=1), 0)
        yield flat, valid


def build_indicator_array(x, grid: GridSpec) -> IndicatorArray:
    # single point: plain Python over at most 3 candidates per coordinate is far cheaper than numpy here
    x = _as_point(x, grid.d)
    h, size = grid.h, grid.size
    per_axis = []
    for xk in x.tolist():
        f = math.floor(xk / h)
        per_axis.append([j for j in (f - 1, f, f + 1) if 0 <= j < size and abs(xk - j * h) < h])
    cells = []
    for combo in itertools.product(*per_axis):
        flat = 0
        for j in combo:
            flat = flat * size + j
        cells.append(flat)
    return IndicatorArray(grid, tuple(sorted(cells)))


def indicator_matrix(X, grid: GridSpec) -> np.ndarray:
    """Dense ``(N, G^d)`` stack of indicator arrays."""
    X = as_points(X, grid.d)
    out = np.zeros((X.shape[0], grid.n_cells))
    rows = np.arange(X.shape[0])
    for flat, valid in _window_cells(X, grid):
        out[rows[valid], flat[valid]] = 1.0
    return out


def privatize_batch(X, y, grid: GridSpec, alpha, rng: RngStream | ZeroNoise, first_client: int = 0) -> np.ndarray:
    """Noisy arrays for a run of consecutive clients; ``y=None`` means the density half.

    Client ``first_client + k`` draws its noise from row ``first_client + k`` of
    ``rng``, so the result does not depend on how clients are batched.
    """
    X = as_points(X, grid.d)
    payload = indicator_matrix(X, grid)
    if y is not None:
        y = np.asarray(y)
        if y.shape != (X.shape[0],) or not np.all((y == 0) | (y == 1)):
            raise DomainError("labels must be a 0/1 vector matching the points")
        payload *= y[:, None]
    spec = NoiseSpec(grid.d, alpha)
    u = rng.uniform_rows(X.shape[0], grid.n_cells, first_row=first_client)
    return payload + laplace_from_uniform(u, spec.scale)


def privatize_density(x, grid: GridSpec, alpha, rng: RngStream | ZeroNoise, client: int = 0) -> PrivatizedReport:
    x = _as_point(x, grid.d)
    values = privatize_batch(x[None, :], None, grid, alpha, rng, first_client=client)[0]
    return PrivatizedReport(DENSITY, values, grid)


def privatize_label(p: LabeledPoint, grid: GridSpec, alpha, rng: RngStream | ZeroNoise, client: int = 0) -> PrivatizedReport:
    x = _as_point(p.x, grid.d)
    values = privatize_batch(x[None, :], np.array([p.y]), grid, alpha, rng, first_client=client)[0]
    return PrivatizedReport(LABEL, values, grid)
