"""Grid geometry, cell indexing and the small value types used everywhere else.

The lattice has spacing ``h`` over ``[0, 1]^d``; per-dimension indices run
over ``0..ceil(1/h)`` and cells are flattened in row-major order over
``(j_1, ..., j_d)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, ParameterError

DENSITY = "density"
LABEL = "label"
HALVES = (DENSITY, LABEL)


def _as_point(x, d: int | None = None) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise DomainError(f"expected a single point, got shape {arr.shape}")
    if d is not None and arr.shape[0] != d:
        raise DomainError(f"point has dimension {arr.shape[0]}, grid has d={d}")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError(f"point {arr.tolist()} is outside [0, 1]^{arr.shape[0]}")
    return arr


def as_points(X, d: int) -> np.ndarray:
    """Validate a batch of points and return it as an ``(N, d)`` float array."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, d) if d == 1 else arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != d:
        raise DomainError(f"expected points of shape (N, {d}), got {arr.shape}")
    if arr.size and (not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0):
        raise DomainError(f"points outside [0, 1]^{d}")
    return arr


@dataclass(frozen=True)
class GridSpec:
    """Lattice ``x_j = (j_1 h, ..., j_d h)`` truncated to ``{0, ..., ceil(1/h)}^d``."""

    d: int
    h: float

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ParameterError(f"dimension must be a positive integer, got {self.d}")
        if not (0.0 < self.h <= 1.0) or not math.isfinite(self.h):
            raise ParameterError(f"bandwidth must lie in (0, 1], got {self.h}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "h", float(self.h))

    @property
    def size(self) -> int:
        """Cells per dimension, ``G = ceil(1/h) + 1``."""
        return math.ceil(1.0 / self.h) + 1

    @property
    def n_cells(self) -> int:
        return self.size**self.d

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.size,) * self.d

    def flatten(self, j: Sequence[int]) -> int:
        j = tuple(int(v) for v in j)
        if len(j) != self.d or any(v < 0 or v >= self.size for v in j):
            raise DomainError(f"index {j} outside grid of shape {self.shape}")
        return int(np.ravel_multi_index(j, self.shape))

    def unflatten(self, k: int) -> tuple[int, ...]:
        if not 0 <= k < self.n_cells:
            raise DomainError(f"flat index {k} outside [0, {self.n_cells})")
        return tuple(int(v) for v in np.unravel_index(int(k), self.shape))

    def point(self, j: Sequence[int]) -> np.ndarray:
        return np.asarray(j, dtype=float) * self.h


@dataclass(frozen=True)
class ClassParams:
    """Parameters ``(beta, gamma, C0, L, c0, r0, mu)`` of the distribution class."""

    beta: float
    gamma: float
    C0: float
    L: float
    c0: float
    r0: float
    mu: float

    def __post_init__(self):
        if not 0.0 < self.beta <= 1.0:
            raise ParameterError(f"beta must lie in (0, 1], got {self.beta}")
        if self.gamma < 0.0:
            raise ParameterError(f"gamma must be nonnegative, got {self.gamma}")
        for name in ("C0", "L", "c0", "r0", "mu"):
            if not getattr(self, name) > 0.0:
                raise ParameterError(f"{name} must be positive, got {getattr(self, name)}")

    def lower_bound_valid(self, d: int) -> bool:
        """Whether the lower-bound construction applies, i.e. ``beta * gamma <= d``."""
        return self.beta * self.gamma <= d


@dataclass(frozen=True)
class LabeledPoint:
    x: np.ndarray
    y: int

    def __post_init__(self):
        object.__setattr__(self, "x", _as_point(self.x))
        if self.y not in (0, 1):
            raise DomainError(f"label must be 0 or 1, got {self.y}")
        object.__setattr__(self, "y", int(self.y))


@dataclass(frozen=True)
class PrivacyBudget:
    alpha: float

    def __post_init__(self):
        if not (self.alpha > 0.0 and math.isfinite(self.alpha)):
            raise ParameterError(f"alpha must be positive, got {self.alpha}")

    def __float__(self) -> float:
        return float(self.alpha)


def check_alpha(alpha) -> float:
    return float(PrivacyBudget(float(alpha)))


@dataclass(frozen=True)
class PrivatizedReport:
    """One client's noisy array ``Z_i``, flattened in row-major cell order."""

    half: str
    values: np.ndarray = field(repr=False)
    grid: GridSpec

    def __post_init__(self):
        if self.half not in HALVES:
            raise ParameterError(f"half must be one of {HALVES}, got {self.half!r}")
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n_cells,):
            raise ParameterError(
                f"report has {values.size} values, grid has {self.grid.n_cells} cells"
            )
        if not np.all(np.isfinite(values)):
            raise ParameterError("report values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


def nearest_indices(X, grid: GridSpec) -> np.ndarray:
    """Vectorised ``j*(x)`` for an ``(N, d)`` batch; returns an int array of shape ``(N, d)``.

    Each coordinate picks the closer of ``floor(x/h)`` and ``floor(x/h) + 1``;
    on an exact tie the lower index wins.
    """
    X = as_points(X, grid.d)
    h = grid.h
    lo = np.floor(X / h)
    up = lo + 1.0
    pick_up = np.abs(X - up * h) < np.abs(X - lo * h)
    j = np.where(pick_up, up, lo).astype(np.int64)
    return np.clip(j, 0, grid.size - 1)


def nearest_flat(X, grid: GridSpec) -> np.ndarray:
    """Flattened ``j*(x)`` for a batch of points."""
    j = nearest_indices(X, grid)
    return np.ravel_multi_index(tuple(j.T), grid.shape).astype(np.int64)


def index_nearest(x, grid: GridSpec) -> tuple[int, ...]:
    """Nearest lattice index ``j*(x)`` of a single point."""
    x = _as_point(x, grid.d)
    return tuple(int(v) for v in nearest_indices(x[None, :], grid)[0])


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``prod (lo_k, hi_k)``; openness is irrelevant for integration."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    @property
    def d(self) -> int:
        return len(self.lo)

    def contains(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.all((X > np.asarray(self.lo)) & (X < np.asarray(self.hi)), axis=1)

    def intersect(self, other: "Box") -> "Box | None":
        lo = tuple(max(a, b) for a, b in zip(self.lo, other.lo))
        hi = tuple(min(a, b) for a, b in zip(self.hi, other.hi))
        if any(a >= b for a, b in zip(lo, hi)):
            return None
        return Box(lo, hi)

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.hi, self.lo)))


def indicator_window(x0, grid: GridSpec) -> Box:
    """Open cube of half-width ``h`` centred at the lattice point nearest to ``x0``."""
    j = index_nearest(x0, grid)
    c = grid.point(j)
    return Box(tuple(c - grid.h), tuple(c + grid.h))


def ball_volume(d: int, r: float) -> float:
    """Lebesgue measure of a Euclidean ball of radius ``r`` in ``R^d``."""
    if d < 1 or r <= 0:
        raise ParameterError(f"need d >= 1 and r > 0, got d={d}, r={r}")
    return math.pi ** (d / 2) / math.gamma(1 + d / 2) * r**d


def split_halves(n_raw: int) -> int:
    """Half-size ``n`` for ``n_raw`` raw points; a leftover odd point is dropped."""
    if n_raw < 2:
        raise ParameterError(f"need at least two points, got {n_raw}")
    return n_raw // 2
