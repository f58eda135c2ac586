"""Server side: aggregate privatized reports into the per-cell statistic and classify.

For a test point ``x0`` the statistic read is cell ``j*(x0)`` of

    t(j) = (1/n) sum_{label half} Z_ij - (1/(2n)) sum_{density half} Z_ij

and the prediction is ``1{t(j*(x0)) >= 0}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import DENSITY, LABEL, GridSpec, PrivatizedReport, _as_point, as_points, check_alpha, nearest_flat
from .errors import ConfigError, ParameterError, SizeError, TagError


@dataclass(frozen=True)
class ClassifierModel:
    grid: GridSpec
    t: np.ndarray = field(repr=False)
    n: int

    def __post_init__(self):
        t = np.array(self.t, dtype=float)
        if t.shape != (self.grid.n_cells,):
            raise ConfigError(f"statistic has {t.size} entries, grid has {self.grid.n_cells} cells")
        if self.n < 1:
            raise SizeError(f"half-size must be >= 1, got {self.n}")
        t.setflags(write=False)
        object.__setattr__(self, "t", t)

    def statistic(self, X) -> np.ndarray:
        return self.t[nearest_flat(X, self.grid)]

    def predict(self, X) -> np.ndarray:
        """Vectorised classifier for an ``(N, d)`` batch."""
        return (self.statistic(X) >= 0.0).astype(np.int8)


def aggregate_arrays(density_values, label_values, grid: GridSpec) -> ClassifierModel:
    """Build the model from stacked ``(n, G^d)`` report values, rows in client order."""
    dens = np.asarray(density_values, dtype=float)
    lab = np.asarray(label_values, dtype=float)
    if dens.ndim != 2 or lab.ndim != 2 or dens.shape[1] != grid.n_cells or lab.shape[1] != grid.n_cells:
        raise ConfigError("report arrays do not match the grid")
    if dens.shape[0] != lab.shape[0]:
        raise SizeError(f"half sizes differ: {dens.shape[0]} density vs {lab.shape[0]} label")
    n = dens.shape[0]
    if n == 0:
        raise SizeError("need at least one report per half")
    # np.add.reduce over axis 0 accumulates rows in index order
    t = np.add.reduce(lab, axis=0) / n - np.add.reduce(dens, axis=0) / (2 * n)
    return ClassifierModel(grid, t, n)


def aggregate(density_reports: Sequence[PrivatizedReport], label_reports: Sequence[PrivatizedReport]) -> ClassifierModel:
    if not density_reports or not label_reports:
        raise SizeError("both halves must be non-empty")
    grid = density_reports[0].grid
    for rep in list(density_reports) + list(label_reports):
        if rep.grid != grid:
            raise ConfigError(f"report grid {rep.grid} differs from {grid}")
    if any(rep.half != DENSITY for rep in density_reports):
        raise TagError("density list contains a report not tagged 'density'")
    if any(rep.half != LABEL for rep in label_reports):
        raise TagError("label list contains a report not tagged 'label'")
    if len(density_reports) != len(label_reports):
        raise SizeError(f"half sizes differ: {len(density_reports)} vs {len(label_reports)}")
    return aggregate_arrays(
        np.stack([r.values for r in density_reports]),
        np.stack([r.values for r in label_reports]),
        grid,
    )


def classify(x0, model: ClassifierModel) -> int:
    x0 = _as_point(x0, model.grid.d)
    return int(model.predict(x0[None, :])[0])


def _positive(**kwargs):
    for name, value in kwargs.items():
        if not value > 0:
            raise ParameterError(f"{name} must be positive, got {value}")


def _check_beta(beta):
    if not 0.0 < beta <= 1.0:
        raise ParameterError(f"beta must lie in (0, 1], got {beta}")


def theoretical_bandwidth(n, alpha, L, mu, beta, d) -> float:
    """``h = (n alpha^2 L^2 mu^2)^(-1/(2d + 2 beta))``, clamped into (0, 1]."""
    _positive(n=n, L=L, mu=mu, d=d)
    alpha = check_alpha(alpha)
    _check_beta(beta)
    h = (n * alpha**2 * L**2 * mu**2) ** (-1.0 / (2 * d + 2 * beta))
    return min(1.0, h)


def default_bandwidth(n, alpha, beta, d, c=1.0) -> float:
    """``h = c (n alpha^2)^(-1/(2 beta + 2d))``, clamped into (0, 1].

    With this choice ``n alpha^2 h^(2d) = c^(2d) (n alpha^2)^(beta/(beta+d))``
    grows without bound, and ``h -> 0``.
    """
    _positive(n=n, d=d, c=c)
    alpha = check_alpha(alpha)
    _check_beta(beta)
    return min(1.0, c * (n * alpha**2) ** (-1.0 / (2 * beta + 2 * d)))


def baseline_bandwidth(n, beta, d, c=1.0) -> float:
    """Non-private regressogram bandwidth ``c n^(-1/(2 beta + d))``, clamped into (0, 1]."""
    _positive(n=n, d=d, c=c)
    _check_beta(beta)
    return min(1.0, c * n ** (-1.0 / (2 * beta + d)))


def rate_exponent(beta, gamma, d) -> float:
    """Private minimax exponent ``beta (1 + gamma) / (2 beta + 2d)``."""
    _check_beta(beta)
    if gamma < 0 or d < 1:
        raise ParameterError(f"need gamma >= 0 and d >= 1, got gamma={gamma}, d={d}")
    return beta * (1 + gamma) / (2 * beta + 2 * d)


def nonprivate_rate_exponent(beta, gamma, d) -> float:
    """Classical exponent ``beta (1 + gamma) / (2 beta + d)``."""
    _check_beta(beta)
    if gamma < 0 or d < 1:
        raise ParameterError(f"need gamma >= 0 and d >= 1, got gamma={gamma}, d={d}")
    return beta * (1 + gamma) / (2 * beta + d)


@dataclass(frozen=True)
class RegressogramModel:
    """Non-private baseline: cell-wise label average over ``j*`` cells, thresholded at 1/2."""

    grid: GridSpec
    sums: np.ndarray = field(repr=False)
    counts: np.ndarray = field(repr=False)

    def eta_hat(self, X) -> np.ndarray:
        k = nearest_flat(X, self.grid)
        return self.sums[k] / np.maximum(1.0, self.counts[k])

    def predict(self, X) -> np.ndarray:
        k = nearest_flat(X, self.grid)
        est = self.sums[k] / np.maximum(1.0, self.counts[k])
        # empty cells fall back to label 1, matching the private tie rule
        return ((est >= 0.5) | (self.counts[k] == 0)).astype(np.int8)


def fit_regressogram(X, y, grid: GridSpec) -> RegressogramModel:
    X = as_points(X, grid.d)
    y = np.asarray(y, dtype=float)
    if X.shape[0] == 0:
        raise SizeError("regressogram needs at least one point")
    k = nearest_flat(X, grid)
    sums = np.bincount(k, weights=y, minlength=grid.n_cells)
    counts = np.bincount(k, minlength=grid.n_cells).astype(float)
    return RegressogramModel(grid, sums, counts)


def classify_nonprivate(x0, raw, grid: GridSpec) -> int:
    """Regressogram prediction at ``x0`` from raw labelled points."""
    if len(raw) == 0:
        raise SizeError("raw sample must be non-empty")
    X = np.stack([p.x for p in raw])
    y = np.array([p.y for p in raw])
    x0 = _as_point(x0, grid.d)
    return int(fit_regressogram(X, y, grid).predict(x0[None, :])[0])
