"""Executable checks of the mechanism's guarantees.

* privacy: for additive Laplace noise with scale ``b`` the supremum over
  outputs of ``log q(z|u) - log q(z|u')`` equals ``||payload(u) -
  payload(u')||_1 / b``, so certification is exact and deterministic;
* the mean of the cell statistic has the closed form
  ``E T_n(x0) = int_{window(x0)} f(x) (eta(x) - 1/2) dx``;
* sub-Gaussian tails ``P(T_n - E T_n >= t) <= exp(-n alpha^2 t^2 / 2^(2d+6))``
  for ``t`` in ``(0, 1]``, and the same for the lower tail.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DENSITY, LABEL, GridSpec, LabeledPoint, _as_point, check_alpha, indicator_window, nearest_flat
from .errors import ParameterError
from .mechanism import NoiseSpec, build_indicator_array, laplace_from_uniform
from .rng import RngStream
from .synthgen import DistributionSpec, integrate


def _payload(u, half: str, grid: GridSpec) -> frozenset:
    if half == DENSITY:
        x = u.x if isinstance(u, LabeledPoint) else (u[0] if isinstance(u, tuple) else u)
        return frozenset(build_indicator_array(x, grid).cells)
    if half == LABEL:
        p = u if isinstance(u, LabeledPoint) else LabeledPoint(*u)
        cells = build_indicator_array(p.x, grid).cells
        return frozenset(cells) if p.y == 1 else frozenset()
    raise ParameterError(f"unknown half {half!r}")


def payload_l1(u, u_prime, half: str, grid: GridSpec) -> int:
    """``||payload(u) - payload(u')||_1``; payloads are 0/1 arrays, so this is a symmetric-difference size."""
    return len(_payload(u, half, grid) ^ _payload(u_prime, half, grid))


def ldp_ratio_bound(u, u_prime, half: str, grid: GridSpec, alpha) -> float:
    """Exact supremum over outputs of the log-likelihood ratio between two inputs of one client."""
    alpha = check_alpha(alpha)
    return payload_l1(u, u_prime, half, grid) / NoiseSpec(grid.d, alpha).scale


def log_likelihood_ratio(z, payload, payload_prime, scale: float) -> float:
    """``log q(z | payload) - log q(z | payload')`` for additive Laplace noise."""
    z = np.asarray(z, dtype=float)
    return float(np.sum(np.abs(z - payload_prime) - np.abs(z - payload)) / scale)


def worst_case_pair(grid: GridSpec):
    """Two points whose windows each cover ``2^d`` cells with no cell in common, or ``None``.

    Coordinates ``h/2`` and ``5h/2`` touch cells ``{0, 1}`` and ``{2, 3}``.
    """
    h = grid.h
    if 2.5 * h > 1.0 or grid.size < 4:
        return None
    return np.full(grid.d, 0.5 * h), np.full(grid.d, 2.5 * h)


def expected_statistic_oracle(spec: DistributionSpec, grid: GridSpec, x0, nodes: int | None = None) -> float:
    """Quadrature value of ``E T_n(x0)``; independent of ``n`` and ``alpha``."""
    window = indicator_window(x0, grid)
    return integrate(spec, lambda X: spec.eta(X) - 0.5, window=window, nodes=nodes)


def simulate_statistic(spec: DistributionSpec, grid: GridSpec, alpha, n: int, x0, reps: int,
                       rng: RngStream, chunk: int = 256) -> np.ndarray:
    """Draw ``reps`` independent values of ``T_n(x0)``.

    Only cell ``j*(x0)`` of each report enters ``T_n(x0)``, so each client
    contributes its indicator for that cell plus one Laplace draw; this has the
    same law as running the full mechanism and reading that coordinate.
    Replication ``r`` takes its data from ``rng.child(r)`` and its noise from
    row ``r`` of ``rng``.
    """
    alpha = check_alpha(alpha)
    if n < 1 or reps < 1:
        raise ParameterError("need n >= 1 and reps >= 1")
    x0 = _as_point(x0, grid.d)
    target = int(nearest_flat(x0[None, :], grid)[0])
    center = np.asarray(np.unravel_index(target, grid.shape), dtype=float) * grid.h
    scale = NoiseSpec(grid.d, alpha).scale
    out = np.empty(reps)
    for start in range(0, reps, chunk):
        stop = min(reps, start + chunk)
        noise = laplace_from_uniform(rng.uniform_rows(stop - start, 2 * n, first_row=start), scale)
        for r in range(start, stop):
            X, y = spec.sample(2 * n, rng.child(r).generator())
            b = np.all(np.abs(X - center) < grid.h, axis=1).astype(float)
            z = noise[r - start]
            density_half = b[:n] + z[:n]
            label_half = y[n:] * b[n:] + z[n:]
            out[r] = label_half.sum() / n - density_half.sum() / (2 * n)
    return out


def tail_bound(n: int, alpha, d: int, t) -> np.ndarray:
    """``exp(-n alpha^2 t^2 / 2^(2d+6))``."""
    alpha = check_alpha(alpha)
    t = np.asarray(t, dtype=float)
    return np.exp(-n * alpha**2 * t**2 / 2.0 ** (2 * d + 6))


@dataclass(frozen=True)
class TailCheck:
    t: np.ndarray
    upper: np.ndarray
    lower: np.ndarray
    bound: np.ndarray
    slack: np.ndarray
    mean_oracle: float
    passed: bool


def tail_bound_check(spec: DistributionSpec, grid: GridSpec, alpha, n: int, x0, t, reps: int,
                     rng: RngStream, samples: np.ndarray | None = None) -> TailCheck:
    """Empirical two-sided tail frequencies of ``T_n(x0)`` around the quadrature mean.

    Passes when both tails are within ``bound + 3 sqrt(bound (1 - bound) / reps)``.
    Pre-simulated ``samples`` may be passed to share one simulation across checks.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t <= 0) or np.any(t > 1):
        raise ParameterError("t must lie in (0, 1]")
    if reps < 1:
        raise ParameterError("reps must be >= 1")
    mean = expected_statistic_oracle(spec, grid, x0)
    if samples is None:
        samples = simulate_statistic(spec, grid, alpha, n, x0, reps, rng)
    reps = samples.size
    dev = samples - mean
    upper = np.array([np.mean(dev >= tt) for tt in t])
    lower = np.array([np.mean(dev <= -tt) for tt in t])
    bound = tail_bound(n, alpha, grid.d, t)
    slack = 3.0 * np.sqrt(bound * (1 - bound) / reps)
    passed = bool(np.all(upper <= bound + slack) and np.all(lower <= bound + slack))
    return TailCheck(t, upper, lower, bound, slack, mean, passed)


def certify_privacy(d: int, alpha, pairs: int, rng: np.random.Generator, h: float | None = None) -> dict:
    """Random-pair certification on both halves plus the worst-case pair when it exists."""
    alpha = check_alpha(alpha)
    worst = 0.0
    attained = None
    for _ in range(pairs):
        grid = GridSpec(d, h if h is not None else float(rng.uniform(1e-3, 1.0)))
        x, xp = rng.random(d), rng.random(d)
        y, yp = int(rng.integers(0, 2)), int(rng.integers(0, 2))
        worst = max(worst,
                    ldp_ratio_bound(x, xp, DENSITY, grid, alpha),
                    ldp_ratio_bound((x, y), (xp, yp), LABEL, grid, alpha))
    grid = GridSpec(d, h if h is not None else 0.25)
    pair = worst_case_pair(grid)
    if pair is not None:
        attained = ldp_ratio_bound(pair[0], pair[1], DENSITY, grid, alpha)
        worst = max(worst, attained)
    return {
        "d": d,
        "alpha": alpha,
        "pairs": pairs,
        "max_log_ratio": worst,
        "worst_case_log_ratio": attained,
        "passed": bool(worst <= alpha + 1e-12 and (attained is None or abs(attained - alpha) <= 1e-12)),
    }
