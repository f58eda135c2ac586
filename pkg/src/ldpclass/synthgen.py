"""Synthetic distributions with known regression function and marginal density.

Two families are provided:

* ``smooth``: ``X`` uniform on ``[0,1]^d`` and
  ``eta(x) = 1/2 + a * s |s|^(p-1)`` with ``s = sin(2 pi x_1)``; ``p = 1`` is
  the plain sine profile, larger ``p`` flattens ``eta`` near the boundary.
* ``lower_bound``: the sign-indexed hard instances ``P_sigma`` built from
  bumps on a ``q``-grid inside ``[0, 1/2]^d`` plus a neutral remainder
  region ``A_0 = [3/4, 1] x [0, 1]^(d-1)``.

Every :class:`DistributionSpec` carries its support as a union of boxes and
balls so that integrals against the density can be done piece by piece with
the trapezoid rule (``d <= 2``).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import Box, ClassParams, ball_volume
from .errors import ParameterError, UnsupportedError

C_PHI = 1.0 / 12.0


@dataclass(frozen=True)
class Ball:
    center: tuple[float, ...]
    radius: float

    @property
    def d(self) -> int:
        return len(self.center)

    @property
    def bounding_box(self) -> Box:
        c = np.asarray(self.center)
        return Box(tuple(c - self.radius), tuple(c + self.radius))

    def contains(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.sum((X - np.asarray(self.center)) ** 2, axis=1) <= self.radius**2


@dataclass(frozen=True)
class DistributionSpec:
    name: str
    d: int
    eta: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    density: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    sampler: Callable[[int, np.random.Generator], np.ndarray] = field(repr=False)
    support: tuple = field(repr=False)
    params: ClassParams
    document: dict = field(default_factory=dict, repr=False, compare=False)
    # constant density value on each support piece, when known; quadrature then skips density calls
    piece_density: tuple | None = field(default=None, repr=False, compare=False)

    def bayes(self, X) -> np.ndarray:
        return (self.eta(np.atleast_2d(X)) >= 0.5).astype(np.int8)

    def sample_x(self, count: int, rng: np.random.Generator) -> np.ndarray:
        return self.sampler(count, rng)

    def sample(self, count: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """Draw ``count`` labelled points; labels are Bernoulli(eta(X))."""
        X = self.sampler(count, rng)
        y = (rng.random(count) < self.eta(X)).astype(np.int8)
        return X, y


def _uniform_sampler(d: int):
    def sample(count, rng):
        return rng.random((count, d))

    return sample


def _unit_density(X):
    X = np.atleast_2d(X)
    inside = np.all((X >= 0.0) & (X <= 1.0), axis=1)
    return inside.astype(float)


def make_uniform_family(d: int, eta: Callable, params: ClassParams, name: str, document: dict | None = None) -> DistributionSpec:
    """``X`` uniform on ``[0,1]^d`` with the given regression function."""
    cube = Box((0.0,) * d, (1.0,) * d)
    return DistributionSpec(name, d, eta, _unit_density, _uniform_sampler(d), (cube,), params,
                            document or {"family": name, "d": d}, piece_density=(1.0,))


def smooth_amplitude(beta: float, L: float, power: float = 1.0) -> float:
    """Largest amplitude ``a <= 1/2`` whose ``smooth`` profile is ``(beta, L)``-Holder."""
    return min(0.5, L / ((2 * math.pi * power) ** beta * 2 ** (1 - beta)))


def make_smooth_family(d: int, beta: float, L: float, power: float = 1.0, amplitude: float | None = None,
                       gamma: float | None = None, C0: float | None = None) -> DistributionSpec:
    """Uniform design with ``eta = 1/2 + a s|s|^(p-1)``, ``s = sin(2 pi x_1)``.

    The Holder-beta constant of this ``eta`` is at most
    ``a (2 pi p)^beta 2^(1-beta)`` (Lipschitz bound ``2 pi a p`` interpolated
    with the range bound ``2a``).  Unless overridden, the declared margin
    parameters are ``gamma = 1/p`` and ``C0 = a^(-1/p)``, which hold because
    ``P(|sin(2 pi U)| <= s) = (2/pi) arcsin(s) <= s``.
    """
    if d < 1:
        raise ParameterError(f"d must be >= 1, got {d}")
    if not 0.0 < beta <= 1.0:
        raise ParameterError(f"beta must lie in (0, 1], got {beta}")
    if not L > 0 or not power >= 1.0:
        raise ParameterError(f"need L > 0 and power >= 1, got L={L}, power={power}")
    a = smooth_amplitude(beta, L, power) if amplitude is None else float(amplitude)
    holder_const = a * (2 * math.pi * power) ** beta * 2 ** (1 - beta)
    if not 0.0 <= a <= 0.5 or holder_const > L * (1 + 1e-12):
        raise ParameterError(
            f"amplitude {a} infeasible: needs 0 <= a <= 1/2 and Holder constant {holder_const:.6g} <= L={L}"
        )
    if gamma is None:
        gamma = 1.0 / power
    if C0 is None:
        C0 = a ** (-1.0 / power) if a > 0 else 1.0
    params = ClassParams(beta=beta, gamma=gamma, C0=C0, L=L, c0=2.0**-d, r0=1.0, mu=1.0)

    def eta(X):
        X = np.atleast_2d(X)
        s = np.sin(2 * np.pi * X[:, 0])
        return np.clip(0.5 + a * np.sign(s) * np.abs(s) ** power, 0.0, 1.0)

    doc = {"family": "smooth", "d": d, "beta": beta, "L": L, "power": power, "amplitude": a,
           "gamma": gamma, "C0": C0}
    return make_uniform_family(d, eta, params, "smooth", doc)


def bump_u(r) -> np.ndarray:
    """Radial profile: 1 on [0, 1/8], 0 on [1/4, inf), cubic smoothstep in between."""
    r = np.asarray(r, dtype=float)
    t = np.clip((r - 0.125) / 0.125, 0.0, 1.0)
    return 1.0 - (3.0 * t**2 - 2.0 * t**3)


@dataclass(frozen=True)
class LowerBoundParams:
    q: int
    m: int
    w: float
    sigma: tuple[int, ...]
    beta: float
    gamma: float
    C0: float
    L: float
    C_phi: float = C_PHI

    def validate(self, d: int) -> None:
        if int(self.q) != self.q or self.q < 1:
            raise ParameterError(f"q must be a positive integer, got {self.q}")
        if int(self.m) != self.m or not 1 <= self.m <= self.q**d:
            raise ParameterError(f"need 1 <= m <= q^d = {self.q ** d}, got m={self.m}")
        if not 0.0 < self.w <= 1.0 / self.m:
            raise ParameterError(f"need 0 < w <= 1/m = {1.0 / self.m:.6g}, got w={self.w}")
        if not 0.0 < self.beta <= 1.0 or self.gamma < 0 or not self.C0 > 0 or not self.L > 0 or not self.C_phi > 0:
            raise ParameterError("need beta in (0,1], gamma >= 0 and positive C0, L, C_phi")
        cap = self.C0 * (self.L * self.C_phi / (2 * self.q**self.beta)) ** self.gamma
        if self.m * self.w > cap * (1 + 1e-12):
            raise ParameterError(f"margin constraint violated: m w = {self.m * self.w:.6g} > {cap:.6g}")
        if len(self.sigma) != self.m or any(s not in (-1, 1) for s in self.sigma):
            raise ParameterError(f"sigma must be m={self.m} entries in {{-1, +1}}")

    @property
    def height(self) -> float:
        """Bump height ``L C_phi q^(-beta)``, so that ``|eta - 1/2| = height / 2`` on each ball."""
        return self.L * self.C_phi * self.q ** (-self.beta)

    def margin_probability(self, t) -> np.ndarray:
        """Exact ``P(0 < |eta - 1/2| <= t) = m w 1{2 t q^beta >= L C_phi}``."""
        t = np.asarray(t, dtype=float)
        return self.m * self.w * (2 * t * self.q**self.beta >= self.L * self.C_phi)


def active_cells(q: int, m: int, d: int) -> list[tuple[int, ...]]:
    """First ``m`` cells of ``{0, ..., q-1}^d`` in lexicographic order."""
    return list(itertools.islice(itertools.product(range(q), repeat=d), m))


def make_lower_bound_family(p: LowerBoundParams, d: int) -> DistributionSpec:
    p.validate(d)
    q, m, w = p.q, p.m, p.w
    cells = active_cells(q, m, d)
    centers = (2.0 * np.asarray(cells, dtype=float) + 1.0) / (4.0 * q)
    radius = 1.0 / (8.0 * q)
    ball_density = w / ball_volume(d, radius)
    a0 = Box((0.75,) + (0.0,) * (d - 1), (1.0,) * d)
    rest_density = (1.0 - m * w) / a0.volume
    sigma = np.asarray(p.sigma, dtype=float)
    # lookup from grid cell to active slot (-1 when inactive)
    slot = -np.ones((q + 1,) * d, dtype=np.int64)
    for i, j in enumerate(cells):
        slot[j] = i

    def eta(X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        k = np.clip(np.rint((4.0 * q * X - 1.0) / 2.0), 0, q).astype(np.int64)
        in_half = np.all(X <= 0.5, axis=1)
        s = slot[tuple(k.T)]
        active = in_half & (s >= 0)
        out = np.full(X.shape[0], 0.5)
        if np.any(active):
            c = (2.0 * k[active] + 1.0) / (4.0 * q)
            r = q * np.linalg.norm(X[active] - c, axis=1)
            phi = q ** (-p.beta) * p.L * p.C_phi * bump_u(r)
            out[active] = 0.5 * (1.0 + sigma[s[active]] * phi)
        return out

    def density(X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.where(np.all((X >= a0.lo) & (X <= a0.hi), axis=1), rest_density, 0.0)
        for c in centers:
            inside = np.sum((X - c) ** 2, axis=1) <= radius**2
            out = np.where(inside, ball_density, out)
        return out

    def sampler(count, rng):
        out = np.empty((count, d))
        comp = rng.random(count)
        in_ball = comp < m * w
        nb = int(in_ball.sum())
        which = rng.integers(0, m, size=nb)
        pts = np.empty((nb, d))
        todo = np.arange(nb)
        while todo.size:
            cand = rng.uniform(-radius, radius, size=(todo.size, d))
            ok = np.sum(cand**2, axis=1) <= radius**2
            pts[todo[ok]] = centers[which[todo[ok]]] + cand[ok]
            todo = todo[~ok]
        out[in_ball] = pts
        nr = count - nb
        rest = rng.random((nr, d))
        rest[:, 0] = 0.75 + 0.25 * rest[:, 0]
        out[~in_ball] = rest
        return out

    support = tuple(Ball(tuple(c), radius) for c in centers)
    if m * w < 1.0:
        support = support + (a0,)
    mu = min(ball_density, rest_density) if m * w < 1.0 else ball_density
    # c0, r0 are reported, not certified
    params = ClassParams(beta=p.beta, gamma=p.gamma, C0=p.C0, L=p.L, c0=2.0 ** (-d - 1), r0=radius, mu=mu)
    doc = {"family": "lower_bound", "d": d, "q": q, "m": m, "w": w, "sigma": list(p.sigma),
           "beta": p.beta, "gamma": p.gamma, "C0": p.C0, "L": p.L, "C_phi": p.C_phi}
    levels = (ball_density,) * m + ((rest_density,) if m * w < 1.0 else ())
    spec = DistributionSpec("lower_bound", d, eta, density, sampler, support, params, doc, piece_density=levels)
    return spec


def default_lower_bound_params(d: int, beta: float, gamma: float, C0: float, L: float, q: int,
                               m: int | None = None, sigma: Sequence[int] | None = None) -> LowerBoundParams:
    """Feasible parameters: ``m = min(q^d, 2)`` cells unless given, and the largest admissible ``w``."""
    m = min(q**d, 2) if m is None else m
    cap = C0 * (L * C_PHI / (2 * q**beta)) ** gamma
    w = min(1.0 / m, cap / m)
    sigma = tuple(sigma) if sigma is not None else tuple(1 if i % 2 == 0 else -1 for i in range(m))
    return LowerBoundParams(q=q, m=m, w=w, sigma=sigma, beta=beta, gamma=gamma, C0=C0, L=L)


def spec_from_document(doc: dict) -> DistributionSpec:
    """Rebuild a distribution from its configuration document."""
    family = doc.get("family")
    d = int(doc["d"])
    if family == "smooth":
        return make_smooth_family(d, doc["beta"], doc["L"], power=doc.get("power", 1.0),
                                  amplitude=doc.get("amplitude"), gamma=doc.get("gamma"), C0=doc.get("C0"))
    if family == "lower_bound":
        p = LowerBoundParams(q=int(doc["q"]), m=int(doc["m"]), w=float(doc["w"]), sigma=tuple(doc["sigma"]),
                             beta=doc["beta"], gamma=doc["gamma"], C0=doc["C0"], L=doc["L"],
                             C_phi=doc.get("C_phi", C_PHI))
        return make_lower_bound_family(p, d)
    raise ParameterError(f"unknown family {family!r}")


# ---------------------------------------------------------------------------
# quadrature

def default_nodes(d: int) -> int:
    return {1: 2**16, 2: 2**12}.get(d, 0)


def _axis_nodes(nodes: int, length: float) -> int:
    # same node spacing (1/nodes) on every piece, with a floor for tiny pieces
    return max(64, math.ceil(nodes * length))


def _trapezoid_box(g, box: Box, nodes: int) -> float:
    d = box.d
    axes = [np.linspace(lo, hi, _axis_nodes(nodes, hi - lo) + 1) for lo, hi in zip(box.lo, box.hi)]
    wts = []
    for ax in axes:
        wt = np.full(ax.size, ax[1] - ax[0])
        wt[0] = wt[-1] = 0.5 * (ax[1] - ax[0])
        wts.append(wt)
    if d == 1:
        return float(np.dot(wts[0], g(axes[0][:, None])))
    total = 0.0
    chunk = max(1, 2**20 // axes[1].size)
    for start in range(0, axes[0].size, chunk):
        a0 = axes[0][start:start + chunk]
        X = np.column_stack([np.repeat(a0, axes[1].size), np.tile(axes[1], a0.size)])
        vals = g(X).reshape(a0.size, axes[1].size)
        total += float(wts[0][start:start + chunk] @ vals @ wts[1])
    return total


def _polar_disk(g, ball: Ball, nodes: int) -> float:
    r = np.linspace(0.0, ball.radius, _axis_nodes(nodes, ball.radius) + 1)
    wr = np.full(r.size, r[1] - r[0])
    wr[0] = wr[-1] = 0.5 * (r[1] - r[0])
    n_theta = _axis_nodes(nodes, 2 * np.pi * ball.radius)
    theta = np.arange(n_theta) * (2 * np.pi / n_theta)
    wt = 2 * np.pi / n_theta
    c = np.asarray(ball.center)
    total = 0.0
    chunk = max(1, 2**20 // theta.size)
    for start in range(0, r.size, chunk):
        rr = r[start:start + chunk]
        X = np.column_stack([
            c[0] + np.repeat(rr, theta.size) * np.tile(np.cos(theta), rr.size),
            c[1] + np.repeat(rr, theta.size) * np.tile(np.sin(theta), rr.size),
        ])
        vals = g(X).reshape(rr.size, theta.size).sum(axis=1) * wt
        total += float(np.dot(wr[start:start + chunk], vals * rr))
    return total


def integrate(spec: DistributionSpec, g: Callable[[np.ndarray], np.ndarray], window: Box | None = None,
              nodes: int | None = None) -> float:
    """``int f(x) g(x) dx`` over ``support`` (intersected with ``window``), piece by piece.

    ``nodes`` is a resolution per unit length: each piece gets trapezoid nodes
    at spacing ``1/nodes`` along every axis (polar axes for disks).
    """
    d = spec.d
    if d > 2:
        raise UnsupportedError("quadrature is only available for d <= 2")
    nodes = nodes or default_nodes(d)

    def density_times(g, level=None):
        if level is None:
            return lambda X: spec.density(X) * g(X)
        return lambda X: level * g(X)

    levels = spec.piece_density or (None,) * len(spec.support)
    total = 0.0
    for piece, level in zip(spec.support, levels):
        fg = density_times(g, level)
        if isinstance(piece, Ball) and d == 1:
            piece = piece.bounding_box
        if isinstance(piece, Box):
            region = piece if window is None else piece.intersect(window)
            if region is not None:
                total += _trapezoid_box(fg, region, nodes)
        else:
            if window is not None and window.intersect(piece.bounding_box) is None:
                continue
            if window is None or window.intersect(piece.bounding_box) == piece.bounding_box:
                total += _polar_disk(fg, piece, nodes)
            else:
                total += _polar_disk(lambda X: fg(X) * window.contains(X), piece, nodes)
    return total


def excess_risk(spec: DistributionSpec, predict: Callable[[np.ndarray], np.ndarray], method: str = "auto",
                nodes: int | None = None, samples: int = 100_000, rng: np.random.Generator | None = None) -> float:
    """Excess risk ``E[1{predict(X) != bayes(X)} |2 eta(X) - 1|]``.

    ``method`` is ``"quadrature"`` (``d <= 2``), ``"mc"`` or ``"auto"``.
    """
    if method == "auto":
        method = "quadrature" if spec.d <= 2 else "mc"
    if method == "quadrature":
        if spec.d > 2:
            raise UnsupportedError("quadrature excess risk needs d <= 2")

        def g(X):
            eta = spec.eta(X)
            wrong = np.asarray(predict(X)) != (eta >= 0.5)
            return wrong * np.abs(2 * eta - 1)

        return max(0.0, integrate(spec, g, nodes=nodes))
    if method == "mc":
        if rng is None:
            raise ParameterError("Monte Carlo excess risk needs an rng")
        return excess_risk_mc(spec, predict, samples, rng)[0]
    raise ParameterError(f"unknown method {method!r}")


def excess_risk_mc(spec: DistributionSpec, predict, samples: int, rng: np.random.Generator) -> tuple[float, float]:
    """Monte Carlo excess risk and its standard error."""
    X = spec.sample_x(samples, rng)
    eta = spec.eta(X)
    vals = (np.asarray(predict(X)) != (eta >= 0.5)) * np.abs(2 * eta - 1)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples))


# ---------------------------------------------------------------------------
# class membership checks

@dataclass(frozen=True)
class HolderResult:
    passed: bool
    worst_ratio: float


def holder_check(spec: DistributionSpec, beta: float, L: float, trials: int, rng: np.random.Generator) -> HolderResult:
    """Largest ``|eta(x) - eta(x')| / |x - x'|^beta`` over random pairs, near and far mixed."""
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    d = spec.d
    n_far = trials // 2
    n_near = trials - n_far
    X1 = rng.random((n_far, d))
    X2 = rng.random((n_far, d))
    base = np.where(rng.random((n_near, 1)) < 0.5, rng.random((n_near, d)), spec.sample_x(n_near, rng))
    step = 10.0 ** rng.uniform(-6, np.log10(0.5), size=(n_near, 1))
    direction = rng.normal(size=(n_near, d))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    other = np.clip(base + step * direction, 0.0, 1.0)
    A = np.vstack([X1, base])
    B = np.vstack([X2, other])
    dist = np.linalg.norm(A - B, axis=1)
    keep = dist > 0
    ratios = np.abs(spec.eta(A[keep]) - spec.eta(B[keep])) / dist[keep] ** beta
    worst = float(ratios.max()) if ratios.size else 0.0
    return HolderResult(worst <= L * (1 + 1e-9), worst)


@dataclass(frozen=True)
class MarginResult:
    passed: bool
    t: np.ndarray
    estimate: np.ndarray
    stderr: np.ndarray
    bound: np.ndarray


def margin_probabilities(spec: DistributionSpec, t_grid, samples: int, rng: np.random.Generator):
    """Monte Carlo estimates of ``P(0 < |eta(X) - 1/2| <= t)`` with standard errors."""
    t = np.asarray(t_grid, dtype=float)
    gap = np.abs(spec.eta(spec.sample_x(samples, rng)) - 0.5)
    est = np.array([np.mean((gap > 0) & (gap <= tt)) for tt in t])
    se = np.sqrt(est * (1 - est) / samples)
    return t, est, se


def margin_check(spec: DistributionSpec, gamma: float, C0: float, t_grid, samples: int,
                 rng: np.random.Generator) -> MarginResult:
    t, est, se = margin_probabilities(spec, t_grid, samples, rng)
    bound = C0 * t**gamma
    return MarginResult(bool(np.all(est <= bound + 3 * se)), t, est, se, bound)


def density_mass(spec: DistributionSpec, nodes: int | None = None) -> float:
    return integrate(spec, lambda X: np.ones(np.atleast_2d(X).shape[0]), nodes=nodes)
