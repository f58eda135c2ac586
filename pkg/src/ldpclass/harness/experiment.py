"""Monte Carlo excess-risk experiments and log-log rate fitting."""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Sequence

import jsonschema
import numpy as np

from ..classifier import (
    aggregate_arrays,
    baseline_bandwidth,
    default_bandwidth,
    fit_regressogram,
    nonprivate_rate_exponent,
    rate_exponent,
    theoretical_bandwidth,
)
from ..core import GridSpec, check_alpha
from ..errors import ConfigError, FitError
from ..mechanism import privatize_batch
from ..rng import RngStream, ZeroNoise
from ..synthgen import DistributionSpec, excess_risk, spec_from_document

_EVAL_STREAM = 1


def load_schema() -> dict:
    return json.loads(resources.files("ldpclass.harness").joinpath("config_schema.json").read_text())


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce a rate experiment.

    ``distribution`` is either a family document (serialisable, required for
    ``workers > 1``) or a ready-made :class:`DistributionSpec`.
    """

    distribution: dict | DistributionSpec
    alphas: tuple[float, ...]
    n_grid: tuple[int, ...]
    bandwidth_rule: str = "theoretical"
    bandwidth_c: float = 1.0
    baseline_c: float = 1.0
    reps: int = 50
    evaluation: str = "quadrature"
    test_points: int = 100_000
    nodes: int | None = None
    seed: int = 0
    workers: int = 1
    output: str | None = None

    def __post_init__(self):
        alphas = tuple(check_alpha(a) for a in self.alphas)
        object.__setattr__(self, "alphas", alphas)
        n_grid = tuple(int(n) for n in self.n_grid)
        if not n_grid or any(b <= a for a, b in zip(n_grid, n_grid[1:])) or n_grid[0] < 1:
            raise ConfigError(f"n grid must be non-empty and strictly increasing, got {n_grid}")
        object.__setattr__(self, "n_grid", n_grid)
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        if self.bandwidth_rule not in ("theoretical", "default"):
            raise ConfigError(f"unknown bandwidth rule {self.bandwidth_rule!r}")
        if self.evaluation not in ("quadrature", "mc"):
            raise ConfigError(f"unknown evaluation method {self.evaluation!r}")

    @cached_property
    def spec(self) -> DistributionSpec:
        if isinstance(self.distribution, DistributionSpec):
            return self.distribution
        return spec_from_document(self.distribution)

    @property
    def d(self) -> int:
        return self.spec.d

    def bandwidth(self, n: int, alpha: float) -> float:
        p = self.spec.params
        if self.bandwidth_rule == "theoretical":
            return theoretical_bandwidth(n, alpha, p.L, p.mu, p.beta, self.d)
        return default_bandwidth(n, alpha, p.beta, self.d, self.bandwidth_c)

    def to_document(self) -> dict:
        if isinstance(self.distribution, DistributionSpec):
            dist = self.distribution.document
        else:
            dist = self.distribution
        bw = {"rule": self.bandwidth_rule}
        if self.bandwidth_rule == "default":
            bw["c"] = self.bandwidth_c
        ev = {"method": self.evaluation}
        if self.evaluation == "mc":
            ev["test_points"] = self.test_points
        if self.nodes:
            ev["nodes"] = self.nodes
        doc = {
            "distribution": dist,
            "alpha": list(self.alphas),
            "n_grid": list(self.n_grid),
            "bandwidth": bw,
            "baseline_c": self.baseline_c,
            "reps": self.reps,
            "evaluation": ev,
            "seed": self.seed,
            "workers": self.workers,
        }
        if self.output:
            doc["output"] = self.output
        return doc

    @classmethod
    def from_document(cls, doc: dict) -> "ExperimentConfig":
        try:
            jsonschema.validate(doc, load_schema())
        except jsonschema.ValidationError as exc:
            raise ConfigError(f"invalid config: {exc.message}") from exc
        alpha = doc["alpha"]
        bw = doc.get("bandwidth", {"rule": "theoretical"})
        ev = doc.get("evaluation", {"method": "quadrature"})
        cfg = cls(
            distribution=doc["distribution"],
            alphas=tuple(alpha) if isinstance(alpha, list) else (alpha,),
            n_grid=tuple(doc["n_grid"]),
            bandwidth_rule=bw["rule"],
            bandwidth_c=bw.get("c", 1.0),
            baseline_c=doc.get("baseline_c", 1.0),
            reps=doc.get("reps", 50),
            evaluation=ev["method"],
            test_points=ev.get("test_points", 100_000),
            nodes=ev.get("nodes"),
            seed=doc.get("seed", 0),
            workers=doc.get("workers", 1),
            output=doc.get("output"),
        )
        try:
            cfg.spec
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"invalid distribution document: {exc}") from exc
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_document(doc)


@dataclass(frozen=True)
class ReplicationResult:
    n: int
    alpha: float
    rep: int
    h: float
    private: float
    baseline: float


def replication_stream(config: ExperimentConfig, n: int, alpha_index: int, rep: int) -> RngStream:
    """Substream of replication ``rep`` at grid point ``(n, alpha)``; client ``i`` is row ``i``."""
    return RngStream(config.seed, (n, alpha_index, rep))


def _evaluate(config: ExperimentConfig, predict, stream: RngStream) -> float:
    if config.evaluation == "quadrature":
        return excess_risk(config.spec, predict, method="quadrature", nodes=config.nodes)
    return excess_risk(config.spec, predict, method="mc", samples=config.test_points,
                       rng=stream.child(_EVAL_STREAM).generator())


def run_replication(config: ExperimentConfig, n: int, rep: int, alpha_index: int = 0,
                    noise: RngStream | ZeroNoise | None = None) -> ReplicationResult:
    """Draw ``2n`` points, privatize both halves, fit both classifiers, return their excess risks.

    ``noise`` replaces the replication's noise stream; tests pass
    :class:`ZeroNoise` here.
    """
    spec = config.spec
    alpha = config.alphas[alpha_index]
    stream = replication_stream(config, n, alpha_index, rep)
    X, y = spec.sample(2 * n, stream.generator())
    grid = GridSpec(spec.d, config.bandwidth(n, alpha))
    noise = stream if noise is None else noise
    density = privatize_batch(X[:n], None, grid, alpha, noise, first_client=0)
    label = privatize_batch(X[n:], y[n:], grid, alpha, noise, first_client=n)
    model = aggregate_arrays(density, label, grid)
    private = _evaluate(config, model.predict, stream)

    base_grid = GridSpec(spec.d, baseline_bandwidth(2 * n, spec.params.beta, spec.d, config.baseline_c))
    baseline_model = fit_regressogram(X, y, base_grid)
    baseline = _evaluate(config, baseline_model.predict, stream.child(2))
    return ReplicationResult(n, alpha, rep, grid.h, private, baseline)


@dataclass(frozen=True)
class RateRow:
    n: int
    alpha: float
    h: float
    mean_excess: float
    stderr: float
    baseline_mean: float
    reps: int
    private: np.ndarray = field(repr=False, compare=False)
    baseline: np.ndarray = field(repr=False, compare=False)


@dataclass(frozen=True)
class RateTable:
    rows: tuple[RateRow, ...]

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)


CSV_COLUMNS = ("n", "alpha", "h", "mean_excess", "stderr", "baseline_mean", "reps")


def _task(args):
    doc, n, rep, alpha_index = args
    return run_replication(ExperimentConfig.from_document(doc), n, rep, alpha_index)


def run_rate_experiment(config: ExperimentConfig, workers: int | None = None) -> RateTable:
    """``config.reps`` replications for every ``(alpha, n)``; results merged in replication order."""
    workers = config.workers if workers is None else workers
    tasks = [(n, r, a) for a in range(len(config.alphas)) for n in config.n_grid for r in range(config.reps)]
    if workers > 1:
        if isinstance(config.distribution, DistributionSpec):
            raise ConfigError("parallel runs need a serialisable distribution document")
        doc = config.to_document()
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_task, [(doc, n, r, a) for n, r, a in tasks], chunksize=4))
    else:
        results = [run_replication(config, n, r, a) for n, r, a in tasks]

    rows = []
    for a, alpha in enumerate(config.alphas):
        for n in config.n_grid:
            res = [x for x, (tn, _, ta) in zip(results, tasks) if tn == n and ta == a]
            priv = np.array([x.private for x in res])
            base = np.array([x.baseline for x in res])
            se = float(priv.std(ddof=1) / math.sqrt(priv.size)) if priv.size > 1 else 0.0
            rows.append(RateRow(n, alpha, res[0].h, float(priv.mean()), se, float(base.mean()),
                                priv.size, priv, base))
    return RateTable(tuple(rows))


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r2: float
    used_rows: int
    skipped_rows: int


def fit_rate(table: RateTable | Sequence[RateRow]) -> RateFit:
    """Least squares of ``log(mean excess)`` on ``log(n alpha^2)``.

    Rows with nonpositive mean are skipped; at least two usable rows are required.
    """
    rows = list(table)
    usable = [r for r in rows if r.mean_excess > 0]
    if len(usable) < 2:
        raise FitError(f"need at least two rows with positive mean, got {len(usable)}")
    x = np.log([r.n * r.alpha**2 for r in usable])
    y = np.log([r.mean_excess for r in usable])
    if np.ptp(x) == 0:
        raise FitError("all rows share the same n alpha^2")
    xc = x - x.mean()
    slope = float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return RateFit(slope, intercept, r2, len(usable), len(rows) - len(usable))


def write_rate_csv(path, table: RateTable) -> None:
    lines = [",".join(CSV_COLUMNS)]
    for r in table:
        lines.append(",".join([str(r.n), repr(r.alpha), repr(r.h), repr(r.mean_excess), repr(r.stderr),
                               repr(r.baseline_mean), str(r.reps)]))
    Path(path).write_text("\n".join(lines) + "\n")


def write_replications_csv(path, table: RateTable) -> None:
    lines = ["n,alpha,rep,private_excess,baseline_excess"]
    for r in table:
        for k, (p, b) in enumerate(zip(r.private, r.baseline)):
            lines.append(f"{r.n},{r.alpha!r},{k},{float(p)!r},{float(b)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def rate_summary(config: ExperimentConfig, table: RateTable, fit: RateFit | None) -> dict:
    p = config.spec.params
    largest = [r for r in table if r.n == config.n_grid[-1]]
    wins = [float(np.mean(r.baseline < r.private)) for r in largest]
    return {
        "fitted_slope": None if fit is None else fit.slope,
        "intercept": None if fit is None else fit.intercept,
        "r2": None if fit is None else fit.r2,
        "target_slope": -rate_exponent(p.beta, p.gamma, config.d),
        "nonprivate_target_slope": -nonprivate_rate_exponent(p.beta, p.gamma, config.d),
        "baseline_win_fraction_at_largest_n": wins,
        "rows": len(table),
        "config": config.to_document(),
    }
