"""Command-line entry point.

Exit codes: 0 success, 1 a check failed (``audit``), 2 configuration or
input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .. import audit
from ..classifier import ClassifierModel, aggregate_arrays
from ..core import DENSITY, LABEL, GridSpec, split_halves
from ..errors import LdpClassError
from ..mechanism import privatize_batch
from ..rng import RngStream
from ..synthgen import default_lower_bound_params, make_lower_bound_family, make_smooth_family
from . import formats
from .experiment import (
    ExperimentConfig,
    fit_rate,
    rate_summary,
    run_rate_experiment,
    run_replication,
    write_rate_csv,
    write_replications_csv,
)


class UsageError(Exception):
    pass


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master seed")
    p.add_argument("--config", default=argparse.SUPPRESS, help="JSON config document")
    p.add_argument("--out", default=argparse.SUPPRESS, help="output path")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="ldpclass", parents=[common],
                                     description="Locally private grid classifier: privatize, classify, simulate, audit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("privatize", parents=[common], help="privatize a labelled-point CSV into report files")
    p.add_argument("--points", required=True)
    p.add_argument("--h", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--aggregate-only", action="store_true",
                   help="accumulate per-cell sums and write a model file instead of report rows")

    p = sub.add_parser("aggregate", parents=[common], help="aggregate two report files into a model file")
    p.add_argument("--density", required=True)
    p.add_argument("--label", required=True)

    p = sub.add_parser("classify", parents=[common], help="classify points with a model file")
    p.add_argument("--model", required=True)
    p.add_argument("--points", required=True)

    p = sub.add_parser("simulate", parents=[common], help="run one replication and print it")
    p.add_argument("--n", type=int)
    p.add_argument("--rep", type=int, default=0)

    p = sub.add_parser("rate", parents=[common], help="rate experiment: CSV table plus JSON summary")
    p.add_argument("--workers", type=int)

    p = sub.add_parser("audit", parents=[common], help="privacy certification and tail checks")
    p.add_argument("--alpha", type=float, nargs="+", default=[0.25, 0.5, 1.0])
    p.add_argument("--dims", type=int, nargs="+", default=[1, 2, 3])
    p.add_argument("--pairs", type=int, default=1000)
    p.add_argument("--tail-reps", type=int, default=2000)
    p.add_argument("--tail-n", type=int, nargs="+", default=[512, 1280])

    p = sub.add_parser("genlb", parents=[common], help="emit a lower-bound family document")
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--q", type=int, default=4)
    p.add_argument("--m", type=int)
    p.add_argument("--w", type=float)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--C0", type=float, default=1.0)
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--sigma", type=int, nargs="+")
    return parser


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_config(args) -> ExperimentConfig:
    path = getattr(args, "config", None)
    if not path:
        raise UsageError("--config is required")
    cfg = ExperimentConfig.load(path)
    if getattr(args, "seed", None) is not None:
        cfg = _with_seed(cfg, args.seed)
    return cfg


def _with_seed(cfg: ExperimentConfig, seed: int) -> ExperimentConfig:
    doc = cfg.to_document()
    doc["seed"] = seed
    return ExperimentConfig.from_document(doc)


def cmd_privatize(args) -> int:
    doc = {}
    if getattr(args, "config", None):
        try:
            doc = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
    h = args.h if args.h is not None else doc.get("h")
    alpha = args.alpha if args.alpha is not None else doc.get("alpha")
    if h is None or alpha is None:
        raise UsageError("privatize needs --h and --alpha (or both in --config)")
    X, y = formats.read_points(args.points)
    if y is None:
        raise UsageError("points file needs a y column")
    grid = GridSpec(X.shape[1], h)
    n = split_halves(X.shape[0])
    rng = RngStream(getattr(args, "seed", 0))
    out = Path(getattr(args, "out", "reports"))
    if args.aggregate_only:
        # stream clients in blocks; only per-cell partial sums are kept
        dens_sum = np.zeros(grid.n_cells)
        lab_sum = np.zeros(grid.n_cells)
        block = 4096
        for s in range(0, n, block):
            e = min(n, s + block)
            dens_sum += privatize_batch(X[s:e], None, grid, alpha, rng, first_client=s).sum(axis=0)
            lab_sum += privatize_batch(X[n + s:n + e], y[n + s:n + e], grid, alpha, rng, first_client=n + s).sum(axis=0)
        model = ClassifierModel(grid, lab_sum / n - dens_sum / (2 * n), n)
        out.parent.mkdir(parents=True, exist_ok=True)
        formats.write_model(out, model)
        return 0
    out.mkdir(parents=True, exist_ok=True)
    formats.write_reports(out / "density.csv", privatize_batch(X[:n], None, grid, alpha, rng, 0), DENSITY, grid, alpha)
    formats.write_reports(out / "label.csv", privatize_batch(X[n:2 * n], y[n:2 * n], grid, alpha, rng, n),
                          LABEL, grid, alpha)
    return 0


def cmd_aggregate(args) -> int:
    dv, dh, dgrid, _ = formats.read_reports(args.density)
    lv, lh, lgrid, _ = formats.read_reports(args.label)
    if dh != DENSITY or lh != LABEL:
        raise UsageError("expected a density report file and a label report file")
    if dgrid != lgrid:
        raise UsageError("report files use different grids")
    model = aggregate_arrays(dv, lv, dgrid)
    formats.write_model(getattr(args, "out", "model.csv"), model)
    return 0


def cmd_classify(args) -> int:
    model = formats.read_model(args.model)
    X, _ = formats.read_points(args.points, model.grid.d)
    labels = model.predict(X)
    out = getattr(args, "out", None)
    if out:
        formats.write_labels(out, labels)
    else:
        sys.stdout.write("label\n" + "".join(f"{int(v)}\n" for v in labels))
    return 0


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    n = args.n if args.n is not None else cfg.n_grid[0]
    res = run_replication(cfg, n, args.rep)
    doc = {"n": res.n, "alpha": res.alpha, "rep": res.rep, "h": res.h,
           "private_excess": res.private, "baseline_excess": res.baseline}
    print(f"n={res.n} alpha={res.alpha} h={res.h:.6g} private={res.private:.6g} baseline={res.baseline:.6g}",
          file=sys.stderr)
    _emit(json.dumps(doc, indent=2) + "\n", getattr(args, "out", None))
    return 0


def cmd_rate(args) -> int:
    cfg = _load_config(args)
    out = Path(getattr(args, "out", None) or cfg.output or "rate_out")
    out.mkdir(parents=True, exist_ok=True)
    table = run_rate_experiment(cfg, workers=args.workers)
    try:
        fit = fit_rate(table)
    except LdpClassError as exc:
        print(f"rate fit skipped: {exc}", file=sys.stderr)
        fit = None
    write_rate_csv(out / "rate.csv", table)
    write_replications_csv(out / "replications.csv", table)
    summary = rate_summary(cfg, table, fit)
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    if fit is not None:
        print(f"fitted slope {fit.slope:.4f} (target {summary['target_slope']:.4f}), r2={fit.r2:.3f}", file=sys.stderr)
    return 0


def cmd_audit(args) -> int:
    seed = getattr(args, "seed", 0)
    rng = np.random.default_rng(seed)
    checks = []
    for d in args.dims:
        for a in args.alpha:
            res = audit.certify_privacy(d, a, args.pairs, rng)
            checks.append({"check": "privacy", **res})
    spec = make_smooth_family(1, 1.0, np.pi)
    for n in args.tail_n:
        grid = GridSpec(1, 0.1)
        x0 = np.array([0.3])
        tc = audit.tail_bound_check(spec, grid, 1.0, n, x0, [0.25, 0.5, 1.0], args.tail_reps,
                                    RngStream(seed, (n,)))
        checks.append({
            "check": "tail", "n": n, "alpha": 1.0, "t": tc.t.tolist(), "upper": tc.upper.tolist(),
            "lower": tc.lower.tolist(), "bound": tc.bound.tolist(), "slack": tc.slack.tolist(),
            "mean_oracle": tc.mean_oracle, "passed": tc.passed,
        })
    ok = all(c["passed"] for c in checks)
    verdict = {"passed": ok, "checks": checks}
    _emit(json.dumps(verdict, indent=2) + "\n", getattr(args, "out", None))
    if not ok:
        print("audit FAILED", file=sys.stderr)
    return 0 if ok else 1


def cmd_genlb(args) -> int:
    p = default_lower_bound_params(args.d, args.beta, args.gamma, args.C0, args.L, args.q, m=args.m, sigma=args.sigma)
    if args.w is not None:
        p = replace(p, w=args.w)
    spec = make_lower_bound_family(p, args.d)
    doc = dict(spec.document)
    doc["margin_threshold_t"] = p.L * p.C_phi / (2 * p.q**p.beta)
    _emit(json.dumps(doc, indent=2) + "\n", getattr(args, "out", None))
    return 0


COMMANDS = {
    "privatize": cmd_privatize,
    "aggregate": cmd_aggregate,
    "classify": cmd_classify,
    "simulate": cmd_simulate,
    "rate": cmd_rate,
    "audit": cmd_audit,
    "genlb": cmd_genlb,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        return COMMANDS[args.command](args)
    except (LdpClassError, UsageError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
