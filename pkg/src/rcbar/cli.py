"""Command-line interface.

Exit codes: 0 success, 1 hypothesis or statistical failure, 2 usage or input
error. Flags override the ``run`` block of the config file; a seed must come
from one of the two.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io
from .asymptotics import NotPositiveDefiniteError, limit_matrices, t_moments
from .config import ConfigError, load_config
from .estimators import estimate
from .experiments import (ESTIMATORS, COORDS, ExperimentConfig, HypothesisFailure,
                          ks_critical, run_experiment)
from .model import derive_moments, validate_hypotheses
from .simulate import TSampleConfig, sample_T, simulate_tree
from .tree import MAX_GENERATION

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _setting(args, run: dict, name: str, default=None, required=False):
    v = getattr(args, name, None)
    if v is None:
        v = run.get(name, default)
    if v is None and required:
        raise UsageError(f"--{name.replace('_', '-')} is required (flag or run.{name} in the config)")
    return v


def _gens(args, run):
    g = _setting(args, run, "gens", required=True)
    if not 0 <= g <= MAX_GENERATION:
        raise UsageError(f"--gens must be in 0..{MAX_GENERATION}, got {g}")
    return g


def cmd_validate(args) -> int:
    spec, _ = load_config(args.config)
    report = validate_hypotheses(derive_moments(spec), spec)
    print("\n".join(report.lines()))
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_simulate(args) -> int:
    spec, run = load_config(args.config)
    n = _gens(args, run)
    seed = _setting(args, run, "seed", required=True)
    tree = simulate_tree(spec, n, seed, record_draws=args.record_draws,
                         replication=args.replication)
    io.write_tree_csv(args.out, tree)
    print(f"wrote {tree.shape.size} nodes (generations 0..{n}) to {args.out}")
    return EXIT_OK


def _parse_range(text: str, top: int) -> range:
    try:
        if ":" in text:
            lo, hi = (int(p) for p in text.split(":"))
        else:
            lo = hi = int(text)
    except ValueError:
        raise UsageError(f"--n expects K or A:B, got {text!r}") from None
    if not 1 <= lo <= hi <= top:
        raise UsageError(f"--n range {text} must lie within 1..{top}")
    return range(lo, hi + 1)


def cmd_estimate(args) -> int:
    if args.tree is not None:
        if not Path(args.tree).is_file():
            raise UsageError(f"tree file not found: {args.tree}")
        tree = io.read_tree_csv(args.tree)
    elif args.config is not None:
        spec, run = load_config(args.config)
        tree = simulate_tree(spec, _gens(args, run), _setting(args, run, "seed", required=True))
    else:
        raise UsageError("give --tree PATH or --config PATH with --gens and --seed")
    if tree.n < 1:
        raise UsageError("estimation needs at least one generation of children")
    ns = _parse_range(args.n, tree.n) if args.n else range(1, tree.n + 1)
    rows = [estimate(tree, k) for k in ns]
    if args.out:
        io.write_estimates_csv(args.out, rows)
    for e in rows:
        print(f"n={e.n:2d} theta=({', '.join(f'{v:.6g}' for v in e.theta_hat)}) "
              f"eta=({e.eta_hat[0]:.4g}, {e.eta_hat[1]:.4g}) "
              f"zeta=({e.zeta_hat[0]:.4g}, {e.zeta_hat[1]:.4g}) "
              f"nu=({e.nu_hat[0]:.4g}, {e.nu_hat[1]:.4g})"
              + (" [regularized]" if e.design.regularized else ""))
    return EXIT_OK


def _fmt_matrix(m) -> str:
    return "[" + ", ".join("[" + ", ".join(f"{v:.10g}" for v in row) + "]" for row in m) + "]"


def cmd_limits(args) -> int:
    spec, run = load_config(args.config)
    samples = _setting(args, run, "samples", default=10**6)
    seed = _setting(args, run, "seed", required=True)
    bias = _setting(args, run, "target_bias", default=1e-8)
    m = derive_moments(spec)
    report = validate_hypotheses(m, spec)
    status = EXIT_OK if report.passed else EXIT_FAIL
    if not report.passed:
        print("warning: hypotheses fail, limit matrices may be singular")
        for line in report.lines():
            print("  " + line)

    tm = t_moments(m)
    t = sample_T(spec, TSampleConfig.for_spec(spec, bias), seed, samples)
    se_mean = t.std(ddof=1) / np.sqrt(samples) if samples > 1 else float("nan")
    se_sq = (t * t).std(ddof=1) / np.sqrt(samples) if samples > 1 else float("nan")
    print(f"E[T]   closed form {tm.mean:.10g}   Monte Carlo {t.mean():.10g} (se {se_mean:.3g})")
    print(f"E[T^2] closed form {tm.second_moment:.10g}   Monte Carlo {np.mean(t * t):.10g} (se {se_sq:.3g})")
    print(f"Var(T) closed form {tm.variance:.10g}")
    if samples < 10**4:
        print(f"warning: only {samples} T samples, Monte Carlo standard errors will be large")
    try:
        lm = limit_matrices(m, t)
    except NotPositiveDefiniteError as exc:
        print(f"warning: {exc}")
        lm = limit_matrices(m, t, check_pd=False)
        status = EXIT_FAIL
    for name, mat in lm.named().items():
        print(f"{name} = {_fmt_matrix(mat)}")
    print(f"tr(Lambda^-1/2 L Lambda^-1/2) = {lm.qsl_target():.10g}")
    if args.out:
        io.write_limits_csv(args.out, lm)
    return status


def cmd_experiment(args) -> int:
    spec, run = load_config(args.config)
    cfg = ExperimentConfig(
        spec=spec,
        n=max(1, _gens(args, run)),
        replications=_setting(args, run, "reps", required=True),
        base_seed=_setting(args, run, "seed", required=True),
        workers=_setting(args, run, "workers", default=1),
        limit_samples=_setting(args, run, "samples", default=10**6),
        check_hypotheses=not args.no_hypothesis_check,
    )
    try:
        rep = run_experiment(cfg)
    except HypothesisFailure as exc:
        print(str(exc))
        return EXIT_FAIL
    io.write_report(args.outdir, rep)
    print(f"wrote report bundle for {cfg.replications} replications at n={cfg.n} to {args.outdir}")
    status = EXIT_OK
    if rep.normality is not None:
        crit = ks_critical(cfg.replications)
        for name in ESTIMATORS:
            for c, s in zip(COORDS[name], rep.normality[name]):
                ok = s.ks < crit
                status = status if ok else EXIT_FAIL
                print(f"{name}.{c:9s} skew {s.skewness:+.3f} exkurt {s.excess_kurtosis:+.3f} "
                      f"KS {s.ks:.4f} ({'<' if ok else '>='} {crit:.4f})")
    if rep.qsl_series is not None:
        print(f"QSL median at n={cfg.n}: {np.median(rep.qsl_series[:, -1]):.4g} "
              f"(trace {rep.qsl_target:.4g})")
    return status


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rcbar", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check the moment hypotheses of a config")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)

    s = sub.add_parser("simulate", help="simulate one tree and write it as CSV")
    s.add_argument("config")
    s.add_argument("--gens", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--replication", type=int, default=0)
    s.add_argument("--record-draws", action="store_true")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("estimate", help="WLS estimates on a tree")
    e.add_argument("--tree")
    e.add_argument("--config")
    e.add_argument("--gens", type=int)
    e.add_argument("--seed", type=int)
    e.add_argument("--n", help="generation K or range A:B (default: all)")
    e.add_argument("--out")
    e.set_defaults(func=cmd_estimate)

    lim = sub.add_parser("limits", help="moments of T and Monte Carlo limit matrices")
    lim.add_argument("config")
    lim.add_argument("--samples", type=int)
    lim.add_argument("--seed", type=int)
    lim.add_argument("--target-bias", type=float)
    lim.add_argument("--out")
    lim.set_defaults(func=cmd_limits)

    x = sub.add_parser("experiment", help="replicated estimation experiment")
    x.add_argument("config")
    x.add_argument("--gens", type=int)
    x.add_argument("--reps", type=int)
    x.add_argument("--seed", type=int)
    x.add_argument("--workers", type=int)
    x.add_argument("--samples", type=int, help="T samples for the limit matrices")
    x.add_argument("--no-hypothesis-check", action="store_true",
                   help="run even if the model violates the hypotheses")
    x.add_argument("--outdir", required=True)
    x.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError, io.TreeFormatError, OverflowError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
