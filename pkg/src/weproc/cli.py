"""Command-line entry point: one subcommand per verification pipeline.

Every run reads a JSON config (seeds mandatory), writes a JSON report and,
for tabular output, CSV files.  Exit codes: 0 pass/ok, 1 statistical fail,
2 usage or config error, 3 numerical error (divergence, factorization).
Identical config and seed produce byte-identical reports apart from the
isolated "timing" key, for any --workers value.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import config as cfg
from .bounds import fit_constant, scan_bound
from .errors import (ConfigError, DivergenceError, FactorizationError,
                     QuadratureBudgetError, WeprocError)
from .limit import build_increment_matrix, build_matrix, sample_limit_paths
from .process import simulate
from .seeding import stream
from .verify import (chernoff_lower, chernoff_upper, compare_cov, gamma_estimate,
                     gamma_sweep, mc_covariance, poisson_tail_lower, poisson_tail_upper,
                     random_instance, tightness_probe)

_EXIT_PASS = 0
_EXIT_STAT_FAIL = 1
_EXIT_USAGE = 2
_EXIT_NUMERICAL = 3


def _jsonable(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _write_csv(path: Path, header, rows):
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])


def _interval_json(iv):
    return None if iv is None else {"lower": iv.lower, "upper": iv.upper}


# ----- command handlers -----------------------------------------------------


def _cmd_simulate(conf, out, workers):
    cfg._require(conf, "config", {"distribution": True, "weight": True, "n": True,
                                  "mode": False, "seed": True})
    d = cfg.parse_distribution(conf["distribution"])
    f = cfg.parse_weight(conf["weight"])
    n = cfg.positive_int(conf["n"], "n")
    mode = conf.get("mode", "fixed")
    if mode not in ("fixed", "poisson"):
        raise ConfigError("mode: expected 'fixed' or 'poisson'")
    seed = cfg.require_seed(conf)
    path = simulate(d, f, n, mode=mode, seed_or_rng=stream(seed))
    _write_csv(out / "path.csv", ["x_sorted", "f_value", "prefix_sum"],
               [(float(x), float(fv), float(p)) for x, fv, p in
                zip(path.values, path.fvals, path.prefix[1:])])
    metrics = {"n": n, "points": path.size, "mode": mode,
               "weighted_mean_at_1": path.z_value(1.0)}
    return "ok", metrics, ["path.csv"]


def _cmd_limit_cov(conf, out, workers):
    cfg._require(conf, "config", {"distribution": True, "weight": True,
                                  "grid": True, "seed": True})
    d = cfg.parse_distribution(conf["distribution"])
    f = cfg.parse_weight(conf["weight"])
    grid = cfg.grid_list(conf["grid"], "grid")
    cfg.require_seed(conf)
    model = build_matrix(d, f, grid)
    _write_csv(out / "sigma.csv", [f"s={g:g}" for g in grid],
               [tuple(float(v) for v in row) for row in model.matrix])
    metrics = {"grid": grid, "matrix": _jsonable(model.matrix),
               "jitter": model.jitter,
               "diagonal": _jsonable(np.diag(model.matrix))}
    return "ok", metrics, ["sigma.csv"]


def _cmd_limit_sample(conf, out, workers):
    cfg._require(conf, "config", {"distribution": True, "weight": True, "grid": True,
                                  "count": True, "seed": True})
    d = cfg.parse_distribution(conf["distribution"])
    f = cfg.parse_weight(conf["weight"])
    grid = cfg.grid_list(conf["grid"], "grid")
    count = cfg.positive_int(conf["count"], "count")
    seed = cfg.require_seed(conf)
    model = build_matrix(d, f, grid)
    draws = sample_limit_paths(model, count, stream(seed))
    _write_csv(out / "samples.csv", [f"y_at_{g:g}" for g in grid],
               [tuple(float(v) for v in row) for row in draws])
    metrics = {"count": count, "grid": grid, "jitter": model.jitter,
               "sample_variance": _jsonable(draws.var(axis=0, ddof=1))}
    return "ok", metrics, ["samples.csv"]


def _cmd_cov_test(conf, out, workers):
    cfg._require(conf, "config", {"distribution": True, "weight": True, "n": True,
                                  "reps": True, "grid": True, "mode": False,
                                  "seed": True, "z_threshold": False})
    d = cfg.parse_distribution(conf["distribution"])
    f = cfg.parse_weight(conf["weight"])
    n = cfg.positive_int(conf["n"], "n")
    reps = cfg.positive_int(conf["reps"], "reps", minimum=100)
    grid = cfg.grid_list(conf["grid"], "grid")
    mode = conf.get("mode", "fixed")
    seed = cfg.require_seed(conf)
    threshold = float(conf.get("z_threshold", 4.0))
    model = build_matrix(d, f, grid)
    est = mc_covariance(d, f, n, reps, grid, mode=mode, seed=seed, workers=workers)
    comparison = compare_cov(est, model, threshold=threshold)
    _write_csv(out / "cov-test.csv", ["i", "j", "empirical", "theoretical", "se", "z"],
               [(i, j, float(est.matrix[i, j]), float(model.matrix[i, j]),
                 float(est.se[i, j]), float(comparison.z[i, j]))
                for i in range(len(grid)) for j in range(len(grid))])
    metrics = {"max_abs_z": comparison.max_abs_z, "threshold": threshold,
               "empirical": _jsonable(est.matrix), "theoretical": _jsonable(model.matrix),
               "se": _jsonable(est.se), "n": n, "reps": reps, "mode": mode}
    return ("pass" if comparison.passed else "fail"), metrics, ["cov-test.csv"]


def _cmd_fdd_test(conf, out, workers):
    cfg._require(conf, "config", {"distribution": False, "weight": False, "grid": False,
                                  "instances": False, "seed": True, "tolerance": False})
    seed = cfg.require_seed(conf)
    tol = float(conf.get("tolerance", 1e-10))
    triples = []
    if "distribution" in conf:
        if "weight" not in conf or "grid" not in conf:
            raise ConfigError("weight/grid: required together with distribution")
        triples.append((cfg.parse_distribution(conf["distribution"]),
                        cfg.parse_weight(conf["weight"]),
                        cfg.grid_list(conf["grid"], "grid")))
    else:
        count = cfg.positive_int(conf.get("instances", 100), "instances")
        rng = stream(seed)
        triples = [random_instance(rng) for _ in range(count)]
    worst = 0.0
    for d, f, grid in triples:
        direct = build_matrix(d, f, grid).matrix
        cumulative = build_increment_matrix(d, f, grid).cumulative()
        worst = max(worst, float(np.max(np.abs(direct - cumulative))))
    metrics = {"instances": len(triples), "max_abs_diff": worst, "tolerance": tol}
    return ("pass" if worst <= tol else "fail"), metrics, []


def _cmd_hyp_check(conf, out, workers):
    cfg._require(conf, "config", {"distribution": True, "weight": True, "bound": False,
                                  "fit": False, "depth": True, "seed": True})
    d = cfg.parse_distribution(conf["distribution"])
    f = cfg.parse_weight(conf["weight"])
    depth = cfg.positive_int(conf["depth"], "depth")
    cfg.require_seed(conf)
    if ("bound" in conf) == ("fit" in conf):
        raise ConfigError("bound/fit: provide exactly one of them")
    if "bound" in conf:
        h = cfg.parse_bound(conf["bound"])
        report = scan_bound(d, f, h, depth)
        metrics = {
            "verdict": report.verdict,
            "worst_ratio": report.worst_ratio,
            "worst_interval": _interval_json(report.worst_interval),
            "divergent_interval": _interval_json(report.divergent_interval),
            "per_depth_worst": list(report.per_depth_worst),
            "limit_zero": {"passed": report.limit_zero.passed,
                           "values": list(report.limit_zero.values)},
            "ratio_bounded": {"passed": report.ratio_bounded.passed,
                              "sup": max(report.ratio_bounded.values, default=None),
                              "values": list(report.ratio_bounded.values)},
        }
        return report.verdict, metrics, []
    fit_conf = conf["fit"]
    cfg._require(fit_conf, "fit", {"shape": True, "exponent": False})
    shape = fit_conf["shape"]
    exponent = float(fit_conf.get("exponent", 0.5))
    result = fit_constant(d, f, shape, depth, exponent=exponent)
    metrics = {
        "certifiable": result.certifiable,
        "constant": result.constant,
        "per_depth_worst": list(result.per_depth_worst),
        "divergent_interval": _interval_json(result.divergent_interval),
        "shape": shape,
    }
    return ("pass" if result.certifiable else "not-certifiable"), metrics, []


def _cmd_tightness(conf, out, workers):
    cfg._require(conf, "config", {"distribution": True, "weight": True, "n": True,
                                  "deltas": True, "epsilon": True, "reps": True,
                                  "seed": True})
    d = cfg.parse_distribution(conf["distribution"])
    f = cfg.parse_weight(conf["weight"])
    n = cfg.positive_int(conf["n"], "n")
    reps = cfg.positive_int(conf["reps"], "reps")
    deltas = cfg._number_list(conf["deltas"], "deltas")
    epsilon = cfg._number(conf["epsilon"], "epsilon")
    seed = cfg.require_seed(conf)
    table = tightness_probe(d, f, [n], deltas, epsilon, reps, seed=seed, workers=workers)
    _write_csv(out / "tightness.csv", ["n", "delta", "exceed_prob", "se", "replicates"],
               [(c.n, c.delta, c.exceed_prob, c.se, c.replicates) for c in table.cells])
    monotone = table.monotone_in_delta()
    metrics = {"epsilon": epsilon,
               "cells": [{"n": c.n, "delta": c.delta, "exceed_prob": c.exceed_prob,
                          "se": c.se} for c in table.cells],
               "monotone_in_delta": monotone}
    return ("pass" if monotone else "fail"), metrics, ["tightness.csv"]


def _cmd_poisson_tools(conf, out, workers):
    cfg._require(conf, "config", {"b_values": False, "steps": False,
                                  "gamma_ns": False, "seed": True})
    cfg.require_seed(conf)
    b_values = conf.get("b_values", [1.0, 10.0, 100.0])
    steps = cfg.positive_int(conf.get("steps", 20), "steps")
    gamma_ns = conf.get("gamma_ns", [1, 10, 100, 1000, 10000])
    rows = []
    violations = 0
    for b in b_values:
        b = float(b)
        for k in range(steps + 1):
            x = b + k * (10.0 * (b ** 0.5)) / steps
            bound = chernoff_upper(b, x)
            exact = poisson_tail_upper(b, x)
            rows.append((b, x, "upper", bound, exact))
            violations += bound < exact
            x_lo = b - k * b / steps
            bound = chernoff_lower(b, x_lo)
            exact = poisson_tail_lower(b, x_lo)
            rows.append((b, x_lo, "lower", bound, exact))
            violations += bound < exact
    _write_csv(out / "chernoff.csv", ["b", "x", "side", "bound", "exact_tail"], rows)
    gammas = {int(n): float(gamma_estimate(int(n))) for n in gamma_ns}
    sweep_max = float(np.max(gamma_sweep(np.arange(1, 10001))))
    metrics = {"violations": int(violations), "gamma": gammas,
               "gamma_sweep_max": sweep_max}
    verdict = "pass" if violations == 0 and sweep_max <= 1.7 else "fail"
    return verdict, metrics, ["chernoff.csv"]


_COMMANDS = {
    "simulate": _cmd_simulate,
    "limit-cov": _cmd_limit_cov,
    "limit-sample": _cmd_limit_sample,
    "cov-test": _cmd_cov_test,
    "fdd-test": _cmd_fdd_test,
    "hyp-check": _cmd_hyp_check,
    "tightness": _cmd_tightness,
    "poisson-tools": _cmd_poisson_tools,
}


def _build_parser():
    parser = argparse.ArgumentParser(prog="weproc",
                                     description="Weighted empirical process toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--dry-run", action="store_true",
                       help="print the resolved plan without computing")
        if name == "simulate":
            p.add_argument("--n", type=int, default=None, help="override sample size")
            p.add_argument("--mode", choices=["fixed", "poisson"], default=None)
    return parser


def run(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    started = time.time()
    try:
        conf = json.loads(Path(args.config).read_text())
    except FileNotFoundError:
        print(f"config error: file not found: {args.config}", file=sys.stderr)
        return _EXIT_USAGE
    except json.JSONDecodeError as exc:
        print(f"config error: invalid JSON: {exc}", file=sys.stderr)
        return _EXIT_USAGE
    if not isinstance(conf, dict):
        print("config error: top level must be an object", file=sys.stderr)
        return _EXIT_USAGE
    if args.seed is not None:
        conf["seed"] = args.seed
    if args.command == "simulate":
        if args.n is not None:
            conf["n"] = args.n
        if args.mode is not None:
            conf["mode"] = args.mode
    out = Path(args.out)
    if args.dry_run:
        plan = {"command": args.command, "config": conf, "workers": args.workers,
                "out": str(out), "would_write": [f"{args.command}-report.json"]}
        print(json.dumps(plan, sort_keys=True, indent=2))
        return _EXIT_PASS
    out.mkdir(parents=True, exist_ok=True)
    try:
        verdict, metrics, artifacts = _COMMANDS[args.command](conf, out, args.workers)
    except ConfigError as exc:
        print(f"config error [{args.command}]: {exc}", file=sys.stderr)
        return _EXIT_USAGE
    except (DivergenceError, QuadratureBudgetError, FactorizationError) as exc:
        print(f"numerical error [{args.command}]: {exc}", file=sys.stderr)
        return _EXIT_NUMERICAL
    except WeprocError as exc:
        print(f"error [{args.command}]: {exc}", file=sys.stderr)
        return _EXIT_USAGE
    metrics = dict(metrics)
    metrics["artifacts"] = artifacts
    report = {
        "command": args.command,
        "config": _jsonable(conf),
        "verdict": verdict,
        "metrics": _jsonable(metrics),
        "timing": {
            "seconds": time.time() - started,
            "finished_utc": datetime.datetime.now(datetime.timezone.utc)
                .isoformat(timespec="seconds"),
        },
    }
    (out / f"{args.command}-report.json").write_text(
        json.dumps(report, sort_keys=True, indent=2) + "\n")
    print(f"{args.command}: {verdict}")
    return _EXIT_PASS if verdict in ("pass", "ok") else _EXIT_STAT_FAIL


def main() -> None:
    sys.exit(run())
