"""Command line entry point: ``rqmc-greeks <subcommand> [--config FILE] [...]``."""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import platform
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import ConfigError, RunConfig, apply, parse
from .estimators import QMC, Sampler, estimate
from .experiments import (Reference, bias_variance_sweep, config_integrand, convergence_study,
                          table_reproduction)
from .greeks import CI, FD
from .gsa import sobol_indices

SUBCOMMANDS = ("price", "greek", "gsa", "convergence", "bias-sweep", "reproduce-table")


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if value is None:
        return ""
    return str(value)


def _csv(header: list[str], rows: list[list], trailer: tuple[list[str], list] | None = None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows([[_fmt(v) for v in row] for row in rows])
    if trailer is not None:
        writer.writerow(trailer[0])
        writer.writerow([_fmt(v) for v in trailer[1]])
    return buf.getvalue()


def load_config(path: str | None, overrides: list[str], seed: int | None, budget: str | None) -> RunConfig:
    config = RunConfig()
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError("--config", str(exc)) from None
        config = parse(text, config)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(item, "override must look like key=value")
        key, value = item.split("=", 1)
        config = apply(config, key.strip(), value)
    if seed is not None:
        config = dataclasses.replace(config, master_seed=seed)
    if budget is not None:
        config = apply(config, "budgets", budget)
    return config.validate()


def _price_header() -> list[str]:
    return ["instrument", "scheme", "sampler", "N", "n", "K", "value", "std_error"]


def run_price(config: RunConfig) -> tuple[str, dict]:
    fn = config_integrand(dataclasses.replace(config, greek=None))
    est = estimate(fn, config.spec.steps, config.budget,
                   Sampler(config.sampler, config.master_seed, config.replicates))
    row = [config.instrument, config.scheme, config.sampler, est.budget, est.n_per_replicate,
           est.replicates, est.value, est.std_error, config.hash(), config.master_seed]
    return _csv(_price_header() + ["config_hash", "seed"], [row]), {"seeds": [config.master_seed]}


def run_greek(config: RunConfig) -> tuple[str, dict]:
    request = config.request()
    est = estimate(config_integrand(config), config.spec.steps, config.budget,
                   Sampler(config.sampler, config.master_seed, config.replicates))
    h = request.fd_shift if request.method == FD else request.ci_width if request.method == CI else None
    points = request.ci_points if request.method == CI else None
    row = [config.instrument, config.scheme, config.sampler, est.budget, est.n_per_replicate,
           est.replicates, est.value, est.std_error, request.name, request.method, h, points,
           config.hash(), config.master_seed]
    header = _price_header() + ["greek", "method", "h_or_width", "L", "config_hash", "seed"]
    return _csv(header, [row]), {"seeds": [config.master_seed]}


def run_gsa(config: RunConfig) -> tuple[str, dict]:
    report = sobol_indices(config_integrand(config), config.spec.steps, config.budget, QMC,
                           config.master_seed)
    if report.degenerate:
        raise FloatingPointError("integrand has zero variance; Sobol' indices are undefined")
    rows = [[i + 1, report.main_raw[i], report.total[i]] for i in range(report.dim)]
    trailer = (["main_sum", "d_A", "type"], [report.main_sum, report.d_a, report.fn_type])
    return _csv(["variable", "S_main", "S_total"], rows, trailer), {"seeds": [], "sampler": QMC}


def run_convergence(config: RunConfig) -> tuple[str, dict]:
    res = convergence_study(config)
    if res.failed:
        raise FloatingPointError(f"estimator failed after budgets {res.budgets}")
    rows = [[n, e, s] for n, e, s in zip(res.budgets, res.errors, res.seeds)]
    trailer = (["alpha", "intercept", "eps0"], [res.alpha, res.intercept, res.eps0])
    return _csv(["N", "error", "seed"], rows, trailer), {"seeds": res.seeds}


def run_bias_sweep(config: RunConfig) -> tuple[str, dict]:
    config = dataclasses.replace(config, method=CI)
    request = config.request()
    widths = config.widths or tuple(request.ci_width * f for f in (0.25, 0.5, 1.0, 1.5, 2.0))
    ref = Reference(config.instrument, config.spec, request.name, config.reference_budget,
                    config.master_seed)
    res = bias_variance_sweep(request, widths, ref, config.budget,
                              Sampler(config.sampler, config.master_seed + 1, config.replicates),
                              config.importance_sampling)
    rows = [list(r) for r in zip(res.widths, res.bias, res.bias_error, res.rqmc_error, res.total)]
    header = ["width", "bias", "bias_error", "rqmc_error", "total"]
    return _csv(header, rows), {"seeds": [config.master_seed, config.master_seed + 1]}


def run_reproduce_table(config: RunConfig) -> tuple[str, dict]:
    rows = table_reproduction(config.table, budget=config.budget, budgets=config.budgets,
                              seed=config.master_seed, replicates=config.replicates)
    header = list(rows[0]) if rows else ["table"]
    return _csv(header, [[r[k] for k in header] for r in rows]), {"seeds": [config.master_seed]}


RUNNERS = {"price": run_price, "greek": run_greek, "gsa": run_gsa, "convergence": run_convergence,
           "bias-sweep": run_bias_sweep, "reproduce-table": run_reproduce_table}


def metadata(subcommand: str, config: RunConfig, extra: dict) -> dict:
    return {
        "subcommand": subcommand,
        "config": {k: (list(v) if isinstance(v, tuple) else v) for k, v in dataclasses.asdict(config).items()},
        "config_hash": config.hash(),
        "master_seed": config.master_seed,
        **extra,
        "versions": {"rqmc_greeks": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rqmc-greeks", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key = value configuration file")
        p.add_argument("--out", help="output directory (default: config 'output')")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--budget", help="total budget N, e.g. 2^14 (replaces the budget list)")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, args.override, args.seed, args.budget)
        body, extra = RUNNERS[args.subcommand](config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    out = Path(args.out or config.output)
    out.mkdir(parents=True, exist_ok=True)
    stem = args.subcommand.replace("-", "_")
    (out / f"{stem}.csv").write_text(body)
    (out / f"{stem}.meta.json").write_text(json.dumps(metadata(args.subcommand, config, extra), indent=2))
    sys.stdout.write(body)
    return 0


if __name__ == "__main__":
    sys.exit(main())
