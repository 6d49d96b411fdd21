"""Convergence studies, CI width sweeps and table reproduction drivers."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Sequence

import numpy as np

from .config import RunConfig
from .estimators import QMC, RQMC, Estimate, Sampler, estimate
from .greeks import (CI, GREEKS, GreekRequest, bump, cpw_integrand, default_request, greek_integrand,
                     price_integrand, stencil)
from .gsa import GsaReport, sobol_indices
from .instruments import DOWN_OUT
from .paths import BBD, MarketSpec

PRICE_BUDGETS = tuple(2**p for p in range(10, 19))
GSA_BARRIER = 90.0


# --- convergence ------------------------------------------------------------

@dataclass
class ConvergenceResult:
    budgets: list[int]
    errors: list[float]
    alpha: float
    intercept: float
    eps0: float
    values: list[float] = field(default_factory=list)
    seeds: list[int] = field(default_factory=list)
    failed: bool = False


def fit_power_law(budgets: Sequence[float], errors: Sequence[float]) -> tuple[float, float]:
    """Least squares fit of log10(err) = intercept - alpha * log10(N)."""
    x = np.log10(np.asarray(budgets, dtype=np.float64))
    with np.errstate(divide="ignore", invalid="ignore"):
        y = np.log10(np.asarray(errors, dtype=np.float64))
    if x.size < 2 or not np.all(np.isfinite(y)):
        raise ValueError("need at least two positive, finite errors")
    slope, intercept = np.polyfit(x, y, 1)
    return float(-slope), float(intercept)


def budget_seeds(master_seed: int, count: int) -> list[int]:
    """Independent per-budget seeds, all derived from one master seed."""
    children = np.random.SeedSequence(master_seed).spawn(count)
    return [int(c.generate_state(1, np.uint64)[0]) for c in children]


def config_integrand(config: RunConfig) -> Callable[[np.ndarray], np.ndarray]:
    spec = config.spec
    if config.greek is None:
        return price_integrand(config.instrument, spec, config.scheme, config.importance_sampling)
    return greek_integrand(config.instrument, config.request(), spec, config.scheme,
                           config.importance_sampling)


def convergence_study(config: RunConfig) -> ConvergenceResult:
    """Run the configured estimator once per budget, each with its own seed, and fit the slope."""
    config.validate()
    if len(config.budgets) < 3:
        raise ValueError("a convergence study needs at least 3 budgets")
    fn = config_integrand(config)
    seeds = budget_seeds(config.master_seed, len(config.budgets))
    budgets, errors, values, used = [], [], [], []
    failed = False
    for n, seed in zip(config.budgets, seeds):
        try:
            est = estimate(fn, config.spec.steps, n, Sampler(config.sampler, seed, config.replicates))
        except (ValueError, FloatingPointError):
            failed = True
            break
        if not (np.isfinite(est.std_error) and est.std_error > 0):
            failed = True
            break
        budgets.append(n)
        errors.append(est.std_error)
        values.append(est.value)
        used.append(seed)
    if len(budgets) >= 2:
        alpha, intercept = fit_power_law(budgets, errors)
    else:
        alpha = intercept = float("nan")
    eps0 = errors[0] if errors else float("nan")
    return ConvergenceResult(budgets, errors, alpha, intercept, eps0, values, used, failed)


# --- CI width sweeps ---------------------------------------------------------

@dataclass(frozen=True)
class Reference:
    """Smooth per-path prices and the matching Greek, used to measure stencil bias."""

    instrument: str
    spec: MarketSpec
    greek: str
    budget: int = 1 << 20
    seed: int = 0
    scheme: str = BBD


@dataclass
class BiasVarianceResult:
    widths: list[float]
    bias: list[float]
    rqmc_error: list[float]
    total: list[float]
    bias_error: list[float] = field(default_factory=list)


def stencil_bias(instrument: str, request: GreekRequest, spec: MarketSpec, budget: int,
                 sampler: Sampler, scheme: str = BBD) -> Estimate:
    """Estimate of (stencil applied to the exact price) minus the exact Greek.

    The CPW conditional price is smooth in S0 and sigma with the same mean as
    the payoff, so applying the FD/CI weights to it path by path and
    subtracting the CPW Greek on the same samples isolates the
    differentiation bias.
    """
    nodes, weights = stencil(request, spec)
    prices = [cpw_integrand(instrument, "price", bump(spec, request.parameter, th), scheme) for th in nodes]
    greek = cpw_integrand(instrument, request.name, spec, scheme)

    def g(u):
        return sum(w * p(u) for w, p in zip(weights, prices)) - greek(u)
    return estimate(g, spec.steps, budget, sampler)


def bias_variance_sweep(request: GreekRequest, widths: Sequence[float], reference: Reference | None,
                        budget: int = 1 << 14, sampler: Sampler | None = None,
                        importance_sampling: bool = False) -> BiasVarianceResult:
    """Bias against the reference and RQMC error of the CI Greek for each width."""
    if reference is None:
        raise ValueError("a reference is required for the bias sweep")
    if request.method != CI:
        raise ValueError("the sweep varies the CI width; pass a CI request")
    if GREEKS[reference.greek] != (request.parameter, request.order):
        raise ValueError("reference Greek does not match the request")
    sampler = sampler or Sampler(RQMC, reference.seed + 1)
    ref_sampler = Sampler(RQMC, reference.seed)
    out = BiasVarianceResult([], [], [], [], [])
    for width in widths:
        req = GreekRequest(request.parameter, request.order, CI, ci_width=float(width),
                           ci_points=request.ci_points)
        b = stencil_bias(reference.instrument, req, reference.spec, reference.budget, ref_sampler,
                         reference.scheme)
        fn = greek_integrand(reference.instrument, req, reference.spec, BBD, importance_sampling)
        est = estimate(fn, reference.spec.steps, budget, sampler)
        bias = abs(b.value)
        out.widths.append(float(width))
        out.bias.append(bias)
        out.bias_error.append(b.std_error)
        out.rqmc_error.append(est.std_error)
        out.total.append(float(np.hypot(bias, est.std_error)))
    return out


# --- table reproduction -------------------------------------------------------

def reference_rows(which: str | None = None) -> list[dict]:
    path = resources.files("rqmc_greeks") / "data" / "reference_values.csv"
    with path.open() as fh:
        rows = list(csv.DictReader(fh))
    return [r for r in rows if which is None or r["table"] == which]


def _float(text: str) -> float:
    return float(text) if text not in ("", None) else float("nan")


def gsa_row(instrument: str, greek: str, scheme: str, method: str, importance_sampling: bool,
            budget: int = 1 << 16, spec: MarketSpec | None = None, sampler: str = QMC,
            seed: int = 0) -> GsaReport:
    if spec is None:
        spec = MarketSpec(B=GSA_BARRIER) if instrument == DOWN_OUT else MarketSpec()
    g = greek_integrand(instrument, default_request(instrument, greek, method, spec), spec, scheme,
                        importance_sampling)
    return sobol_indices(g, spec.steps, budget, sampler, seed)


def table_reproduction(which: str, budget: int | None = None, budgets: Sequence[int] | None = None,
                       seed: int = 0, replicates: int = 16) -> list[dict]:
    """Our estimates next to the published values, one dict per table row."""
    if which not in ("prices", "gsa_do", "gsa_asian"):
        raise ValueError(f"unknown table {which!r}")
    rows = reference_rows(which)
    out = []
    if which == "prices":
        keep = set(budgets) if budgets is not None else None
        for r in rows:
            n = int(r["N"])
            if keep is not None and n not in keep:
                continue
            inst = r["instrument"]
            spec = MarketSpec(B=GSA_BARRIER) if inst == DOWN_OUT else MarketSpec()
            sampler = Sampler(r["method"], seed, replicates)
            est = estimate(price_integrand(inst, spec, r["scheme"]), spec.steps, n, sampler)
            out.append({"instrument": inst, "scheme": r["scheme"], "sampler": r["method"], "N": n,
                        "n": est.n_per_replicate, "K": est.replicates, "value": est.value,
                        "std_error": est.std_error, "ref_value": _float(r["value"]),
                        "ref_error": _float(r["error"])})
        return out
    for r in rows:
        rep = gsa_row(r["instrument"], r["greek"], r["scheme"], r["method"], r["importance_sampling"] == "1",
                      budget or (1 << 16))
        out.append({"instrument": r["instrument"], "greek": r["greek"], "scheme": r["scheme"],
                    "method": r["method"], "importance_sampling": int(r["importance_sampling"]),
                    "N": rep.budget, "main_sum": rep.main_sum, "d_A": rep.d_a, "type": rep.fn_type,
                    "ref_main_sum": _float(r["main_sum"]), "ref_d_A": _float(r["d_a"]),
                    "ref_type": r["type"]})
    return out
