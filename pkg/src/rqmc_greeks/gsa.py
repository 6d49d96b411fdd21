"""Pick-freeze Sobol' indices, average dimension and function-type labels."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .estimators import MC, QMC, RQMC, evaluate
from .greeks import greek_integrand  # noqa: F401  (re-exported: the GSA integrands)
from .lds import ScrambleSeed, owen_scramble, pseudo_uniforms, sobol_uniforms

# Thresholds that turn the qualitative function classes into labels.
TYPE_A_MAIN_SUM = 0.75
TYPE_A_MIN_RATIO = 0.5
TYPE_C_MAIN_SUM = 0.5
ACTIVE_SHARE = 0.5  # a variable is active when S_i^tot >= ACTIVE_SHARE * max_j S_j^tot


@dataclass
class GsaReport:
    dim: int
    main_raw: np.ndarray
    total: np.ndarray
    variance: float
    budget: int
    main_sum: float = float("nan")
    d_a: float = float("nan")
    fn_type: str | None = None
    degenerate: bool = False
    thresholds: dict = field(default_factory=lambda: {
        "type_a_main_sum": TYPE_A_MAIN_SUM, "type_a_min_ratio": TYPE_A_MIN_RATIO,
        "type_c_main_sum": TYPE_C_MAIN_SUM, "active_share": ACTIVE_SHARE})

    @property
    def main(self) -> np.ndarray:
        """Main-effect indices clipped at zero."""
        return np.clip(self.main_raw, 0.0, None)


def _pick_freeze_samples(dims: int, budget: int, sampler: str, seed: int):
    if sampler == QMC:
        m = sobol_uniforms(2 * dims, budget)
    elif sampler == RQMC:
        m = owen_scramble(2 * dims, budget, ScrambleSeed(seed, 1))
    elif sampler == MC:
        m = pseudo_uniforms(2 * dims, budget, seed)
    else:
        raise ValueError(f"unknown sampler {sampler!r}")
    u = m.values.T
    return np.ascontiguousarray(u[:, :dims]), np.ascontiguousarray(u[:, dims:])


def sobol_indices(g: Callable[[np.ndarray], np.ndarray], dims: int, budget: int = 1 << 18,
                  sampler: str = QMC, seed: int = 0) -> GsaReport:
    """Singleton main and total indices of ``g`` on ``[0,1]^dims``.

    Total effects use Sobol's squared-difference formula, main effects the
    Saltelli-type form ``mean(g(u) (g(u_i, w') - g(u')))``.  Both are applied
    to ``g`` centred by its pooled mean.
    """
    if budget < 2:
        raise ValueError("budget too small")
    a, b = _pick_freeze_samples(dims, budget, sampler, seed)
    fa = evaluate(g, a)
    fb = evaluate(g, b)
    pooled = np.concatenate([fa, fb])
    f0 = pooled.mean()
    var = float(pooled.var())
    main = np.full(dims, np.nan)
    total = np.full(dims, np.nan)
    if not var > 1e-300 * max(1.0, f0 * f0):
        report = GsaReport(dims, main, total, var, budget, degenerate=True)
        return report
    fa_c, fb_c = fa - f0, fb - f0
    for i in range(dims):
        ab = a.copy()
        ab[:, i] = b[:, i]
        total[i] = 0.5 * np.mean((fa - evaluate(g, ab)) ** 2) / var
        ba = b.copy()
        ba[:, i] = a[:, i]
        main[i] = np.mean(fa_c * (evaluate(g, ba) - f0 - fb_c)) / var
    report = GsaReport(dims, main, total, var, budget)
    report.main_sum = float(report.main.sum())
    report.d_a = average_dimension(report)
    report.fn_type = classify(report)
    return report


def average_dimension(report: GsaReport) -> float:
    """Sum of total-effect indices."""
    report.d_a = float(np.sum(report.total))
    return report.d_a


def classify(report: GsaReport) -> str | None:
    """Label A (few dominant variables, mostly main effects), B or C (interaction dominated).

    Type A asks for main effects to carry the bulk of the variance and for each
    of the dominant variables to act mostly on its own.
    """
    if report.degenerate:
        return None
    main_sum = float(report.main.sum())
    if main_sum <= TYPE_C_MAIN_SUM:
        return "C"
    active = report.total >= ACTIVE_SHARE * report.total.max()
    ratios = report.main[active] / report.total[active]
    if main_sum >= TYPE_A_MAIN_SUM and ratios.min() >= TYPE_A_MIN_RATIO:
        return "A"
    return "B"
