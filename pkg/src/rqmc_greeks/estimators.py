"""MC and RQMC estimators with replicate-level error bars.

An :class:`Estimate` keeps the values its error bar is computed from
(``per_replicate_values``): the K replicate means for RQMC, or the N path
values for plain MC, where every path is its own replicate of size one.  Linear
combinations of estimates built on common random numbers are formed on those
values, so FD and Chebyshev Greeks inherit a correct error bar.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .lds import SampleMatrix, ScrambleSeed, owen_scramble, pseudo_uniforms, sobol_uniforms

Integrand = Callable[[np.ndarray], np.ndarray]

MC = "mc"
RQMC = "rqmc"
QMC = "qmc"
DEFAULT_REPLICATES = 16
CHUNK = 1 << 15


@dataclass(frozen=True)
class Estimate:
    value: float
    std_error: float
    n_per_replicate: int
    replicates: int
    per_replicate_values: np.ndarray = field(repr=False)

    @property
    def budget(self) -> int:
        return self.n_per_replicate * self.replicates


def _from_units(units: np.ndarray, n: int, k: int) -> Estimate:
    units = np.asarray(units, dtype=np.float64)
    m = units.size
    if m and np.all(units == units[0]):
        return Estimate(float(units[0]), 0.0, n, k, units)
    se = float(np.std(units, ddof=1) / np.sqrt(m)) if m > 1 else float("nan")
    return Estimate(float(np.mean(units)), se, n, k, units)


def combine(estimates: Sequence[Estimate], weights: Sequence[float]) -> Estimate:
    """Weighted sum of CRN estimates, error taken from the combined replicates."""
    if len(estimates) != len(weights):
        raise ValueError("estimates and weights differ in length")
    first = estimates[0]
    for e in estimates[1:]:
        if e.per_replicate_values.shape != first.per_replicate_values.shape:
            raise ValueError("estimates were not produced on the same samples")
    units = sum(w * e.per_replicate_values for w, e in zip(weights, estimates))
    return _from_units(units, first.n_per_replicate, first.replicates)


def evaluate(fn: Integrand, u: np.ndarray, chunk: int = CHUNK) -> np.ndarray:
    """Evaluate ``fn`` on points laid out as rows of ``u`` in fixed-size chunks."""
    if u.shape[0] <= chunk:
        return np.asarray(fn(u), dtype=np.float64)
    return np.concatenate([np.asarray(fn(u[i : i + chunk]), dtype=np.float64)
                           for i in range(0, u.shape[0], chunk)])


@dataclass(frozen=True)
class Sampler:
    """Where uniforms come from: MT19937 (mc), scrambled Sobol' (rqmc) or plain Sobol' (qmc)."""

    kind: str = RQMC
    seed: int = 0
    replicates: int = DEFAULT_REPLICATES

    def __post_init__(self):
        if self.kind not in (MC, RQMC, QMC):
            raise ValueError(f"unknown sampler {self.kind!r}")
        if self.kind == RQMC and self.replicates < 2:
            raise ValueError("RQMC needs at least 2 scrambles for an error bar")

    def layout(self, budget: int) -> tuple[int, int]:
        """Split a total budget N into (n per replicate, K)."""
        if self.kind != RQMC:
            return budget, 1
        n, rem = divmod(budget, self.replicates)
        if rem or n < 1 or n & (n - 1):
            raise ValueError(f"N={budget} must equal n*K with n a power of two (K={self.replicates})")
        return n, self.replicates

    def draw(self, dims: int, count: int, replicate: int) -> SampleMatrix:
        if self.kind == MC:
            return pseudo_uniforms(dims, count, self.seed)
        if self.kind == QMC:
            return sobol_uniforms(dims, count)
        return owen_scramble(dims, count, ScrambleSeed(self.seed, replicate))


def batched_estimate(fns: Sequence[Integrand], dims: int, budget: int, sampler: Sampler) -> list[Estimate]:
    """Evaluate every integrand on the same sample matrices (common random numbers)."""
    n, k = sampler.layout(budget)
    if sampler.kind == MC and budget < 2:
        raise ValueError("MC needs N >= 2")
    units: list[list] = [[] for _ in fns]
    for rep in range(1, k + 1):
        m = sampler.draw(dims, n, rep)
        if m.dims != dims:
            raise ValueError("sample dimensionality does not match integrand")
        u = m.values.T
        for i, fn in enumerate(fns):
            vals = evaluate(fn, u)
            if sampler.kind == RQMC:
                units[i].append(np.mean(vals))
            else:
                units[i].append(vals)
    if sampler.kind == RQMC:
        return [_from_units(np.array(us), n, k) for us in units]
    return [_from_units(us[0], n, 1) for us in units]


def mc_estimate(fn: Integrand, dims: int, budget: int, seed: int) -> Estimate:
    return batched_estimate([fn], dims, budget, Sampler(MC, seed))[0]


def rqmc_estimate(fn: Integrand, dims: int, n: int, replicates: int, seed: int) -> Estimate:
    if replicates < 2:
        raise ValueError("RQMC needs K >= 2")
    return batched_estimate([fn], dims, n * replicates, Sampler(RQMC, seed, replicates))[0]


def estimate(fn: Integrand, dims: int, budget: int, sampler: Sampler) -> Estimate:
    return batched_estimate([fn], dims, budget, sampler)[0]
