"""Discounted payoffs of the arithmetic Asian call and the discrete down-and-out call."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .paths import BBD, EULER, AssetPath, MarketSpec, WienerPath, bridge_plan, gbm_path, inverse_normal_cdf

ASIAN = "asian_call"
DOWN_OUT = "down_out_call"
INSTRUMENTS = (ASIAN, DOWN_OUT)


@dataclass(frozen=True)
class PayoffResult:
    value: np.ndarray
    likelihood: np.ndarray
    alive: np.ndarray


def _discount(spec: MarketSpec) -> float:
    return np.exp(-spec.r * spec.T)


def asian_call(path: AssetPath, spec: MarketSpec) -> PayoffResult:
    avg = path.spot.mean(axis=-1)
    value = _discount(spec) * np.maximum(avg - spec.K, 0.0)
    return PayoffResult(value, np.ones_like(value), np.ones(value.shape, dtype=bool))


def down_out_call(path: AssetPath, spec: MarketSpec) -> PayoffResult:
    if spec.B is None:
        raise ValueError("down_out_call requires a barrier B")
    alive = path.spot.min(axis=-1) > spec.B
    value = np.where(alive, _discount(spec) * np.maximum(path.spot[..., -1] - spec.K, 0.0), 0.0)
    return PayoffResult(value, np.ones_like(value), alive)


def payoff(instrument: str, path: AssetPath, spec: MarketSpec) -> PayoffResult:
    if instrument == ASIAN:
        return asian_call(path, spec)
    if instrument == DOWN_OUT:
        return down_out_call(path, spec)
    raise ValueError(f"unknown instrument {instrument!r}")


def is_barrier_path(uniforms, spec: MarketSpec, scheme: str = EULER) -> tuple[AssetPath, PayoffResult]:
    """Importance-sampled down-and-out path: every node is drawn above its threshold.

    Nodes are generated one at a time from their Gaussian conditional law,
    truncated to ``S > B`` (``S > K`` at maturity) by the one-sided map
    ``U = (1 - p) + p * u``; the likelihood is the product of the survival
    probabilities ``p``.  Under ``"euler"`` nodes come in time order, each
    conditioned on its predecessor.  Under ``"bbd"`` they come in
    Brownian-bridge order: maturity first, then bridge midpoints conditioned
    on their two neighbours.
    """
    if spec.B is None:
        raise ValueError("importance sampling requires a barrier B")
    if spec.B >= spec.K:
        raise ValueError("importance sampling requires B < K")
    u = np.asarray(uniforms, dtype=np.float64)
    if np.any(~((u > 0) & (u < 1))):
        raise ValueError("uniforms must lie strictly inside (0, 1)")
    if u.shape[-1] != spec.steps:
        raise ValueError(f"expected {spec.steps} uniforms per path, got {u.shape[-1]}")

    D = spec.steps
    t = np.concatenate(([0.0], spec.times))
    levels = np.full(D + 1, spec.B)
    levels[D] = spec.K
    # survival region of node j in Wiener units: W_j > c_j
    c = (np.log(levels / spec.S0) - spec.mu * t) / spec.sigma
    if scheme == EULER:
        plan = [(j, j - 1, -1) for j in range(1, D + 1)]
    elif scheme == BBD:
        plan = bridge_plan(D)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")

    w = np.zeros(u.shape[:-1] + (D + 1,))
    log_l = np.zeros(u.shape[:-1])
    for col, (j, i, k) in enumerate(plan):
        if k < 0:
            mean = w[..., i]
            sd = np.sqrt(t[j] - t[i])
        else:
            span = t[k] - t[i]
            mean = ((t[k] - t[j]) * w[..., i] + (t[j] - t[i]) * w[..., k]) / span
            sd = np.sqrt((t[k] - t[j]) * (t[j] - t[i]) / span)
        p = ndtr((mean - c[j]) / sd)
        # 1 - U = p * (1 - u): take the quantile from the lower tail
        w[..., j] = mean - sd * inverse_normal_cdf(p * (1.0 - u[..., col]))
        log_l = log_l + np.log(p)
    w = w[..., 1:]
    likelihood = np.exp(log_l)
    path = gbm_path(WienerPath(spec.times, w, scheme), spec)
    value = _discount(spec) * (path.spot[..., -1] - spec.K) * likelihood
    return path, PayoffResult(value, likelihood, np.ones(value.shape, dtype=bool))
