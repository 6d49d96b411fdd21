"""Normal variates, Wiener paths (Euler / Brownian bridge) and Black-Scholes spots.

Arrays put time on the last axis, so a single path is ``(D,)`` and a batch is
``(N, D)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import ndtr

EULER = "euler"
BBD = "bbd"
SCHEMES = (EULER, BBD)


@dataclass(frozen=True)
class MarketSpec:
    """Contract and model parameters for one instrument."""

    S0: float = 100.0
    r: float = 0.03
    sigma: float = 0.30
    T: float = 0.25
    steps: int = 32
    K: float = 100.0
    B: float | None = None

    def __post_init__(self):
        if not (self.S0 > 0 and self.sigma > 0 and self.T > 0 and self.K > 0):
            raise ValueError("S0, sigma, T and K must be positive")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.B is not None and not (0 < self.B < self.S0):
            raise ValueError(f"barrier must satisfy 0 < B < S0, got B={self.B}")

    @property
    def dt(self) -> float:
        return self.T / self.steps

    @property
    def mu(self) -> float:
        return self.r - 0.5 * self.sigma**2

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(1, self.steps + 1)


@dataclass(frozen=True)
class WienerPath:
    times: np.ndarray
    values: np.ndarray
    scheme: str


@dataclass(frozen=True)
class AssetPath:
    spot: np.ndarray
    w: np.ndarray
    x1: np.ndarray  # W(t_1) / sqrt(t_1)
    shifted_spot: np.ndarray | None = None


# Acklam's rational approximation of the normal quantile.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def inverse_normal_cdf(u):
    """Standard normal quantile; Acklam's approximation plus one Halley step."""
    u = np.asarray(u, dtype=np.float64)
    if np.any(~((u > 0) & (u < 1))):
        raise ValueError("inverse_normal_cdf requires 0 < u < 1")
    if u.ndim == 0:
        return inverse_normal_cdf(u.reshape(1))[0]
    q = np.minimum(u, 1.0 - u)
    s = q - 0.5
    r = s * s
    x = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * s / (
        ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
    )
    tail = q < _P_LOW
    if tail.any():
        t = np.sqrt(-2.0 * np.log(q[tail]))
        x[tail] = (((((_C[0] * t + _C[1]) * t + _C[2]) * t + _C[3]) * t + _C[4]) * t + _C[5]) / (
            (((_D[0] * t + _D[1]) * t + _D[2]) * t + _D[3]) * t + 1.0
        )
    # x is the quantile of q <= 1/2; refining on that side keeps the
    # residual q - N(x) free of cancellation.
    e = ndtr(x) - q
    d = e * np.sqrt(2 * np.pi) * np.exp(0.5 * x * x)
    x -= d / (1.0 + 0.5 * x * d)
    return np.where(u > 0.5, -x, x)


def _check_normals(normals: np.ndarray, spec: MarketSpec) -> np.ndarray:
    normals = np.asarray(normals, dtype=np.float64)
    if normals.shape[-1] != spec.steps:
        raise ValueError(f"expected {spec.steps} normals per path, got {normals.shape[-1]}")
    return normals


def euler_wiener(normals, spec: MarketSpec) -> WienerPath:
    z = _check_normals(normals, spec)
    return WienerPath(spec.times, np.sqrt(spec.dt) * np.cumsum(z, axis=-1), EULER)


@lru_cache(maxsize=64)
def bridge_plan(steps: int) -> tuple[tuple[int, int, int], ...]:
    """Visiting order ``(j, left, right)`` over node indices 0..steps.

    Node 0 is the origin.  The first entry places the terminal node; later
    ones bisect the widest open interval, earlier interval on ties.
    """
    plan = [(steps, 0, -1)]
    intervals = [(0, steps)]
    while intervals:
        width = max(b - a for a, b in intervals)
        if width < 2:
            break
        pos = next(i for i, (a, b) in enumerate(intervals) if b - a == width)
        a, b = intervals.pop(pos)
        j = (a + b) // 2
        plan.append((j, a, b))
        intervals[pos:pos] = [(a, j), (j, b)]
    return tuple(plan)


def brownian_bridge_wiener(normals, spec: MarketSpec) -> WienerPath:
    z = np.moveaxis(_check_normals(normals, spec), -1, 0)
    t = np.concatenate(([0.0], spec.times))
    w = np.zeros((spec.steps + 1,) + z.shape[1:])
    for l, (j, i, k) in enumerate(bridge_plan(spec.steps)):
        if k < 0:
            w[j] = np.sqrt(t[j]) * z[l]
            continue
        span = t[k] - t[i]
        w[j] = ((t[k] - t[j]) / span) * w[i] + ((t[j] - t[i]) / span) * w[k] + np.sqrt(
            (t[k] - t[j]) * (t[j] - t[i]) / span
        ) * z[l]
    return WienerPath(spec.times, np.ascontiguousarray(np.moveaxis(w[1:], 0, -1)), BBD)


def wiener(normals, spec: MarketSpec, scheme: str) -> WienerPath:
    if scheme == EULER:
        return euler_wiener(normals, spec)
    if scheme == BBD:
        return brownian_bridge_wiener(normals, spec)
    raise ValueError(f"unknown scheme {scheme!r}")


def wiener_matrix(spec: MarketSpec, scheme: str) -> np.ndarray:
    """Matrix A with W = A @ xi."""
    return wiener(np.eye(spec.steps), spec, scheme).values.T


def gbm_path(w: WienerPath, spec: MarketSpec) -> AssetPath:
    """S_j = S0 exp(mu t_j + sigma W_j)."""
    spot = spec.S0 * np.exp(spec.mu * w.times + spec.sigma * w.values)
    x1 = w.values[..., 0] / np.sqrt(w.times[0])
    return AssetPath(spot, w.values, x1)


def cpw_shifted_path(path: AssetPath, spec: MarketSpec) -> AssetPath:
    """Attach S~_j = S_j exp(-mu t_1 - sigma sqrt(t_1) X_1), free of the first variable."""
    if path.x1 is None:
        raise ValueError("path carries no first variable x1")
    t1 = spec.dt
    factor = np.exp(-spec.mu * t1 - spec.sigma * np.sqrt(t1) * path.x1)
    return AssetPath(path.spot, path.w, path.x1, path.spot * factor[..., None])


def uniforms_to_path(u: np.ndarray, spec: MarketSpec, scheme: str) -> AssetPath:
    """Map uniforms of shape ``(..., D)`` to asset paths."""
    return gbm_path(wiener(inverse_normal_cdf(u), spec, scheme), spec)
