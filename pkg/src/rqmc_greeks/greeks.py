"""Greek estimators: central finite differences, Chebyshev differentiation
matrices and conditional pathwise (CPW) formulas."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtr

from .estimators import Estimate, combine
from .instruments import ASIAN, DOWN_OUT, is_barrier_path, payoff
from .paths import EULER, MarketSpec, gbm_path, inverse_normal_cdf, wiener

SPOT = "spot"
VOL = "vol"
FD = "fd"
CI = "ci"
CPW = "cpw"
METHODS = (FD, CI, CPW)

GREEKS = {
    "delta": (SPOT, 1),
    "gamma": (SPOT, 2),
    "vega": (VOL, 1),
    "vomma": (VOL, 2),
}


def _npdf(x):
    return np.exp(-0.5 * x * x) / np.sqrt(2 * np.pi)


@dataclass(frozen=True)
class GreekRequest:
    parameter: str
    order: int
    method: str
    fd_shift: float = 0.0
    ci_width: float = 0.0
    ci_points: int = 7

    def __post_init__(self):
        if self.parameter not in (SPOT, VOL):
            raise ValueError(f"unknown parameter {self.parameter!r}")
        if self.order not in (1, 2):
            raise ValueError("order must be 1 or 2")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == FD and not self.fd_shift > 0:
            raise ValueError("FD needs a positive shift")
        if self.method == CI:
            if not self.ci_width > 0:
                raise ValueError("CI needs a positive width")
            if self.ci_points < 3 or self.ci_points % 2 == 0:
                raise ValueError("CI needs an odd number of points >= 3 (centre must be a node)")

    @property
    def name(self) -> str:
        return next(k for k, v in GREEKS.items() if v == (self.parameter, self.order))


# Greek widths and shifts used for the default runs, as fractions of S0 or sigma
# unless marked absolute.
_DEFAULTS = {
    DOWN_OUT: {"delta": (0.05, 0.001), "gamma": (0.075, 0.001),
               "vega": (0.40, 0.0003), "vomma": (0.40, 0.0003)},
    ASIAN: {"delta": (0.10, None), "gamma": (0.10, None),
            "vega": (0.40, 0.0003), "vomma": (0.40, 0.0003)},
}
_ASIAN_SPOT_SHIFT = 0.1


def default_request(instrument: str, greek: str, method: str, spec: MarketSpec,
                    ci_points: int = 7) -> GreekRequest:
    parameter, order = GREEKS[greek]
    width_frac, shift_frac = _DEFAULTS[instrument][greek]
    base = spec.S0 if parameter == SPOT else spec.sigma
    shift = _ASIAN_SPOT_SHIFT if shift_frac is None else shift_frac * base
    return GreekRequest(parameter, order, method, fd_shift=shift,
                        ci_width=width_frac * base, ci_points=ci_points)


def bump(spec: MarketSpec, parameter: str, value: float) -> MarketSpec:
    return replace(spec, S0=value) if parameter == SPOT else replace(spec, sigma=value)


def parameter_value(spec: MarketSpec, parameter: str) -> float:
    return spec.S0 if parameter == SPOT else spec.sigma


# --- finite differences -----------------------------------------------------

def fd_first(v_plus: Estimate, v_minus: Estimate, h: float) -> Estimate:
    if not h > 0:
        raise ValueError("shift must be positive")
    return combine([v_plus, v_minus], [0.5 / h, -0.5 / h])


def fd_second(v_plus: Estimate, v_mid: Estimate, v_minus: Estimate, h: float) -> Estimate:
    if not h > 0:
        raise ValueError("shift must be positive")
    return combine([v_plus, v_mid, v_minus], [1 / h**2, -2 / h**2, 1 / h**2])


# --- Chebyshev interpolation ------------------------------------------------

def chebyshev_grid(center: float, width: float, points: int) -> np.ndarray:
    """Chebyshev-Gauss-Lobatto nodes on [center - width, center + width], ascending."""
    if points < 3:
        raise ValueError("need at least 3 points")
    if not width > 0:
        raise ValueError("width must be positive")
    x = center + width * np.cos(np.pi * np.arange(points) / (points - 1))[::-1]
    mid = (points - 1) / 2
    if points % 2:
        x[int(mid)] = center
    return x


def differentiation_matrix(grid: Sequence[float], m: int) -> np.ndarray:
    """Order-m differentiation matrix on arbitrary distinct nodes.

    Barycentric weights give D1; higher orders follow the Welfert recursion.
    Diagonals are set to minus the off-diagonal row sums.
    """
    x = np.asarray(grid, dtype=np.float64)
    L = x.size
    dx = x[:, None] - x[None, :]
    np.fill_diagonal(dx, 1.0)
    if np.any(dx == 0):
        raise ValueError("grid nodes must be distinct")
    w = 1.0 / np.prod(dx, axis=1)
    ratio = w[None, :] / w[:, None]
    d = np.eye(L)
    for k in range(1, m + 1):
        d = k * (ratio * np.diag(d)[:, None] - d) / dx
        np.fill_diagonal(d, 0.0)
        np.fill_diagonal(d, -d.sum(axis=1))
    return d


def ci_weights(grid: Sequence[float], m: int) -> np.ndarray:
    """Row of D^m at the centre node."""
    grid = np.asarray(grid)
    if grid.size % 2 == 0:
        raise ValueError("centre must be a grid node (odd number of points)")
    return differentiation_matrix(grid, m)[grid.size // 2]


def ci_greek(values: Sequence[Estimate], m: int, grid: Sequence[float]) -> Estimate:
    if len(values) != len(grid):
        raise ValueError("one estimate per grid node is required")
    return combine(values, ci_weights(grid, m))


def stencil(request: GreekRequest, spec: MarketSpec) -> tuple[np.ndarray, np.ndarray]:
    """Parameter nodes and linear weights for an FD or CI request."""
    theta = parameter_value(spec, request.parameter)
    if request.method == FD:
        h = request.fd_shift
        if request.order == 1:
            return np.array([theta + h, theta - h]), np.array([0.5 / h, -0.5 / h])
        return np.array([theta + h, theta, theta - h]), np.array([1.0, -2.0, 1.0]) / h**2
    if request.method == CI:
        if request.ci_width >= theta:
            raise ValueError("CI width must be smaller than the parameter value")
        grid = chebyshev_grid(theta, request.ci_width, request.ci_points)
        return grid, ci_weights(grid, request.order)
    raise ValueError("CPW has no stencil")


# --- conditional pathwise ---------------------------------------------------

@dataclass(frozen=True)
class CpwTerms:
    psi1: np.ndarray
    psi2: np.ndarray
    psi_d: np.ndarray
    psi_u: np.ndarray
    psi_d_star: np.ndarray
    s_tilde_d: np.ndarray
    s_tilde_min: np.ndarray
    x_tilde_d: np.ndarray
    x_tilde_min: np.ndarray  # d ln S~_min / d sigma at the minimising date
    t_min: np.ndarray


def _shifted(w: np.ndarray, spec: MarketSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """S~_j, d ln S~_j / d sigma, and t_j - t_1."""
    t = spec.times
    lag = t - t[0]
    dw = w - w[..., :1]
    s = spec.S0 * np.exp(spec.mu * lag + spec.sigma * dw)
    return s, dw - spec.sigma * lag, lag


def cpw_terms_do_call(w: np.ndarray, spec: MarketSpec) -> CpwTerms:
    if spec.B is None:
        raise ValueError("down-and-out CPW needs a barrier")
    s, x, lag = _shifted(w, spec)
    t1 = spec.dt
    a = spec.sigma * np.sqrt(t1)
    jmin = np.argmin(s, axis=-1)
    s_min = np.take_along_axis(s, jmin[..., None], -1)[..., 0]
    x_min = np.take_along_axis(x, jmin[..., None], -1)[..., 0]
    with np.errstate(divide="ignore"):
        psi1 = (np.log(spec.K / s[..., -1]) - spec.mu * t1) / a
        psi2 = (np.log(spec.B / s_min) - spec.mu * t1) / a
    psi_d = np.maximum(psi1, psi2)
    return CpwTerms(psi1, psi2, psi_d, np.full_like(psi_d, np.inf), psi_d - a,
                    s[..., -1], s_min, x[..., -1], x_min, spec.times[jmin])


def cpw_do_call_greeks(terms: CpwTerms, spec: MarketSpec) -> dict[str, np.ndarray]:
    S0, sig, K, T = spec.S0, spec.sigma, spec.K, spec.T
    t1 = spec.dt
    rt = np.sqrt(t1)
    a = sig * rt
    c1 = np.exp(spec.r * (t1 - T))
    c2 = np.exp(-spec.r * T)
    sd, xd = terms.s_tilde_d, terms.x_tilde_d
    psi, ps = terms.psi_d, terms.psi_d_star
    psi1, psi2 = terms.psi1, terms.psi2
    on_barrier = psi2 > psi1

    n_ps, n_psi = _npdf(ps), _npdf(psi)
    N_ps, N_psi = ndtr(-ps), ndtr(-psi)
    price = c1 * sd * N_ps - c2 * K * N_psi
    delta = c1 * sd / S0 * (N_ps + n_ps / a) - c2 * K * n_psi / (S0 * a)
    gamma = (c1 * sd * n_ps * psi - c2 * K * n_psi * ps) / (S0**2 * a**2)

    # sigma-derivatives of the two thresholds; numerators are psi * a
    def dpsi(psi_k, x_k, t_k):
        num = psi_k * a
        num_s = -x_k + sig * t1
        first = (num_s - psi_k * rt) / a
        second = t_k / a - 2 * num_s * rt / a**2 + 2 * num * t1 / a**3
        return first, second

    psi1_s, _ = dpsi(psi1, xd, T)
    psi2_s, psi2_ss = dpsi(psi2, terms.x_tilde_min, terms.t_min)
    psi2_s = np.where(np.isfinite(psi2), psi2_s, 0.0)
    psi2_ss = np.where(np.isfinite(psi2), psi2_ss, 0.0)
    ps2 = psi2 - a
    n2, n2s = _npdf(psi2), _npdf(ps2)
    gap = c2 * K * n2 - c1 * sd * n2s

    vega_a = c1 * sd * (xd * N_ps + n_ps * rt)
    vega_b = psi2_s * gap
    vega = vega_a + np.where(on_barrier, vega_b, 0.0)

    ps_s = np.where(on_barrier, psi2_s, psi1_s) - rt
    vomma_a = c1 * sd * (xd * (xd * N_ps + n_ps * rt) + (t1 - T) * N_ps
                         - n_ps * ps_s * (xd + ps * rt))
    ps2_s = psi2_s - rt
    vomma_b = psi2_ss * gap + psi2_s * (-c2 * K * n2 * psi2 * psi2_s
                                        - c1 * sd * n2s * (xd - ps2 * ps2_s))
    vomma = vomma_a + np.where(on_barrier, vomma_b, 0.0)
    return {"price": price, "delta": delta, "gamma": gamma, "vega": vega, "vomma": vomma}


def cpw_asian_call_greeks(w: np.ndarray, spec: MarketSpec) -> dict[str, np.ndarray]:
    S0, sig, K, T = spec.S0, spec.sigma, spec.K, spec.T
    t1 = spec.dt
    rt = np.sqrt(t1)
    a = sig * rt
    c1 = np.exp(spec.r * (t1 - T))
    c2 = np.exp(-spec.r * T)
    s, x, lag = _shifted(w, spec)
    sa = s.mean(axis=-1)
    sa_s = (s * x).mean(axis=-1)
    sa_ss = (s * (x * x - lag)).mean(axis=-1)
    with np.errstate(divide="ignore"):
        psi = (np.log(K / sa) - spec.mu * t1) / a
    ps = psi - a
    n_ps, n_psi = _npdf(ps), _npdf(psi)
    N_ps, N_psi = ndtr(-ps), ndtr(-psi)

    price = c1 * sa * N_ps - c2 * K * N_psi
    delta = c1 * sa / S0 * N_ps
    gamma = c2 * K * n_psi / (S0**2 * a)
    vega = c1 * N_ps * sa_s + c2 * K * n_psi * rt
    psi_s = (-sa_s / sa + sig * t1 - psi * rt) / a
    ps_s = psi_s - rt
    vomma = c1 * (-n_ps * ps_s * sa_s + N_ps * sa_ss) - c2 * K * psi * n_psi * psi_s * rt
    return {"price": price, "delta": delta, "gamma": gamma, "vega": vega, "vomma": vomma}


def cpw_greeks(instrument: str, w: np.ndarray, spec: MarketSpec) -> dict[str, np.ndarray]:
    if instrument == ASIAN:
        return cpw_asian_call_greeks(w, spec)
    if instrument == DOWN_OUT:
        return cpw_do_call_greeks(cpw_terms_do_call(w, spec), spec)
    raise ValueError(f"unknown instrument {instrument!r}")


# --- integrands on the unit cube --------------------------------------------

def price_integrand(instrument: str, spec: MarketSpec, scheme: str = EULER,
                    importance_sampling: bool = False) -> Callable[[np.ndarray], np.ndarray]:
    """Discounted payoff as a function of uniforms of shape ``(N, D)``."""
    if importance_sampling:
        if instrument != DOWN_OUT:
            raise ValueError("importance sampling is defined for the down-and-out call only")

        def f(u):
            return is_barrier_path(u, spec, scheme)[1].value
        return f

    def f(u):
        w = wiener(inverse_normal_cdf(u), spec, scheme)
        return payoff(instrument, gbm_path(w, spec), spec).value
    return f


def cpw_integrand(instrument: str, key: str, spec: MarketSpec, scheme: str = EULER):
    """Per-path CPW conditional estimate (``key="price"``) or Greek."""
    def f(u):
        w = wiener(inverse_normal_cdf(u), spec, scheme).values
        return cpw_greeks(instrument, w, spec)[key]
    return f


def node_integrands(instrument: str, request: GreekRequest, spec: MarketSpec, scheme: str,
                    importance_sampling: bool = False):
    """One price integrand per stencil node, plus the stencil weights."""
    nodes, weights = stencil(request, spec)
    fns = [price_integrand(instrument, bump(spec, request.parameter, th), scheme, importance_sampling)
           for th in nodes]
    return fns, weights


def greek_integrand(instrument: str, request: GreekRequest, spec: MarketSpec, scheme: str = EULER,
                    importance_sampling: bool = False) -> Callable[[np.ndarray], np.ndarray]:
    """Scalar function of the D uniforms whose mean is the requested Greek.

    FD and CI combine the node payoffs of one path (common random numbers);
    CPW is the per-path conditional Greek.
    """
    if request.method == CPW:
        if importance_sampling:
            raise ValueError("CPW combined with importance sampling is not supported")
        return cpw_integrand(instrument, request.name, spec, scheme)
    nodes, weights = stencil(request, spec)
    specs = [bump(spec, request.parameter, th) for th in nodes]

    if importance_sampling:
        if instrument != DOWN_OUT:
            raise ValueError("importance sampling is defined for the down-and-out call only")

        def g(u):
            return sum(wt * is_barrier_path(u, sp, scheme)[1].value for wt, sp in zip(weights, specs))
        return g

    def g(u):
        w = wiener(inverse_normal_cdf(u), spec, scheme)
        return sum(wt * payoff(instrument, gbm_path(w, sp), sp).value for wt, sp in zip(weights, specs))
    return g
