import numpy as np
import pytest
from dataclasses import replace
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.special import ndtr

import rqmc_greeks.greeks as greeks
from rqmc_greeks.estimators import Estimate, Sampler, batched_estimate, estimate
from rqmc_greeks.greeks import (CI, CPW, FD, SPOT, VOL, GreekRequest, chebyshev_grid, ci_greek, ci_weights,
                                cpw_asian_call_greeks, cpw_do_call_greeks, cpw_integrand, cpw_terms_do_call,
                                default_request, differentiation_matrix, fd_first, fd_second,
                                greek_integrand, node_integrands, stencil)
from rqmc_greeks.instruments import ASIAN, DOWN_OUT
from rqmc_greeks.paths import BBD, EULER, MarketSpec, euler_wiener, wiener

SPEC = MarketSpec()
DO = MarketSpec(B=90.0)


def exact(value, k=4):
    return Estimate(float(value), 0.0, 1, k, np.full(k, float(value)))


def random_w(seed, n=200, spec=SPEC, scheme=EULER):
    z = np.random.default_rng(seed).standard_normal((n, spec.steps))
    return wiener(z, spec, scheme).values


# --- finite differences -----------------------------------------------------

@given(st.floats(-50, 50), st.floats(1e-3, 2))
def test_fd_first_exact_on_quadratic(theta, h):
    d = fd_first(exact((theta + h) ** 2), exact((theta - h) ** 2), h)
    assert d.value == pytest.approx(2 * theta, abs=1e-9 * max(1, theta**2) / h)
    assert fd_first(exact(3.0), exact(3.0), h).value == 0.0


@given(st.floats(-10, 10), st.floats(1e-2, 1))
def test_fd_second_quadratic_and_linear(theta, h):
    v = lambda x: x * x
    assert fd_second(exact(v(theta + h)), exact(v(theta)), exact(v(theta - h)), h).value == pytest.approx(
        2.0, abs=1e-8 * max(1, theta**2) / h**2)
    lin = lambda x: 3 * x - 1
    assert fd_second(exact(lin(theta + h)), exact(lin(theta)), exact(lin(theta - h)), h).value == pytest.approx(
        0.0, abs=1e-9 * max(1, abs(theta)) / h**2)


def test_fd_second_quartic_taylor():
    h = 0.01
    d = fd_second(exact((1 + h) ** 4), exact(1.0), exact((1 - h) ** 4), h)
    assert abs(d.value - 12) < 0.01


def test_fd_rejects_bad_shift():
    with pytest.raises(ValueError):
        fd_first(exact(1), exact(1), 0.0)


# --- Chebyshev grid and differentiation matrices ------------------------------

def test_chebyshev_grid_examples():
    assert_allclose(chebyshev_grid(0, 1, 3), [-1, 0, 1], atol=1e-15)
    g = chebyshev_grid(100, 5, 7)
    assert g[0] == pytest.approx(95) and g[-1] == pytest.approx(105)
    assert g[3] == 100.0
    assert_allclose(g - 100, -(g[::-1] - 100), atol=1e-12)


@given(st.floats(-100, 100), st.floats(1e-3, 10), st.integers(3, 15))
def test_chebyshev_grid_endpoints(center, width, points):
    g = chebyshev_grid(center, width, points)
    assert g[0] == pytest.approx(center - width) and g[-1] == pytest.approx(center + width)
    assert np.all(np.diff(g) > 0)


def test_chebyshev_grid_rejects():
    with pytest.raises(ValueError):
        chebyshev_grid(0, 1, 2)
    with pytest.raises(ValueError):
        chebyshev_grid(0, 0, 5)


def test_diff_matrix_cubic_first_derivative():
    x = np.sort(np.random.default_rng(0).uniform(-2, 3, 7))
    assert_allclose(differentiation_matrix(x, 1) @ x**3, 3 * x**2, rtol=1e-9)


def test_diff_matrix_quartic_second_derivative():
    x = chebyshev_grid(0.5, 1.5, 7)
    assert_allclose(differentiation_matrix(x, 2) @ x**4, 12 * x**2, rtol=1e-8, atol=1e-8)


@pytest.mark.parametrize("m", [1, 2])
def test_diff_matrix_annihilates_constants(m):
    assert_allclose(differentiation_matrix(chebyshev_grid(1, 0.3, 7), m) @ np.full(7, 4.2), 0, atol=1e-10)


@given(st.floats(-2, 2), st.floats(0.05, 2), st.sampled_from([3, 5, 7, 9]), st.sampled_from([1, 2]))
@settings(max_examples=60)
def test_diff_matrix_polynomial_exactness(center, width, points, m):
    x = chebyshev_grid(center, width, points)
    d = differentiation_matrix(x, m)
    for k in range(points):
        exact_d = np.zeros_like(x) if k < m else (
            np.prod(np.arange(k, k - m, -1)) * x ** (k - m))
        scale = max(1.0, np.max(np.abs(exact_d)), np.max(np.abs(x**k)) / width**m)
        assert np.max(np.abs(d @ x**k - exact_d)) <= 1e-8 * scale


def test_diff_matrix_distinct_nodes():
    with pytest.raises(ValueError):
        differentiation_matrix([0.0, 1.0, 1.0], 1)


def test_ci_greek_examples():
    g = chebyshev_grid(2.0, 0.5, 7)
    assert ci_greek([exact(x * x) for x in g], 2, g).value == pytest.approx(2.0, abs=1e-8)
    assert ci_greek([exact(1.5)] * 7, 1, g).value == pytest.approx(0.0, abs=1e-10)
    with pytest.raises(ValueError):
        ci_weights(chebyshev_grid(0, 1, 6), 1)


def test_ci_degree_five_exact():
    g = chebyshev_grid(100.0, 10.0, 7)
    p = np.polynomial.Polynomial([3, -1, 0.5, 0.01, -2e-4, 1e-6])
    for m in (1, 2):
        est = ci_greek([exact(p(x)) for x in g], m, g).value
        assert est == pytest.approx(p.deriv(m)(100.0), abs=1e-9 * max(1, abs(p.deriv(m)(100.0))) * 1e3)


# --- requests ------------------------------------------------------------------

def test_request_validation():
    with pytest.raises(ValueError):
        GreekRequest(SPOT, 1, FD, fd_shift=0.0)
    with pytest.raises(ValueError):
        GreekRequest(SPOT, 1, CI, ci_width=1.0, ci_points=6)
    with pytest.raises(ValueError):
        GreekRequest("rate", 1, FD, fd_shift=0.1)
    with pytest.raises(ValueError):
        GreekRequest(SPOT, 3, CPW)


def test_default_requests():
    r = default_request(DOWN_OUT, "delta", FD, DO)
    assert r.fd_shift == pytest.approx(0.1) and r.ci_width == pytest.approx(5.0)
    r = default_request(ASIAN, "vomma", CI, SPEC)
    assert r.ci_width == pytest.approx(0.12) and r.parameter == VOL and r.order == 2
    assert default_request(ASIAN, "gamma", FD, SPEC).fd_shift == pytest.approx(0.1)
    assert default_request(DOWN_OUT, "gamma", CI, DO).ci_width == pytest.approx(7.5)


def test_stencil_nodes():
    nodes, w = stencil(GreekRequest(SPOT, 2, FD, fd_shift=0.5), SPEC)
    assert_allclose(nodes, [100.5, 100, 99.5])
    assert_allclose(w, [4, -8, 4])
    with pytest.raises(ValueError):
        stencil(GreekRequest(VOL, 1, CI, ci_width=0.3), SPEC)


# --- CPW terms and formulas -----------------------------------------------------

def test_cpw_thresholds_at_unit_ratios():
    w = random_w(1, 1)[0]
    s_tilde = SPEC.S0 * np.exp(SPEC.mu * (SPEC.times - SPEC.dt) + SPEC.sigma * (w - w[0]))
    if s_tilde.min() >= SPEC.S0:
        w = -w
        s_tilde = SPEC.S0 * np.exp(SPEC.mu * (SPEC.times - SPEC.dt) + SPEC.sigma * (w - w[0]))
    spec = MarketSpec(K=s_tilde[-1], B=s_tilde.min())
    t = cpw_terms_do_call(w, spec)
    target = -spec.mu * spec.dt / (spec.sigma * np.sqrt(spec.dt))
    assert t.psi1 == pytest.approx(target, abs=1e-12)
    assert t.psi2 == pytest.approx(target, abs=1e-12)


def test_cpw_terms_far_barrier_and_star_identity():
    w = random_w(2, 50)
    t = cpw_terms_do_call(w, MarketSpec(B=1e-250))
    assert np.all(t.psi2 < -1e3)
    assert_allclose(t.psi_d, t.psi1)
    t = cpw_terms_do_call(w, DO)
    assert_allclose(t.psi_d_star, t.psi_d - DO.sigma * np.sqrt(DO.dt), atol=1e-14)


def test_cpw_do_limits():
    w = random_w(3, 50)
    deep_out = cpw_do_call_greeks(cpw_terms_do_call(w, MarketSpec(B=90, K=1e7)), DO)
    for v in deep_out.values():
        assert np.all(np.abs(v) < 1e-12)
    spec = MarketSpec(B=1e-200, K=1e-100)
    res = cpw_do_call_greeks(cpw_terms_do_call(w, spec), spec)
    sd = cpw_terms_do_call(w, spec).s_tilde_d
    assert_allclose(res["price"], np.exp(spec.r * (spec.dt - spec.T)) * sd - np.exp(-spec.r * spec.T) * spec.K,
                    rtol=1e-12)


def test_cpw_asian_small_strike_limit():
    w = random_w(4, 20)
    spec = MarketSpec(K=1e-100)
    s = spec.S0 * np.exp(spec.mu * (spec.times - spec.dt) + spec.sigma * (w - w[:, :1]))
    assert_allclose(cpw_asian_call_greeks(w, spec)["price"],
                    np.exp(spec.r * (spec.dt - spec.T)) * s.mean(axis=1), rtol=1e-12)


def test_cpw_asian_delta_on_drift_path():
    g = cpw_integrand(ASIAN, "delta", SPEC, BBD)(np.full((1, 32), 0.5))[0]
    s = SPEC.S0 * np.exp(SPEC.mu * (SPEC.times - SPEC.dt)).mean()
    a = SPEC.sigma * np.sqrt(SPEC.dt)
    psi = (np.log(SPEC.K / s) - SPEC.mu * SPEC.dt) / a
    expected = np.exp(SPEC.r * (SPEC.dt - SPEC.T)) * s / SPEC.S0 * ndtr(a - psi)
    assert np.isfinite(g) and g == pytest.approx(expected, rel=1e-13)


def per_path_fd(instrument, w, spec, key, parameter, h):
    up = greeks.bump(spec, parameter, greeks.parameter_value(spec, parameter) + h)
    dn = greeks.bump(spec, parameter, greeks.parameter_value(spec, parameter) - h)
    return (greeks.cpw_greeks(instrument, w, up)[key] - greeks.cpw_greeks(instrument, w, dn)[key]) / (2 * h)


def away_from_kink(w, spec, margin):
    t = cpw_terms_do_call(w, spec)
    return np.abs(t.psi1 - t.psi2) > margin


@pytest.mark.parametrize("barrier", [90.0, 80.0, 70.0])
@pytest.mark.parametrize("scheme", [EULER, BBD])
def test_cpw_do_gradients(barrier, scheme):
    spec = MarketSpec(B=barrier)
    w = random_w(10, 400, spec, scheme)
    keep = away_from_kink(w, spec, 1e-2)
    w = w[keep]
    g = greeks.cpw_greeks(DOWN_OUT, w, spec)
    checks = [("price", "delta", SPOT, 1e-5 * spec.S0), ("delta", "gamma", SPOT, 1e-5 * spec.S0),
              ("price", "vega", VOL, 1e-6), ("vega", "vomma", VOL, 1e-6)]
    for base, deriv, parameter, h in checks:
        fd = per_path_fd(DOWN_OUT, w, spec, base, parameter, h)
        scale = np.max(np.abs(g[deriv]))
        assert np.all(np.abs(fd - g[deriv]) <= 1e-5 * np.abs(g[deriv]) + 1e-9 * scale), deriv


@pytest.mark.parametrize("strike", [90.0, 100.0, 110.0])
@pytest.mark.parametrize("scheme", [EULER, BBD])
def test_cpw_asian_gradients(strike, scheme):
    spec = MarketSpec(K=strike)
    w = random_w(11, 400, spec, scheme)
    g = greeks.cpw_greeks(ASIAN, w, spec)
    checks = [("price", "delta", SPOT, 1e-5 * spec.S0, 1e-5), ("delta", "gamma", SPOT, 1e-5 * spec.S0, 1e-5),
              ("price", "vega", VOL, 1e-6, 1e-4), ("vega", "vomma", VOL, 1e-6, 1e-4)]
    for base, deriv, parameter, h, rtol in checks:
        fd = per_path_fd(ASIAN, w, spec, base, parameter, h)
        scale = np.max(np.abs(g[deriv]))
        assert np.all(np.abs(fd - g[deriv]) <= rtol * np.abs(g[deriv]) + 1e-9 * scale), deriv


def test_cpw_and_is_rejected():
    with pytest.raises(ValueError):
        greek_integrand(DOWN_OUT, default_request(DOWN_OUT, "delta", CPW, DO), DO, BBD, importance_sampling=True)
    with pytest.raises(ValueError):
        greek_integrand(ASIAN, default_request(ASIAN, "delta", FD, SPEC), SPEC, BBD, importance_sampling=True)


# --- integrands and common random numbers -----------------------------------------

def test_fd_integrand_of_theta_free_payoff():
    spec = MarketSpec(K=1e6)
    u = np.random.default_rng(0).uniform(size=(100, 32))
    for greek in ("delta", "vomma"):
        g = greek_integrand(ASIAN, default_request(ASIAN, greek, FD, spec), spec, EULER)
        assert np.all(g(u) == 0.0)


def test_greek_integrand_matches_node_estimates():
    req = default_request(ASIAN, "gamma", CI, SPEC)
    fns, weights = node_integrands(ASIAN, req, SPEC, BBD)
    sampler = Sampler(seed=3)
    nodes = batched_estimate(fns, 32, 2**10, sampler)
    combined = estimate(greek_integrand(ASIAN, req, SPEC, BBD), 32, 2**10, sampler)
    assert combined.value == pytest.approx(ci_greek(nodes, 2, stencil(req, SPEC)[0]).value, rel=1e-10)


def test_ci_nodes_share_one_sample_matrix_per_replicate(monkeypatch):
    draws = []
    original = Sampler.draw

    def counting(self, dims, count, replicate):
        draws.append(replicate)
        return original(self, dims, count, replicate)

    monkeypatch.setattr(Sampler, "draw", counting)
    req = default_request(DOWN_OUT, "delta", CI, DO)
    fns, _ = node_integrands(DOWN_OUT, req, DO, BBD)
    assert len(fns) == 7
    batched_estimate(fns, 32, 2**8, Sampler(replicates=4))
    assert draws == [1, 2, 3, 4]


def test_greek_integrand_normalises_once(monkeypatch):
    calls = []
    original = greeks.inverse_normal_cdf
    monkeypatch.setattr(greeks, "inverse_normal_cdf", lambda u: calls.append(1) or original(u))
    g = greek_integrand(DOWN_OUT, default_request(DOWN_OUT, "vega", CI, DO), DO, BBD)
    g(np.full((3, 32), 0.4))
    assert len(calls) == 1


def test_asian_delta_fd_matches_cpw():
    sampler = Sampler(seed=17)
    fd = estimate(greek_integrand(ASIAN, default_request(ASIAN, "delta", FD, SPEC), SPEC, BBD), 32, 2**16, sampler)
    cpw = estimate(greek_integrand(ASIAN, default_request(ASIAN, "delta", CPW, SPEC), SPEC, BBD), 32, 2**16, sampler)
    assert abs(fd.value - cpw.value) < 3 * np.hypot(fd.std_error, cpw.std_error)


def test_asian_vomma_ci_matches_cpw():
    sampler = Sampler(seed=18)
    ci = estimate(greek_integrand(ASIAN, default_request(ASIAN, "vomma", CI, SPEC), SPEC, BBD), 32, 2**16, sampler)
    cpw = estimate(greek_integrand(ASIAN, default_request(ASIAN, "vomma", CPW, SPEC), SPEC, BBD), 32, 2**16, sampler)
    assert abs(ci.value - cpw.value) < 3 * np.hypot(ci.std_error, cpw.std_error)
