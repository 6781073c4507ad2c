import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from memsplit.errors import InvalidStepError, InvalidTimescaleError, OracleSizeError
from memsplit.resolvents import (SPECTRAL, TIME_DOMAIN, BackendKind, ResolventBackend,
                                 backward_difference, dense_resolvent_oracle, derivative,
                                 lowpass, resolvent_D)
from memsplit.signals import Signal, constant, inner_product, make_grid, norm

from conftest import band_limited

finite = st.floats(-100, 100, allow_nan=False, allow_infinity=False)
gammas = st.floats(1e-3, 50.0)


def rel_l2(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)


def test_derivative_of_constant():
    d = derivative(constant(make_grid(64, 8.0), 3.0)).values
    assert np.max(np.abs(d)) <= 1e-12


def test_derivative_of_tone():
    g = make_grid(256, 40.0)
    w = 2 * np.pi * 2 / g.duration_ms
    d = derivative(Signal(g, np.sin(w * g.times))).values
    assert np.max(np.abs(d - w * np.cos(w * g.times))) <= 1e-8


def test_derivative_nyquist_dropped():
    g = make_grid(16, 1.0)
    alt = Signal(g, (-1.0) ** np.arange(16))
    assert np.max(np.abs(derivative(alt).values)) <= 1e-12


def test_derivative_vs_central_differences(rng):
    g = make_grid(512, 20.0)
    T, t, dt = g.duration_ms, g.times, g.dt_ms
    vals = np.zeros(g.n_samples)
    bound = 0.0
    for m in range(1, 7):
        a, b = rng.normal(size=2)
        w = 2 * np.pi * m / T
        vals += a * np.sin(w * t) + b * np.cos(w * t)
        # |w - sin(w dt)/dt| <= w^3 dt^2 / 6 per mode
        bound += np.hypot(a, b) * w ** 3 * dt ** 2 / 6
    d = derivative(Signal(g, vals)).values
    fd = (np.roll(vals, -1) - np.roll(vals, 1)) / (2 * dt)
    assert np.max(np.abs(d - fd)) <= bound * (1 + 1e-6) + 1e-12


def test_backward_difference_matches_formula(rng):
    g = make_grid(32, 3.2)
    x = rng.normal(size=32)
    d = backward_difference(Signal(g, x), rest_value=0.5).values
    ref = np.diff(np.concatenate([[0.5], x])) / g.dt_ms
    assert np.allclose(d, ref, rtol=1e-13, atol=1e-12)


@pytest.mark.parametrize("gamma", [1e-3, 0.28, 5.0])
def test_spectral_resolvent_dc_gain(gamma):
    out = resolvent_D(constant(make_grid(64, 10.0), 1.7), gamma, SPECTRAL).values
    assert np.max(np.abs(out - 1.7)) <= 1e-12


@pytest.mark.parametrize("m,gamma", [(1, 0.5), (5, 2.0), (20, 0.1), (31, 3.0)])
def test_spectral_resolvent_tone_gain(m, gamma):
    g = make_grid(128, 25.0)
    w = 2 * np.pi * m / g.duration_ms
    t = g.times
    out = resolvent_D(Signal(g, 2.0 * np.sin(w * t)), gamma, SPECTRAL).values
    expected = 2.0 / np.hypot(1.0, gamma * w) * np.sin(w * t - np.arctan(gamma * w))
    assert np.max(np.abs(out - expected)) <= 1e-8


def test_time_domain_resolvent_matches_dense(rng):
    g = make_grid(64, 6.4)
    for gamma in (0.01, 0.28, 3.0):
        s = Signal(g, rng.normal(size=64))
        td = resolvent_D(s, gamma, TIME_DOMAIN).values
        ref = dense_resolvent_oracle(s, gamma).values
        assert rel_l2(td, ref) <= 1e-10


def test_time_domain_resolvent_rest_anchor(rng):
    g = make_grid(32, 3.2)
    s = Signal(g, rng.normal(size=32))
    be = ResolventBackend(BackendKind.TIME_DOMAIN, rest_value=-0.7)
    td = resolvent_D(s, 0.9, be).values
    ref = dense_resolvent_oracle(s, 0.9, rest_value=-0.7).values
    assert rel_l2(td, ref) <= 1e-10


def test_resolvent_rejects_nonpositive_gamma():
    s = constant(make_grid(8, 1.0), 1.0)
    for be in (SPECTRAL, TIME_DOMAIN):
        with pytest.raises(InvalidStepError):
            resolvent_D(s, 0.0, be)
        with pytest.raises(InvalidStepError):
            resolvent_D(s, -1.0, be)


def test_bandwidth_truncation_zeroes_high_bins():
    g = make_grid(64, 10.0)
    w = 2 * np.pi / g.duration_ms
    t = g.times
    s = Signal(g, np.sin(2 * w * t) + np.sin(24 * w * t))
    be = ResolventBackend(BackendKind.SPECTRAL, bandwidth_fraction=0.5)
    out = resolvent_D(s, 1e-9, be).values
    assert np.max(np.abs(out - np.sin(2 * w * t))) <= 1e-6


def test_lowpass_constant_and_identity(rng):
    g = make_grid(64, 10.0)
    s = constant(g, 2.0)
    assert np.allclose(lowpass(s, 10.0, SPECTRAL).values, 2.0, atol=1e-12)
    r = Signal(g, rng.normal(size=64))
    for be in (SPECTRAL, TIME_DOMAIN):
        assert np.array_equal(lowpass(r, 0.0, be).values, r.values)


def test_lowpass_negative_tau():
    with pytest.raises(InvalidTimescaleError):
        lowpass(constant(make_grid(8, 1.0), 1.0), -1.0)


def test_lowpass_step_response():
    g = make_grid(20000, 100.0)
    out = lowpass(constant(g, 1.0), 10.0, TIME_DOMAIN).values
    assert np.max(np.abs(out - (1 - np.exp(-g.times / 10.0)))) <= 1e-3


def test_lowpass_time_domain_recursion(rng):
    g = make_grid(50, 5.0)
    v = rng.normal(size=50)
    tau = 2.5
    r = tau / g.dt_ms
    be = ResolventBackend(BackendKind.TIME_DOMAIN, rest_value=0.3)
    out = lowpass(Signal(g, v), tau, be).values
    prev = 0.3
    for k in range(50):
        prev = (prev * r + v[k]) / (1 + r)
        assert out[k] == pytest.approx(prev, rel=1e-12, abs=1e-14)


def test_oracle_small_gamma_limit(rng):
    g = make_grid(64, 6.4)
    s = Signal(g, np.sin(2 * np.pi * g.times / 6.4) * np.sin(np.pi * g.times / 6.4))
    gamma = 1e-6
    ds = np.max(np.abs(backward_difference(s).values))
    out = dense_resolvent_oracle(s, gamma).values
    # exact bound: J commutes with D and is an averaging map; slack is rounding only
    assert np.max(np.abs(out - s.values)) <= gamma * ds * (1 + 1e-9)


def test_oracle_constant():
    s = constant(make_grid(32, 3.0), 1.25)
    assert np.allclose(dense_resolvent_oracle(s, 0.4, rest_value=1.25).values, 1.25,
                       rtol=0, atol=1e-12)


def test_oracle_size_guard():
    with pytest.raises(OracleSizeError):
        dense_resolvent_oracle(constant(make_grid(4098, 10.0), 0.0), 1.0)


def test_backend_agreement_on_rest_bounded_input(rng):
    g = make_grid(4096, 100.0)
    t = g.times
    # smooth bump confined to [10, 70] ms so both ends sit at rest
    env = np.where((t > 10) & (t < 70), np.sin(np.pi * (t - 10) / 60) ** 2, 0.0)
    for _ in range(5):
        s = Signal(g, env * band_limited(g, rng, n_modes=8).values)
        sp = resolvent_D(s, 1.0, SPECTRAL).values
        td = resolvent_D(s, 1.0, TIME_DOMAIN).values
        assert rel_l2(td, sp) <= 0.02


@settings(max_examples=60, deadline=None)
@given(arrays(float, (2, 64), elements=finite), finite, finite, gammas,
       st.sampled_from([SPECTRAL, TIME_DOMAIN]))
def test_resolvent_linear(vals, a, b, gamma, be):
    g = make_grid(64, 6.4)
    s1, s2 = Signal(g, vals[0]), Signal(g, vals[1])
    lhs = resolvent_D(a * s1 + b * s2, gamma, be).values
    rhs = a * resolvent_D(s1, gamma, be).values + b * resolvent_D(s2, gamma, be).values
    scale = max(np.max(np.abs(lhs)), np.max(np.abs(rhs)), 1e-300)
    assert np.max(np.abs(lhs - rhs)) <= 1e-10 * scale + 1e-300


@settings(max_examples=60, deadline=None)
@given(arrays(float, (2, 64), elements=finite))
def test_derivative_skew(vals):
    g = make_grid(64, 6.4)
    d = Signal(g, vals[0] - vals[1])
    assert abs(inner_product(d, derivative(d))) <= 1e-9 * max(inner_product(d, d), 1e-300)


@settings(max_examples=60, deadline=None)
@given(arrays(float, (2, 64), elements=finite), gammas,
       st.sampled_from([SPECTRAL, TIME_DOMAIN]))
def test_resolvent_nonexpansive(vals, gamma, be):
    g = make_grid(64, 6.4)
    s1, s2 = Signal(g, vals[0]), Signal(g, vals[1])
    out = norm(resolvent_D(s1, gamma, be) - resolvent_D(s2, gamma, be))
    assert out <= norm(s1 - s2) * (1 + 1e-12) + 1e-300
