import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from ftdp.controller import (
    KAPPA, ControllerGains, ControllerState, Reference, adapt, alpha_dot, control_law, heading_error,
    smooth_phi, tracking_errors,
)
from ftdp.plant import Environment, PlantParams, PlantState, coriolis, rotation, step

vec = arrays(float, 3, elements=st.floats(-5, 5, allow_nan=False))


def test_kappa_fixed_point():
    assert KAPPA == pytest.approx(math.exp(-(KAPPA + 1)), abs=1e-4)


def test_tracking_errors_example():
    g = ControllerGains()
    ref = Reference([10.0, 2.0, math.radians(70)])
    e_eta, alpha, e_nu = tracking_errors(ref, np.zeros(3), np.zeros(3), g)
    assert np.allclose(e_eta, [10.0, 2.0, math.radians(70)])
    assert np.allclose(alpha, [15.0, 3.0, 5.0 / 1500 * math.radians(70)])
    assert np.allclose(e_nu, alpha)


def test_heading_error_wraps():
    assert heading_error(math.radians(179), math.radians(-179)) == pytest.approx(math.radians(-2))


def test_smooth_phi_bound_sweep():
    xi = np.linspace(-100, 100, 1_000_001)
    for eps in (0.01, 0.1, 1.0):
        assert np.all(np.abs(xi) <= xi * smooth_phi(xi, KAPPA, eps) + eps * (1 + 1e-12))


@given(st.floats(-1e3, 1e3, allow_nan=False), st.floats(1e-3, 10))
def test_smooth_phi_odd_and_bounded(x, eps):
    assert smooth_phi(-x, KAPPA, eps) == -smooth_phi(x, KAPPA, eps)
    assert abs(smooth_phi(x, KAPPA, eps)) <= 1.0


def test_smooth_phi_rejects_eps():
    with pytest.raises(ValueError):
        smooth_phi(1.0, eps=0.0)


def test_alpha_dot_matches_finite_difference(rng):
    g = ControllerGains()
    p = PlantParams()
    env = Environment(current_speed=0.0, noise_surge=0, noise_sway=0, noise_yaw=0)
    ref = Reference([1.0, -0.5, 0.3])
    for _ in range(20):
        s = PlantState(rng.normal(size=3) * [1, 1, 0.5], rng.normal(size=3) * [0.3, 0.3, 0.2])
        tau = rng.normal(size=3)
        h = 1e-5
        _, a0, _ = tracking_errors(ref, s.eta, s.nu, g)
        s1 = step(s, tau, h, env, p)
        _, a1, _ = tracking_errors(ref, s1.eta, s1.nu, g)
        fd = (a1 - a0) / h
        assert np.allclose(alpha_dot(ref, s.eta, s.nu, a0, g), fd, rtol=1e-3, atol=1e-6)


def test_control_law_at_target_is_static_load():
    g = ControllerGains()
    p = PlantParams(gravity=np.array([0.2, -0.1, 0.0]))
    ref = Reference([1.0, 2.0, 0.5])
    tau = control_law(ref, ref.eta, np.zeros(3), ControllerState(), p, g)
    assert np.allclose(tau, p.gravity)


@given(vec, vec, vec)
def test_control_law_terms(eta, nu, d_hat):
    g = ControllerGains()
    p = PlantParams()
    ref = Reference([0.5, -1.0, 0.2])
    st_ = ControllerState(d_hat=d_hat)
    e_eta, alpha, e_nu = tracking_errors(ref, eta, nu, g)
    ad = alpha_dot(ref, eta, nu, alpha, g)
    expected = (g.a2 * e_nu + rotation(eta[2]).T @ (g.gamma1 * e_eta) + p.mass @ ad
                + (coriolis(p.mass, nu) + p.damping(nu)) @ alpha
                + d_hat * np.tanh(g.kappa * d_hat * e_nu / g.eps))
    assert np.allclose(control_law(ref, eta, nu, st_, p, g), expected)


def test_adapt_examples():
    g = ControllerGains()
    s = adapt(ControllerState(), [1.0, -2.0, 0.6], g, 0.01)
    assert np.allclose(s.d_hat, [0.01, -0.02, 0.01])
    capped = adapt(ControllerState(d_hat=[0.9, 0, 0], cap=[1.0, 1.0, 1.0]), [100.0, 0, 0], g, 0.01)
    assert capped.d_hat[0] == 1.0
    frozen = adapt(ControllerState(d_hat=[0.5, 0, 0], freeze=True), [1.0, 1.0, 1.0], g, 0.01)
    assert np.allclose(frozen.d_hat, [0.5, 0, 0])
    with pytest.raises(ValueError):
        ControllerState(cap=0.0)
    with pytest.raises(ValueError):
        adapt(ControllerState(), np.zeros(3), g, 0.0)


def test_gain_validation():
    with pytest.raises(ValueError):
        ControllerGains(gamma1=[1, 0, 1])
    with pytest.raises(ValueError):
        ControllerGains(kappa=0.0)


def test_closed_loop_converges_without_disturbance():
    g = ControllerGains()
    p = PlantParams()
    env = Environment(current_speed=0.0, noise_surge=0, noise_sway=0, noise_yaw=0)
    ref = Reference([1.0, 0.5, math.radians(30)])
    s = PlantState(np.zeros(3), np.zeros(3))
    cs = ControllerState()
    for _ in range(3000):
        tau = control_law(ref, s.eta, s.nu, cs, p, g)
        _, _, e_nu = tracking_errors(ref, s.eta, s.nu, g)
        cs = adapt(cs, e_nu, g, 0.01)
        s = step(s, tau, 0.01, env, p)
    e_eta, _, _ = tracking_errors(ref, s.eta, s.nu, g)
    assert np.abs(e_eta).max() < 1e-3
