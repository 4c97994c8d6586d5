"""Command filter and disturbance observer primitives vs closed-form oracles."""

import math

import numpy as np
import pytest

from vortexform.filters import (CommandFilter2, FilterConfigError, FirstOrderDO,
                                LambdaObserver, cf2_init, fo_do_advance,
                                lambda_deriv, lambda_matched_init)
from vortexform.sim import rk4_step


# ---------------------------------------------------------------------------
# second-order command filter
# ---------------------------------------------------------------------------

def test_cf2_init_examples():
    f = cf2_init(5.0, 1.0, 0.0)
    assert (f.s_c, f.s_c_dot) == (0.0, 0.0)
    f = cf2_init(8.0, 1.0, 200.0)
    assert (f.s_c, f.s_c_dot) == (200.0, 0.0)
    f = cf2_init(25.0, 1.0, 0.1)
    assert (f.s_c, f.s_c_dot) == (0.1, 0.0)


def test_cf2_rejects_bad_parameters():
    with pytest.raises(FilterConfigError):
        CommandFilter2(omega=0.0, zeta=1.0)
    with pytest.raises(FilterConfigError):
        CommandFilter2(omega=5.0, zeta=-1.0)


def test_cf2_rejects_under_resolved_step():
    f = cf2_init(25.0, 1.0, 0.0)
    with pytest.raises(FilterConfigError):
        f.step(1.0, dt=0.02)  # dt*omega = 0.5


def test_cf2_equilibrium_hold():
    f = cf2_init(8.0, 1.0, 3.5)
    for _ in range(500):
        s, sd = f.step(3.5, 0.002)
    assert abs(s - 3.5) < 1e-13 and abs(sd) < 1e-13


def test_cf2_critically_damped_step_matches_analytic():
    omega, dt = 5.0, 0.001
    f = cf2_init(omega, 1.0, 0.0)
    t = 0.0
    for _ in range(int(3.0 / dt)):
        s, _ = f.step(1.0, dt)
        t += dt
        exact = 1.0 - (1.0 + omega * t) * math.exp(-omega * t)
        assert abs(s - exact) < 1e-6


def test_cf2_ramp_steady_rate_and_lag():
    omega, k, dt = 8.0, 2.0, 0.001
    f = cf2_init(omega, 1.0, 0.0)
    t = 0.0
    for _ in range(int(6.0 / dt)):
        s, sd = f.step(k * t, dt)
        t += dt
    # inputs are held across each step, which adds half a step of transport
    # delay to the analytic ramp lag
    assert abs(sd - k) < 1e-4
    assert abs((s - k * t) - (-2.0 * k / omega - 0.5 * k * dt)) < 1e-5


@pytest.mark.parametrize("omega", [5.0, 8.0, 25.0])
def test_cf2_lag_halves_when_omega_doubles(omega):
    def lag(w):
        dt = 0.02 / w
        f = cf2_init(w, 1.0, 0.0)
        t = 0.0
        for _ in range(int(round(12.0 / w / dt))):
            s, _ = f.step(2.0 * t, dt)
            t += dt
        return abs(s - 2.0 * t)

    ratio = lag(omega) / lag(2.0 * omega)
    assert 1.8 <= ratio <= 2.2


# ---------------------------------------------------------------------------
# first-order tracker
# ---------------------------------------------------------------------------

def test_fo_do_zero_stays_zero():
    f = FirstOrderDO(time_const=0.1)
    for _ in range(1000):
        assert f.step(0.0, 0.001) == 0.0


def test_fo_do_constant_error_closed_form():
    tc, c, dt = 0.25, 4.0, 0.001
    f = FirstOrderDO(time_const=tc)
    t = 0.0
    for _ in range(int(2.0 / dt)):
        d_hat = f.step(c, dt)
        t += dt
        exact_err = -c * math.exp(-t / tc)
        assert abs((d_hat - c) - exact_err) < 1e-6


def test_fo_do_sinusoid_bound():
    # sup |d_tilde| <= max{|d(0)|, T ||d_dot||} = 0.2 for d = sin(2t), T=0.1
    tc, dt = 0.1, 2e-4

    def deriv(t, y):
        return np.array([(math.sin(2.0 * t) - y[0]) / tc])

    y = np.zeros(1)
    sup = 0.0
    t = 0.0
    for _ in range(int(10.0 / dt)):
        sup = max(sup, abs(y[0] - math.sin(2.0 * t)))
        y = rk4_step(deriv, y, t, dt)
        t += dt
    assert sup <= 0.2


def test_fo_do_settling_input_error_vanishes():
    tc, dt = 0.1, 1e-3
    d_hat, t = 0.0, 0.0
    for _ in range(int(8.0 / dt)):
        d_hat = fo_do_advance(d_hat, 1.0 - math.exp(-t), tc, dt)
        t += dt
    assert abs(d_hat - (1.0 - math.exp(-t))) < 1e-3


def test_fo_do_guards():
    f = FirstOrderDO(time_const=0.1)
    with pytest.raises(FilterConfigError):
        f.step(1.0, dt=0.1)
    with pytest.raises(FilterConfigError):
        FirstOrderDO(time_const=-1.0)


# ---------------------------------------------------------------------------
# lambda-pattern observer
# ---------------------------------------------------------------------------

def test_lambda_zero_case():
    obs = LambdaObserver(time_consts=np.array([0.2, 0.2]))
    obs.init_matched(np.zeros(2))
    assert np.all(obs.lam == 0.0)
    for _ in range(100):
        d = obs.step(np.zeros(2), np.zeros(2), 0.001)
    assert np.all(np.abs(d) < 1e-15)


def test_lambda_matched_init_example():
    inv = 1.0 / np.array([0.8, 0.5, 0.4])
    lam = lambda_matched_init(np.array([45.0, -15.0, -5015.0]), inv)
    assert np.allclose(lam, [-56.25, 30.0, 12537.5], atol=1e-12)
    # estimate right after init is exactly zero for any state
    obs = LambdaObserver(time_consts=np.array([0.8, 0.5, 0.4]))
    x0 = np.array([45.0, -15.0, -5015.0])
    obs.init_matched(x0)
    assert np.all(obs.d_hat(x0) == 0.0)


def test_lambda_scalar_closed_form():
    # plant x_dot = u + d, u = 0, d = 3, T = 0.25: d_hat = 3(1 - e^{-t/T})
    tc = 0.25
    inv = np.array([1.0 / tc])

    def deriv(t, y):
        x, lam = y[:1], y[1:]
        dx = np.array([3.0])
        return np.concatenate([dx, lambda_deriv(lam, x, np.zeros(1), inv)])

    x0 = np.array([1.7])
    y = np.concatenate([x0, lambda_matched_init(x0, inv)])
    dt, t = 1e-3, 0.0
    for _ in range(int(2.0 / dt)):
        y = rk4_step(deriv, y, t, dt)
        t += dt
        d_hat = y[1] + inv[0] * y[0]
        assert abs(d_hat - 3.0 * (1.0 - math.exp(-t / tc))) < 1e-5


def test_lambda_wake_instance_per_axis_time_constants():
    # constant disturbance vector, one decay constant per axis
    tcs = np.array([0.8, 0.5, 0.4])
    inv = 1.0 / tcs
    W = np.array([5.0, 0.0, -1.0])

    def deriv(t, y):
        x, lam = y[:3], y[3:]
        u = np.array([200.0, 0.0, 0.0])
        return np.concatenate([u + W, lambda_deriv(lam, x, u, inv)])

    x0 = np.array([45.0, -15.0, -5015.0])
    y = np.concatenate([x0, lambda_matched_init(x0, inv)])
    dt, t = 1e-3, 0.0
    for _ in range(int(2.5 / dt)):
        y = rk4_step(deriv, y, t, dt)
        t += dt
        d_hat = y[3:] + inv * y[:3]
        expect = W * (1.0 - np.exp(-t / tcs))
        assert np.abs(d_hat - expect).max() < 1e-5


def test_lambda_decay_rate_within_two_percent():
    from vortexform.selftest import observer_decay_rates
    for tcs in ((0.8, 0.5, 0.4), (0.25, 0.2, 0.2), (0.8, 0.8, 0.8),
                (0.02, 0.02, 0.02)):
        rates = observer_decay_rates(tcs)
        assert np.abs(rates * np.asarray(tcs) - 1.0).max() < 0.02


def test_lambda_bound_on_filtered_noise():
    # Lemma-style bound max{|d(0)|, T ||d_dot||} on a smooth random signal
    rng = np.random.default_rng(5)
    tc = 0.1
    inv = np.array([1.0 / tc])
    # smooth signal: sum of a few random sinusoids
    amps = rng.uniform(0.2, 1.0, size=4)
    freqs = rng.uniform(0.5, 4.0, size=4)
    phases = rng.uniform(0, 2 * math.pi, size=4)

    def d_of(t):
        return float(np.sum(amps * np.sin(freqs * t + phases)))

    def ddot_of(t):
        return float(np.sum(amps * freqs * np.cos(freqs * t + phases)))

    def deriv(t, y):
        x, lam = y[:1], y[1:]
        return np.concatenate([np.array([d_of(t)]),
                               lambda_deriv(lam, x, np.zeros(1), inv)])

    ts = np.linspace(0, 12, 4001)
    bound = max(abs(d_of(0.0)), tc * max(abs(ddot_of(t)) for t in ts))
    y = np.concatenate([np.zeros(1), np.zeros(1)])
    # d_hat(0) = 0 via lam(0) = 0, x(0) = 0
    dt, t = 1e-3, 0.0
    sup = 0.0
    for _ in range(int(12.0 / dt)):
        sup = max(sup, abs(y[1] + inv[0] * y[0] - d_of(t)))
        y = rk4_step(deriv, y, t, dt)
        t += dt
    assert sup <= bound * (1.0 + 1e-6)


def test_lambda_dimension_guards():
    obs = LambdaObserver(time_consts=np.array([0.1, 0.1]))
    with pytest.raises(ValueError):
        obs.step(np.zeros(3), np.zeros(2), 0.001)
    with pytest.raises(FilterConfigError):
        obs.step(np.zeros(2), np.zeros(2), 0.5)
    with pytest.raises(FilterConfigError):
        LambdaObserver(time_consts=np.array([0.1, -0.1]))
