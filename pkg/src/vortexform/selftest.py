"""Analytic-oracle self checks: filter and observer bound properties, kinematic
matrix identities, integrator order, and the startup gain audits.

Each check returns a result row with the measured value and its bound so the
command line report can show margins, not just verdicts.  All oracles here
are closed forms or finer-grid references, independent of the closed-loop
implementation they guard.
"""

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .filters import cf2_advance, fo_do_advance, lambda_deriv, lambda_matched_init
from .frames import rotation_wind_to_inertial
from .inner_loop import attitude_matrices, audit_inner_gains, default_inner_gains
from .outer_loop import GainAuditError, audit_outer_gains, default_outer_gains
from .sim import rk4_step


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: float
    bound: str

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.name}: measured {self.measured:.6g} ({self.bound})"


def check_gain_audit(outer=None, inner=None) -> CheckResult:
    """Theorem-style gain inequalities and 2x2 positivity at startup."""
    try:
        msgs = audit_outer_gains(outer or default_outer_gains())
        msgs += audit_inner_gains(inner or default_inner_gains())
        return CheckResult("gain audit", True, float(len(msgs)), "all conditions hold")
    except (GainAuditError, ValueError) as err:
        return CheckResult("gain audit", False, math.nan, str(err))


def check_first_order_bound(time_consts=(0.05, 0.1, 0.25),
                            amps=(0.5, 1.0, 2.0),
                            freqs=(1.0, 2.0, 5.0)) -> CheckResult:
    """Sup of |d_tilde| over a sinusoid grid vs max{|d(0)|, T*||d_dot||}.

    The bound is a continuous-time statement whose margin vanishes as
    (T*omega)^2, so the tracker ODE is integrated with the input evaluated
    at the RK4 stage times rather than held across the step.
    """
    worst = 0.0
    for tc in time_consts:
        for amp in amps:
            for w in freqs:
                dt = min(tc / 20.0, 2.0 * math.pi / w / 100.0)
                n = int(round(max(6.0 * tc, 6.0 * math.pi / w) / dt))
                bound = max(0.0, tc * amp * w)  # d(0) = 0 for a sine
                sup = _scalar_tracker_sup(tc, amp, w, dt, n)
                worst = max(worst, sup / bound)
    return CheckResult("first-order tracker bound (sinusoid grid)", worst <= 1.0,
                       worst, "sup|err|/bound <= 1")


@njit(cache=True)
def _scalar_tracker_sup(tc: float, amp: float, w: float, dt: float, n: int) -> float:
    """Sup |d_hat - d| for d = amp sin(wt); RK4 with stage-sampled input."""
    y = 0.0
    sup = 0.0
    for k in range(n):
        t = k * dt
        err = abs(y - amp * math.sin(w * t))
        if err > sup:
            sup = err
        k1 = (amp * math.sin(w * t) - y) / tc
        k2 = (amp * math.sin(w * (t + 0.5 * dt)) - (y + 0.5 * dt * k1)) / tc
        k3 = (amp * math.sin(w * (t + 0.5 * dt)) - (y + 0.5 * dt * k2)) / tc
        k4 = (amp * math.sin(w * (t + dt)) - (y + dt * k3)) / tc
        y += dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    return sup


def check_first_order_vanishing() -> CheckResult:
    """d = 1 - e^{-t} has a vanishing derivative, so the error must vanish."""
    tc, dt, t_end = 0.1, 1e-3, 8.0
    d_hat = 0.0
    t = 0.0
    for _ in range(int(t_end / dt)):
        d_hat = fo_do_advance(d_hat, 1.0 - math.exp(-t), tc, dt)
        t += dt
    err = abs(d_hat - (1.0 - math.exp(-t)))
    return CheckResult("first-order tracker error -> 0 for settling input",
                       err < 1e-3, err, "|err(8s)| < 1e-3")


def _ramp_lag(omega: float, slope: float = 2.0) -> float:
    dt = 0.02 / omega
    n = int(round((12.0 / omega) / dt))
    s, sd = 0.0, 0.0
    t = 0.0
    for _ in range(n):
        s, sd = cf2_advance(s, sd, slope * t, omega, 1.0, dt)
        t += dt
    return abs(s - slope * t)


def check_cf2_ramp_order(omegas=(5.0, 8.0, 25.0)) -> CheckResult:
    """Ramp lag halves when omega doubles (first-order in 1/omega)."""
    lo, hi = math.inf, 0.0
    for w in omegas:
        ratio = _ramp_lag(w) / _ramp_lag(2.0 * w)
        lo, hi = min(lo, ratio), max(hi, ratio)
    ok = 1.8 <= lo and hi <= 2.2
    measured = hi if abs(hi - 2.0) > abs(lo - 2.0) else lo
    return CheckResult("command-filter ramp-lag halving", ok, measured,
                       "ratio in [1.8, 2.2]")


def check_cf2_step_response() -> CheckResult:
    """Critically damped unit step matches 1 - (1 + wt) e^{-wt}."""
    omega, dt = 5.0, 1e-3
    s, sd = 0.0, 0.0
    worst = 0.0
    t = 0.0
    for _ in range(int(3.0 / dt)):
        s, sd = cf2_advance(s, sd, 1.0, omega, 1.0, dt)
        t += dt
        exact = 1.0 - (1.0 + omega * t) * math.exp(-omega * t)
        worst = max(worst, abs(s - exact))
    return CheckResult("command-filter critically damped step", worst < 1e-6,
                       worst, "max dev < 1e-6")


def observer_decay_rates(time_consts, d_const=1.5, dt=None):
    """Measured e-fold rates of the estimate error for a constant disturbance.

    Plant x_dot = f(t) + d jointly integrated with the observer; the error
    trajectory is fit over one decade of decay, per axis.
    """
    tcs = np.asarray(time_consts, dtype=float)
    n = tcs.size
    inv = 1.0 / tcs
    if dt is None:
        dt = tcs.min() / 50.0
    t_end = 3.0 * tcs.max()

    def f_known(t):
        return np.sin(0.7 * t + np.arange(n))

    def deriv(t, y):
        x, lam = y[:n], y[n:]
        dx = f_known(t) + d_const
        dlam = lambda_deriv(lam, x, f_known(t), inv)
        return np.concatenate([dx, dlam])

    x0 = np.linspace(-1.0, 1.0, n)
    y = np.concatenate([x0, lambda_matched_init(x0, inv)])
    steps = int(round(t_end / dt))
    ts = np.empty(steps + 1)
    errs = np.empty((steps + 1, n))
    for k in range(steps + 1):
        ts[k] = k * dt
        errs[k] = (y[n:] + inv * y[:n]) - d_const
        if k < steps:
            y = rk4_step(deriv, y, ts[k], dt)
    rates = np.empty(n)
    for i in range(n):
        e = np.abs(errs[:, i])
        lo = e[0] * 0.1  # fit over exactly one decade of decay
        sel = e > lo
        k_hi = int(np.argmin(sel)) if not sel.all() else steps
        coef = np.polyfit(ts[1:k_hi], np.log(e[1:k_hi]), 1)
        rates[i] = -coef[0]
    return rates


def check_observer_exactness() -> CheckResult:
    """Constant-disturbance estimate error decays with e-fold within 2% of T.

    Exercised at the four time-constant sets used by the controller: wake,
    loop, attitude, and rate observers.
    """
    sets = ((0.8, 0.5, 0.4), (0.25, 0.2, 0.2), (0.8, 0.8, 0.8),
            (0.02, 0.02, 0.02))
    worst = 0.0
    for tcs in sets:
        rates = observer_decay_rates(tcs)
        rel = np.abs(rates * np.asarray(tcs) - 1.0).max()
        worst = max(worst, float(rel))
    return CheckResult("lambda-observer e-fold vs time constant", worst < 0.02,
                       worst, "relative mismatch < 0.02")


def check_attitude_matrices(n_random: int = 300, seed: int = 7) -> CheckResult:
    """G Ginv = I and |det G| = sec(beta) over random attitudes."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_random):
        al, be, mu, ga = rng.uniform(-0.5, 0.5, size=4)
        G, Ginv, _ = attitude_matrices(al, be, mu, ga)
        worst = max(worst, float(np.abs(G @ Ginv - np.eye(3)).max()))
        worst = max(worst, abs(abs(np.linalg.det(G)) - 1.0 / math.cos(be)))
    return CheckResult("attitude kinematic matrix identities", worst < 1e-12,
                       worst, "max dev < 1e-12")


def check_rotation_orthonormality(n_random: int = 1000, seed: int = 11) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_random):
        mu, ga, chi = rng.uniform((-math.pi, -1.4, -math.pi), (math.pi, 1.4, math.pi))
        R = rotation_wind_to_inertial(mu, ga, chi)
        worst = max(worst, float(np.abs(R.T @ R - np.eye(3)).max()))
        worst = max(worst, abs(np.linalg.det(R) - 1.0))
    return CheckResult("wind-frame rotation orthonormality", worst < 1e-12,
                       worst, "max dev < 1e-12")


def rk4_attitude_error_ratio(dt: float = 0.02):
    """Global-error ratio of the coupled attitude subsystem under dt halving."""
    Kth = np.array([5.0, 5.0, 5.0])

    def deriv(t, y):
        th, om = y[:3], y[3:]
        G, _, Hm = attitude_matrices(th[1], th[2], th[0], 0.05)
        psi = np.array([0.02 * math.sin(t), 0.05 * math.cos(0.7 * t)])
        dth = G @ om + Hm @ psi
        dom = -Kth * om + np.array([0.6 * math.sin(2.0 * t),
                                    0.4 * math.cos(3.0 * t),
                                    0.5 * math.sin(1.3 * t)])
        return np.concatenate([dth, dom])

    def integrate(h):
        y = np.array([0.05, 0.04, 0.01, 0.0, 0.0, 0.0])
        t = 0.0
        for _ in range(int(round(2.0 / h))):
            y = rk4_step(deriv, y, t, h)
            t += h
        return y

    ref = integrate(dt / 16.0)
    e1 = np.linalg.norm(integrate(dt) - ref)
    e2 = np.linalg.norm(integrate(dt / 2.0) - ref)
    return e1 / e2


def check_rk4_order() -> CheckResult:
    ratio = rk4_attitude_error_ratio()
    return CheckResult("RK4 global-error ratio under dt halving",
                       12.0 <= ratio <= 20.0, ratio, "ratio in [12, 20]")


def run_all(outer=None, inner=None) -> list:
    return [
        check_gain_audit(outer, inner),
        check_rotation_orthonormality(),
        check_attitude_matrices(),
        check_cf2_step_response(),
        check_cf2_ramp_order(),
        check_first_order_bound(),
        check_first_order_vanishing(),
        check_observer_exactness(),
        check_rk4_order(),
    ]
