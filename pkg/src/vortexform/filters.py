"""Estimator primitives reused by every loop of the controller.

Two building blocks:

* a second-order command filter producing a smoothed command and its exact
  derivative,
      s_c_ddot = -omega^2 (s_c - input) - 2 zeta omega s_c_dot
  used to avoid analytic differentiation of virtual inputs, and

* a first-order "lambda" disturbance observer
      d_hat = lam + T^-1 x,
      lam_dot = -T^-1 (lam + T^-1 x + f_known)
  whose estimate error obeys d_tilde_dot = -T^-1 d_tilde whenever the
  observed state satisfies x_dot = f_known + d with constant d.

All continuous states advance with the same fixed-step RK4 as the plant
(inputs held across the step), keeping runs reproducible bit for bit.
The *_deriv functions expose the raw right-hand sides so tests can
integrate observer + plant jointly as one ODE.
"""

from dataclasses import dataclass, field

import numpy as np
from numba import njit

#: hard ceiling on dt*omega for the RK4-advanced command filter
CF2_STABILITY_LIMIT = 0.5


class FilterConfigError(ValueError):
    """Raised when a filter/observer is configured outside its stable range."""


# ---------------------------------------------------------------------------
# second-order command filter
# ---------------------------------------------------------------------------

@njit(cache=True)
def cf2_deriv(s_c: float, s_c_dot: float, u: float, omega: float, zeta: float):
    """Right-hand side of the command-filter state equation."""
    return s_c_dot, -omega * omega * (s_c - u) - 2.0 * zeta * omega * s_c_dot


@njit(cache=True)
def cf2_advance(s_c: float, s_c_dot: float, u: float, omega: float, zeta: float, dt: float):
    """One RK4 step of the command filter with the input held at u."""
    k1, l1 = cf2_deriv(s_c, s_c_dot, u, omega, zeta)
    k2, l2 = cf2_deriv(s_c + 0.5 * dt * k1, s_c_dot + 0.5 * dt * l1, u, omega, zeta)
    k3, l3 = cf2_deriv(s_c + 0.5 * dt * k2, s_c_dot + 0.5 * dt * l2, u, omega, zeta)
    k4, l4 = cf2_deriv(s_c + dt * k3, s_c_dot + dt * l3, u, omega, zeta)
    s_n = s_c + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    sd_n = s_c_dot + dt * (l1 + 2.0 * l2 + 2.0 * l3 + l4) / 6.0
    return s_n, sd_n


@dataclass
class CommandFilter2:
    """Second-order filter state (s_c, s_c_dot) with fixed (omega, zeta)."""

    omega: float
    zeta: float
    s_c: float = 0.0
    s_c_dot: float = 0.0

    def __post_init__(self):
        if not (self.omega > 0.0 and self.zeta > 0.0):
            raise FilterConfigError(
                f"command filter needs omega, zeta > 0 (got {self.omega}, {self.zeta})")

    def step(self, u: float, dt: float):
        """Advance one RK4 step; returns the new (s_c, s_c_dot)."""
        if dt <= 0.0:
            raise FilterConfigError(f"dt must be positive (got {dt})")
        if dt * self.omega >= CF2_STABILITY_LIMIT:
            raise FilterConfigError(
                f"filter under-resolved: dt*omega = {dt * self.omega:.3f} >= "
                f"{CF2_STABILITY_LIMIT}")
        self.s_c, self.s_c_dot = cf2_advance(self.s_c, self.s_c_dot, u, self.omega,
                                             self.zeta, dt)
        return self.s_c, self.s_c_dot


def cf2_init(omega: float, zeta: float, s0: float) -> CommandFilter2:
    """Filter matched to its first input: s_c(0) = s0, rate 0 (no peaking)."""
    return CommandFilter2(omega=omega, zeta=zeta, s_c=s0, s_c_dot=0.0)


# ---------------------------------------------------------------------------
# first-order disturbance filter (direct form)
# ---------------------------------------------------------------------------

@njit(cache=True)
def fo_do_advance(d_hat: float, d: float, time_const: float, dt: float) -> float:
    """One RK4 step of T * d_hat_dot = -d_hat + d with d held."""
    inv = 1.0 / time_const
    k1 = inv * (d - d_hat)
    k2 = inv * (d - (d_hat + 0.5 * dt * k1))
    k3 = inv * (d - (d_hat + 0.5 * dt * k2))
    k4 = inv * (d - (d_hat + dt * k3))
    return d_hat + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0


@dataclass
class FirstOrderDO:
    """First-order tracker of a measured disturbance signal."""

    time_const: float
    d_hat: float = 0.0

    def __post_init__(self):
        if self.time_const <= 0.0:
            raise FilterConfigError(f"time constant must be > 0 (got {self.time_const})")

    def step(self, d_measured: float, dt: float) -> float:
        if not 0.0 < dt < self.time_const:
            raise FilterConfigError(
                f"dt must satisfy 0 < dt < time_const (dt={dt}, T={self.time_const})")
        self.d_hat = fo_do_advance(self.d_hat, d_measured, self.time_const, dt)
        return self.d_hat


# ---------------------------------------------------------------------------
# lambda-pattern disturbance observer (vector form)
# ---------------------------------------------------------------------------

@njit(cache=True)
def lambda_deriv(lam: np.ndarray, x: np.ndarray, f_known: np.ndarray,
                 inv_tc: np.ndarray) -> np.ndarray:
    """lam_dot = -T^-1 (lam + T^-1 x + f_known), diagonal T."""
    n = lam.shape[0]
    out = np.empty(n)
    for i in range(n):
        out[i] = -inv_tc[i] * (lam[i] + inv_tc[i] * x[i] + f_known[i])
    return out


@njit(cache=True)
def lambda_advance(lam: np.ndarray, x: np.ndarray, f_known: np.ndarray,
                   inv_tc: np.ndarray, dt: float) -> np.ndarray:
    """One RK4 step of the lambda state with (x, f_known) held."""
    k1 = lambda_deriv(lam, x, f_known, inv_tc)
    k2 = lambda_deriv(lam + 0.5 * dt * k1, x, f_known, inv_tc)
    k3 = lambda_deriv(lam + 0.5 * dt * k2, x, f_known, inv_tc)
    k4 = lambda_deriv(lam + dt * k3, x, f_known, inv_tc)
    return lam + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0


@njit(cache=True)
def lambda_advance_interp(lam: np.ndarray, x0: np.ndarray, x1: np.ndarray,
                          f_known: np.ndarray, inv_tc: np.ndarray,
                          dt: float) -> np.ndarray:
    """One RK4 step with the measured state interpolated from x0 to x1.

    Stepping the observer against the state trajectory rather than a frozen
    sample removes the rate-proportional estimate bias x_dot*dt/(2T) of the
    held form; exact for states moving at constant rate over the step.
    """
    xm = 0.5 * (x0 + x1)
    k1 = lambda_deriv(lam, x0, f_known, inv_tc)
    k2 = lambda_deriv(lam + 0.5 * dt * k1, xm, f_known, inv_tc)
    k3 = lambda_deriv(lam + 0.5 * dt * k2, xm, f_known, inv_tc)
    k4 = lambda_deriv(lam + dt * k3, x1, f_known, inv_tc)
    return lam + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0


@njit(cache=True)
def lambda_estimate(lam: np.ndarray, x: np.ndarray, inv_tc: np.ndarray) -> np.ndarray:
    """Current estimate d_hat = lam + T^-1 x."""
    n = lam.shape[0]
    out = np.empty(n)
    for i in range(n):
        out[i] = lam[i] + inv_tc[i] * x[i]
    return out


@njit(cache=True)
def lambda_matched_init(x0: np.ndarray, inv_tc: np.ndarray) -> np.ndarray:
    """lam(0) = -T^-1 x(0), so the initial estimate is exactly zero."""
    n = x0.shape[0]
    out = np.empty(n)
    for i in range(n):
        out[i] = -inv_tc[i] * x0[i]
    return out


@dataclass
class LambdaObserver:
    """Disturbance observer d_hat = lam + T^-1 x for a diagonal T.

    `time_consts` is the diagonal of T.  The caller supplies, at every step,
    the measured state x and the modeled part f_known of its derivative; the
    induced estimate then tracks d = x_dot - f_known with first-order lag T.
    """

    time_consts: np.ndarray
    lam: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.time_consts = np.asarray(self.time_consts, dtype=float)
        if np.any(self.time_consts <= 0.0):
            raise FilterConfigError("all observer time constants must be > 0")
        self._inv = 1.0 / self.time_consts
        if self.lam is None:
            self.lam = np.zeros_like(self.time_consts)
        else:
            self.lam = np.asarray(self.lam, dtype=float)
            if self.lam.shape != self.time_consts.shape:
                raise ValueError("lam and time_consts dimensions disagree")

    def init_matched(self, x0: np.ndarray) -> "LambdaObserver":
        """Set lam = -T^-1 x0; d_hat immediately after is zero."""
        x0 = np.asarray(x0, dtype=float)
        if x0.shape != self.time_consts.shape:
            raise ValueError("x0 dimension disagrees with observer")
        self.lam = lambda_matched_init(x0, self._inv)
        return self

    def d_hat(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return lambda_estimate(self.lam, x, self._inv)

    def step(self, x: np.ndarray, f_known: np.ndarray, dt: float) -> np.ndarray:
        """Advance one RK4 step with held inputs; returns the new estimate."""
        x = np.asarray(x, dtype=float)
        f_known = np.asarray(f_known, dtype=float)
        if x.shape != self.time_consts.shape or f_known.shape != self.time_consts.shape:
            raise ValueError("x/f_known dimensions disagree with observer")
        if dt >= self.time_consts.min():
            raise FilterConfigError(
                f"dt={dt} must stay below the smallest time constant "
                f"{self.time_consts.min()}")
        self.lam = lambda_advance(self.lam, x, f_known, self._inv, dt)
        return lambda_estimate(self.lam, x, self._inv)
