"""Leader trajectory generation and the follower's reference at dynamic operation.

The leader flies a piecewise profile of (airspeed, flight path angle,
heading rate) segments blended with cosine ramps, integrated kinematically.
The follower reference is the leader position plus the formation offset
rotated into inertial axes, with the offset components passed through
second-order command filters so the reference velocity is available without
numerical differentiation.  Heading signals are continuous by construction
(integrated, never wrapped) so the asin expressions below stay on branch.
"""

import math
from typing import NamedTuple

import numpy as np
from numba import njit

from .frames import rotation_wind_to_inertial
from .vehicle import GRAV


class LeaderProfile(NamedTuple):
    """Piecewise leader profile; arrays are one entry per segment."""
    t_end: np.ndarray     # cumulative segment end times, s
    V: np.ndarray         # airspeed per segment, m/s
    gamma: np.ndarray     # flight path angle per segment, rad
    chi_dot: np.ndarray   # heading rate per segment, rad/s
    ramp: float           # cosine blend duration at junctions, s


def make_profile(segments, ramp: float = 2.0) -> LeaderProfile:
    """Build a profile from (duration_s, V, gamma_rad, chi_dot_rad_s) tuples."""
    if not segments:
        raise ValueError("profile needs at least one segment")
    durs = np.array([s[0] for s in segments], dtype=float)
    if np.any(durs <= 0.0):
        raise ValueError("segment durations must be positive")
    if ramp < 0.0 or (len(segments) > 1 and ramp >= durs.min()):
        raise ValueError("ramp must be shorter than every segment")
    return LeaderProfile(
        t_end=np.cumsum(durs),
        V=np.array([s[1] for s in segments], dtype=float),
        gamma=np.array([s[2] for s in segments], dtype=float),
        chi_dot=np.array([s[3] for s in segments], dtype=float),
        ramp=float(ramp))


def scenario1_profile(V: float = 200.0) -> LeaderProfile:
    """Level flight, then a descending coordinated turn, then level again.

    0-35 s straight and level; 35-145 s heading rate +0.75 deg/s with
    gamma = -1.5 deg; 145 s onward level, with 2 s cosine ramps.  Keeps the
    coordinated bank below 17 deg at the speeds of interest.
    """
    turn_rate = math.radians(0.75)
    descent = math.radians(-1.5)
    return make_profile([(35.0, V, 0.0, 0.0),
                         (110.0, V, descent, turn_rate),
                         (35.0, V, 0.0, 0.0)], ramp=3.0)


@njit(cache=True)
def leader_signals(t: float, t_end: np.ndarray, Vs: np.ndarray,
                   gammas: np.ndarray, chi_dots: np.ndarray, ramp: float):
    """(V_l, gamma_l, chi_dot_l) at time t with cosine-blended junctions."""
    n = t_end.shape[0]
    k = 0
    while k < n - 1 and t >= t_end[k]:
        k += 1
    V = Vs[k]
    gam = gammas[k]
    cd = chi_dots[k]
    if ramp > 0.0 and k > 0:
        # blend in from the previous segment over [t_junction, t_junction+ramp],
        # so each segment's declared values hold exactly up to its end
        t0 = t_end[k - 1]
        if t < t0 + ramp:
            w = 0.5 * (1.0 - math.cos(math.pi * (t - t0) / ramp))
            V = (1.0 - w) * Vs[k - 1] + w * V
            gam = (1.0 - w) * gammas[k - 1] + w * gam
            cd = (1.0 - w) * chi_dots[k - 1] + w * cd
    return V, gam, cd


@njit(cache=True)
def leader_bank(V: float, gamma: float, chi_dot: float) -> float:
    """Coordinated-turn bank angle tan(mu) = V chi_dot cos(gamma) / g."""
    return math.atan(V * chi_dot * math.cos(gamma) / GRAV)


@njit(cache=True)
def leader_kin_deriv(ls: np.ndarray, V: float, gamma: float, chi_dot: float) -> np.ndarray:
    """Derivative of the leader kinematic state [x, y, z, chi]."""
    out = np.empty(4)
    cg = math.cos(gamma)
    out[0] = V * cg * math.cos(ls[3])
    out[1] = V * cg * math.sin(ls[3])
    out[2] = -V * math.sin(gamma)
    out[3] = chi_dot
    return out


@njit(cache=True)
def leader_rk4(ls: np.ndarray, t: float, dt: float, t_end: np.ndarray,
               Vs: np.ndarray, gammas: np.ndarray, chi_dots: np.ndarray,
               ramp: float) -> np.ndarray:
    """RK4 step of the leader kinematics with analytic in-step signals."""
    V1, g1, c1 = leader_signals(t, t_end, Vs, gammas, chi_dots, ramp)
    k1 = leader_kin_deriv(ls, V1, g1, c1)
    V2, g2, c2 = leader_signals(t + 0.5 * dt, t_end, Vs, gammas, chi_dots, ramp)
    k2 = leader_kin_deriv(ls + 0.5 * dt * k1, V2, g2, c2)
    k3 = leader_kin_deriv(ls + 0.5 * dt * k2, V2, g2, c2)
    V4, g4, c4 = leader_signals(t + dt, t_end, Vs, gammas, chi_dots, ramp)
    k4 = leader_kin_deriv(ls + dt * k3, V4, g4, c4)
    return ls + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0


@njit(cache=True)
def offset_inertial(r_x: float, r_y: float, mu_l: float, gamma_l: float,
                    chi_l: float):
    """Rotate the static wind-frame offset (r_x, r_y, 0) to inertial axes."""
    R = rotation_wind_to_inertial(mu_l, gamma_l, chi_l)
    return (R[0, 0] * r_x + R[0, 1] * r_y,
            R[1, 0] * r_x + R[1, 1] * r_y,
            R[2, 0] * r_x + R[2, 1] * r_y)


@njit(cache=True)
def reference_state(x_l: float, y_l: float, z_l: float,
                    xd_l: float, yd_l: float, zd_l: float, chi_l: float,
                    lc: np.ndarray, lc_dot: np.ndarray):
    """Reference position/velocity triplet from leader state and filtered offsets.

    Returns (x_r, y_r, z_r, V_r, gamma_r, chi_r, clamped) where `clamped`
    flags an asin argument that had to be clipped to [-1, 1].
    """
    x_r = x_l + lc[0]
    y_r = y_l + lc[1]
    z_r = z_l + lc[2]
    xd = xd_l + lc_dot[0]
    yd = yd_l + lc_dot[1]
    zd = zd_l + lc_dot[2]
    V_r = math.sqrt(xd * xd + yd * yd + zd * zd)
    clamped = 0
    arg = -zd / V_r
    if arg > 1.0:
        arg = 1.0
        clamped = 1
    elif arg < -1.0:
        arg = -1.0
        clamped = 1
    gam_r = math.asin(arg)
    arg2 = (-lc_dot[0] * math.sin(chi_l) + lc_dot[1] * math.cos(chi_l)) \
        / (V_r * math.cos(gam_r))
    if arg2 > 1.0:
        arg2 = 1.0
        clamped = 1
    elif arg2 < -1.0:
        arg2 = -1.0
        clamped = 1
    chi_r = chi_l + math.asin(arg2)
    return x_r, y_r, z_r, V_r, gam_r, chi_r, clamped


def profile_rate_bounds(prof: LeaderProfile, dt: float = 0.01):
    """Max |gamma_dot_l|, |chi_dot_l| over the profile (boundedness audit)."""
    ts = np.arange(0.0, prof.t_end[-1], dt)
    g = np.empty_like(ts)
    c = np.empty_like(ts)
    for i, t in enumerate(ts):
        _, g[i], c[i] = leader_signals(t, prof.t_end, prof.V, prof.gamma,
                                       prof.chi_dot, prof.ramp)
    gdot = np.abs(np.diff(g)) / dt
    return float(gdot.max(initial=0.0)), float(np.abs(c).max())
