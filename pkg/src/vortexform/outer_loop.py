"""Position/guidance loop: wake observer wiring, corrected air state, track
errors, desired speed and flight-path angle, virtual inputs with disturbance
compensation, auxiliary states, and the inversion to (T_c, alpha_d, mu_d).

The wake observer watches inertial position with the air-relative kinematics
as the modeled derivative; the loop observer watches (V, gamma, chi) with the
realized virtual input (command-rate feedforward included, post-saturation)
as the modeled derivative, so both estimate errors decay first-order in
their time constants.
"""

import math
from typing import NamedTuple

import numpy as np
from numba import njit

from .vehicle import GRAV


class OuterGains(NamedTuple):
    K_x: float
    K_z: float
    K_V: float
    K_gamma: float
    K_chi: float
    c_V: float        # epsilon_x coupling gain (C_x of the parameter table)
    c_chi: float      # e_y coupling gain (C_y of the parameter table)
    T_Wx: float
    T_Wy: float
    T_Wz: float
    T_V: float
    T_gamma: float
    T_chi: float
    omega_V: float
    omega_gamma: float
    zeta_V: float
    zeta_gamma: float
    omega_chi_r: float   # chi_r rate-estimation filter
    zeta_chi_r: float
    omega_chi_f: float   # corrected-heading rate filter
    zeta_chi_f: float
    alpha_d_max: float   # rad
    mu_d_max: float      # rad


def default_outer_gains() -> OuterGains:
    return OuterGains(
        K_x=0.3, K_z=0.2, K_V=1.75, K_gamma=0.75, K_chi=1.75,
        c_V=1e-5, c_chi=1e-4,
        T_Wx=0.8, T_Wy=0.5, T_Wz=0.4, T_V=0.25, T_gamma=0.2, T_chi=0.2,
        omega_V=8.0, omega_gamma=8.0, zeta_V=1.0, zeta_gamma=1.0,
        omega_chi_r=5.0, zeta_chi_r=1.0, omega_chi_f=5.0, zeta_chi_f=1.0,
        alpha_d_max=math.radians(25.0), mu_d_max=math.radians(60.0))


class GainAuditError(ValueError):
    """A closed-loop stability condition on the gain set failed."""


def audit_outer_gains(g: OuterGains) -> list[str]:
    """Stability conditions on the outer gain set; raises on violation.

    Checks positivity, the two command-filter/auxiliary coupling conditions
    K_x < 2 zeta_V omega_V and K_z < 2 zeta_gamma omega_gamma, and positive
    definiteness of the three 2x2 blocks of the loop's quadratic form:
    [[2K_chi, -1], [-1, 1/T_chi]], [[K_V, -1/2], [-1/2, 1/T_V]],
    [[K_gamma, -1/2], [-1/2, 1/T_gamma]].  Returns pass messages.
    """
    msgs = []
    for name, v in g._asdict().items():
        if v <= 0.0:
            raise GainAuditError(f"outer gain {name} must be positive (got {v})")
    if not g.K_x < 2.0 * g.zeta_V * g.omega_V:
        raise GainAuditError(
            f"K_x={g.K_x} violates K_x < 2*zeta_V*omega_V = {2 * g.zeta_V * g.omega_V}")
    msgs.append(f"K_x={g.K_x} < 2*zeta_V*omega_V={2 * g.zeta_V * g.omega_V}")
    if not g.K_z < 2.0 * g.zeta_gamma * g.omega_gamma:
        raise GainAuditError(
            f"K_z={g.K_z} violates K_z < 2*zeta_gamma*omega_gamma = "
            f"{2 * g.zeta_gamma * g.omega_gamma}")
    msgs.append(f"K_z={g.K_z} < 2*zeta_gamma*omega_gamma={2 * g.zeta_gamma * g.omega_gamma}")
    blocks = (("chi", 2.0 * g.K_chi, 1.0, g.T_chi),
              ("V", g.K_V, 0.5, g.T_V),
              ("gamma", g.K_gamma, 0.5, g.T_gamma))
    for name, a, off, tc in blocks:
        det = a / tc - off * off
        if det <= 0.0:
            raise GainAuditError(f"{name}-channel 2x2 damping block not positive "
                                 f"definite (det={det})")
        msgs.append(f"{name}-block det={det:.3f} > 0")
    return msgs


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

@njit(cache=True)
def air_kinematics(V: float, gam: float, chi: float) -> np.ndarray:
    """Modeled position derivative (V cg cc, V cg sc, -V sg)."""
    out = np.empty(3)
    cg = math.cos(gam)
    out[0] = V * cg * math.cos(chi)
    out[1] = V * cg * math.sin(chi)
    out[2] = -V * math.sin(gam)
    return out


@njit(cache=True)
def corrected_air_state(V: float, gam: float, chi: float,
                        Wx: float, Wy: float, Wz: float):
    """Ground-referenced (V_hat, gamma_hat, chi_hat, delta_V) including the wake estimate."""
    cg = math.cos(gam)
    gx = V * cg * math.cos(chi) + Wx
    gy = V * cg * math.sin(chi) + Wy
    gz = -V * math.sin(gam) + Wz
    V_hat = math.sqrt(gx * gx + gy * gy + gz * gz)
    arg = -gz / V_hat
    if arg > 1.0:
        arg = 1.0
    elif arg < -1.0:
        arg = -1.0
    gam_hat = math.asin(arg)
    arg2 = (Wy * math.cos(chi) - Wx * math.sin(chi)) / (V_hat * math.cos(gam_hat))
    if arg2 > 1.0:
        arg2 = 1.0
    elif arg2 < -1.0:
        arg2 = -1.0
    chi_hat = chi + math.asin(arg2)
    return V_hat, gam_hat, chi_hat, V_hat - V


@njit(cache=True)
def desired_speed_fpa(e_x: float, e_z: float, e_chi: float, V_r: float,
                      gam_r: float, gam_hat: float, delta_V: float,
                      W_hat_z: float, V_f: float, K_x: float, K_z: float):
    """Desired airspeed and flight-path angle.

    V_d = (-K_x e_x + V_r cos(gam_r) cos(e_chi)) / cos(gam_hat) - delta_V
    gam_d = asin((K_z e_z + V_r sin(gam_r) + W_hat_z) / V_f), argument clipped.
    Returns (V_d, gam_d, clamped).
    """
    V_d = (-K_x * e_x + V_r * math.cos(gam_r) * math.cos(e_chi)) \
        / math.cos(gam_hat) - delta_V
    arg = (K_z * e_z + V_r * math.sin(gam_r) + W_hat_z) / V_f
    clamped = 0
    if arg > 1.0:
        arg = 1.0
        clamped = 1
    elif arg < -1.0:
        arg = -1.0
        clamped = 1
    return V_d, math.asin(arg), clamped


@njit(cache=True)
def virtual_inputs_nominal(e_V: float, e_gam: float, e_chi: float,
                           eps_x: float, e_y: float, V_r: float, gam_r: float,
                           gam_hat: float, K_V: float, K_gamma: float,
                           K_chi: float, c_V: float, c_chi: float):
    """Baseline virtual inputs (u_V0, u_gamma0, u_chi0) and the coupling norm H."""
    H = math.sqrt(eps_x * eps_x + e_y * e_y + 1.0)
    u_V0 = -K_V * e_V - c_V * eps_x * math.cos(gam_hat) / H
    u_g0 = -K_gamma * e_gam
    u_c0 = -K_chi * math.sin(0.5 * e_chi) \
        - c_chi * e_y * V_r * math.cos(gam_r) * math.cos(0.5 * e_chi) / H
    return u_V0, u_g0, u_c0, H


@njit(cache=True)
def aux_deriv(xi_x: float, xi_z: float, V_c: float, V_d: float, gam_hat: float,
              gam_d: float, gam_f: float, V_f: float, K_x: float, K_z: float):
    """Auxiliary-state derivatives absorbing command-filter and attitude gaps."""
    dxx = -K_x * xi_x + (V_c - V_d) * math.cos(gam_hat)
    dxz = -K_z * xi_z + V_f * (math.sin(gam_d) - math.sin(gam_f))
    return dxx, dxz


@njit(cache=True)
def aux_step(xi_x: float, xi_z: float, V_c: float, V_d: float, gam_hat: float,
             gam_d: float, gam_f: float, V_f: float, K_x: float, K_z: float,
             dt: float):
    """One RK4 step of both auxiliary ODEs with held inputs."""
    k1x, k1z = aux_deriv(xi_x, xi_z, V_c, V_d, gam_hat, gam_d, gam_f, V_f, K_x, K_z)
    k2x, k2z = aux_deriv(xi_x + 0.5 * dt * k1x, xi_z + 0.5 * dt * k1z,
                         V_c, V_d, gam_hat, gam_d, gam_f, V_f, K_x, K_z)
    k3x, k3z = aux_deriv(xi_x + 0.5 * dt * k2x, xi_z + 0.5 * dt * k2z,
                         V_c, V_d, gam_hat, gam_d, gam_f, V_f, K_x, K_z)
    k4x, k4z = aux_deriv(xi_x + dt * k3x, xi_z + dt * k3z,
                         V_c, V_d, gam_hat, gam_d, gam_f, V_f, K_x, K_z)
    return (xi_x + dt * (k1x + 2.0 * k2x + 2.0 * k3x + k4x) / 6.0,
            xi_z + dt * (k1z + 2.0 * k2z + 2.0 * k3z + k4z) / 6.0)


@njit(cache=True)
def allocate(u_V: float, u_gam: float, u_chi: float, alpha_f: float,
             beta_f: float, gam_f: float, V_f: float, T: float,
             D_bar: float, L_bar0: float, L_bar_a: float, m: float,
             T_max: float, alpha_max: float, mu_max: float):
    """Invert the virtual inputs into commanded thrust, AoA and bank.

    T_c  = (m (u_V + g sin gam) + D_bar) / (cos alpha cos beta)
    F    = sqrt((u_gam + g cos(gam)/V)^2 + u_chi^2 cos^2 gam) = (L+T sin a)/(mV)
    a_d  = (m V F - T sin alpha - L0) / L_alpha
    mu_d = atan2(m V u_chi cos gam, m V u_gam + m g cos gam)
    Outputs clamped to the command envelope; returns (T_c, a_d, mu_d, saturated).
    """
    cacb = math.cos(alpha_f) * math.cos(beta_f)
    T_c = (m * (u_V + GRAV * math.sin(gam_f)) + D_bar) / cacb
    cg = math.cos(gam_f)
    gy = u_gam + GRAV * cg / V_f
    F = math.sqrt(gy * gy + u_chi * u_chi * cg * cg)
    a_d = (m * V_f * F - T * math.sin(alpha_f) - L_bar0) / L_bar_a
    mu_d = math.atan2(m * V_f * u_chi * cg, m * V_f * u_gam + m * GRAV * cg)
    sat = 0
    if T_c < 0.0:
        T_c = 0.0
        sat = 1
    elif T_c > T_max:
        T_c = T_max
        sat = 1
    if a_d > alpha_max:
        a_d = alpha_max
        sat = 1
    elif a_d < -alpha_max:
        a_d = -alpha_max
        sat = 1
    if mu_d > mu_max:
        mu_d = mu_max
        sat = 1
    elif mu_d < -mu_max:
        mu_d = -mu_max
        sat = 1
    return T_c, a_d, mu_d, sat


@njit(cache=True)
def realized_virtual_inputs(T_c: float, alpha_d: float, mu_d: float,
                            alpha_f: float, beta_f: float, gam_f: float,
                            V_f: float, T: float, D_bar: float, L_bar0: float,
                            L_bar_a: float, m: float):
    """Virtual inputs implied by the (possibly clamped) outer commands.

    Forward map of :func:`allocate`; feeding these to the loop observer keeps
    its modeled derivative consistent with what was actually commanded, which
    is the anti-windup path when a limit is active.
    """
    u_V = (T_c * math.cos(alpha_f) * math.cos(beta_f) - D_bar) / m \
        - GRAV * math.sin(gam_f)
    F = (L_bar0 + L_bar_a * alpha_d + T * math.sin(alpha_f)) / (m * V_f)
    cg = math.cos(gam_f)
    u_gam = F * math.cos(mu_d) - GRAV * cg / V_f
    u_chi = F * math.sin(mu_d) / cg
    return u_V, u_gam, u_chi
