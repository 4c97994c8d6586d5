"""Attitude loop: wind-attitude kinematic matrices, attitude virtual input and
observer, desired body rates, rate command filters, the auxiliary attitude
state, the torque law with its own observer, and surface allocation.

Attitude error vector e_Theta = (mu_f - mu_d, alpha_f - alpha_d, beta_f);
sideslip is regulated to zero with no command filter of its own.
"""

import math
from typing import NamedTuple

import numpy as np
from numba import njit


class InnerGains(NamedTuple):
    K_mu: float
    K_alpha: float
    K_beta: float
    K_p: float
    K_q: float
    K_r: float
    c_p: float
    c_q: float
    c_r: float
    T_mu: float
    T_alpha: float
    T_beta: float
    T_p: float
    T_q: float
    T_r: float
    omega_mu: float
    omega_alpha: float
    omega_p: float
    omega_q: float
    omega_r: float
    zeta_mu: float
    zeta_alpha: float
    zeta_p: float
    zeta_q: float
    zeta_r: float
    da_max: float   # rad
    de_max: float
    dr_max: float


def default_inner_gains() -> InnerGains:
    return InnerGains(
        K_mu=5.0, K_alpha=5.0, K_beta=5.0, K_p=12.0, K_q=7.5, K_r=7.5,
        c_p=1e-5, c_q=1e-5, c_r=1e-5,
        T_mu=0.8, T_alpha=0.8, T_beta=0.8, T_p=0.02, T_q=0.02, T_r=0.02,
        omega_mu=8.0, omega_alpha=8.0, omega_p=25.0, omega_q=5.0, omega_r=5.0,
        zeta_mu=1.0, zeta_alpha=1.0, zeta_p=1.0, zeta_q=1.0, zeta_r=1.0,
        da_max=math.radians(21.5), de_max=math.radians(25.0),
        dr_max=math.radians(30.0))


def audit_inner_gains(g: InnerGains) -> list[str]:
    for name, v in g._asdict().items():
        if v <= 0.0:
            raise ValueError(f"inner gain {name} must be positive (got {v})")
    return [f"inner gains all positive (min={min(g):g})"]


#: sideslip magnitude beyond which sec(beta) is considered singular
BETA_SINGULAR = math.radians(85.0)


@njit(cache=True)
def attitude_matrices(alpha: float, beta: float, mu: float, gamma: float):
    """Kinematic matrices G (rates -> wind-attitude rates), G^-1 and H.

    e_Theta_dot = G Omega + H Psi_dot - Theta_d_dot with Psi = (gamma, chi).
    det G = -sec(beta); G^-1 is closed-form:
        [[cos a cos b, 0, sin a], [sin b, 1, 0], [sin a cos b, 0, -cos a]].
    """
    ca, sa = math.cos(alpha), math.sin(alpha)
    cb, sb = math.cos(beta), math.sin(beta)
    cm, sm = math.cos(mu), math.sin(mu)
    cg, sg = math.cos(gamma), math.sin(gamma)
    scb = 1.0 / cb
    tb = sb / cb
    G = np.empty((3, 3))
    G[0, 0] = ca * scb
    G[0, 1] = 0.0
    G[0, 2] = sa * scb
    G[1, 0] = -ca * tb
    G[1, 1] = 1.0
    G[1, 2] = -sa * tb
    G[2, 0] = sa
    G[2, 1] = 0.0
    G[2, 2] = -ca
    Ginv = np.empty((3, 3))
    Ginv[0, 0] = ca * cb
    Ginv[0, 1] = 0.0
    Ginv[0, 2] = sa
    Ginv[1, 0] = sb
    Ginv[1, 1] = 1.0
    Ginv[1, 2] = 0.0
    Ginv[2, 0] = sa * cb
    Ginv[2, 1] = 0.0
    Ginv[2, 2] = -ca
    H = np.empty((3, 2))
    H[0, 0] = cm * tb
    H[0, 1] = sg + sm * cg * tb
    H[1, 0] = -cm * scb
    H[1, 1] = -sm * cg * scb
    H[2, 0] = -sm
    H[2, 1] = cm * cg
    return G, Ginv, H


@njit(cache=True)
def desired_rates(u_theta_d: np.ndarray, Ginv: np.ndarray, H: np.ndarray,
                  psi_dot_hat: np.ndarray) -> np.ndarray:
    """Omega_d = G^-1 (u_Theta_d - H psi_dot_hat)."""
    rhs = np.empty(3)
    for i in range(3):
        rhs[i] = u_theta_d[i] - H[i, 0] * psi_dot_hat[0] - H[i, 1] * psi_dot_hat[1]
    out = np.empty(3)
    for i in range(3):
        out[i] = Ginv[i, 0] * rhs[0] + Ginv[i, 1] * rhs[1] + Ginv[i, 2] * rhs[2]
    return out


@njit(cache=True)
def rate_control(e_om: np.ndarray, eps_th: np.ndarray, G: np.ndarray,
                 om_c_dot: np.ndarray, d_hat_tau: np.ndarray,
                 K_om: np.ndarray, C_om: np.ndarray) -> np.ndarray:
    """u_tau_d = -K_Omega e_Omega - C_Omega G^T eps_Theta - d_hat_tau + Omega_c_dot."""
    out = np.empty(3)
    for i in range(3):
        gte = G[0, i] * eps_th[0] + G[1, i] * eps_th[1] + G[2, i] * eps_th[2]
        out[i] = -K_om[i] * e_om[i] - C_om[i] * gte - d_hat_tau[i] + om_c_dot[i]
    return out


@njit(cache=True)
def gyro_torque(p: float, q: float, r: float, Ix: float, Iy: float, Iz: float,
                Ixz: float) -> np.ndarray:
    """Omega x (I Omega) for the cross-coupled inertia matrix."""
    # I Omega with I = [[Ix,0,-Ixz],[0,Iy,0],[-Ixz,0,Iz]]
    h1 = Ix * p - Ixz * r
    h2 = Iy * q
    h3 = -Ixz * p + Iz * r
    out = np.empty(3)
    out[0] = q * h3 - r * h2
    out[1] = r * h1 - p * h3
    out[2] = p * h2 - q * h1
    return out


@njit(cache=True)
def surface_allocate(u_tau_d: np.ndarray, p: float, q: float, r: float,
                     tau0: np.ndarray, Mtau: np.ndarray,
                     Ix: float, Iy: float, Iz: float, Ixz: float,
                     da_max: float, de_max: float, dr_max: float):
    """delta_c = Mtau^-1 (I u_tau_d + Omega x I Omega - tau0), then clamp.

    Mtau is block sparse (elevator decoupled); the roll/yaw 2x2 inverts in
    closed form.  Returns (da, de, dr, saturated, singular).
    """
    gy = gyro_torque(p, q, r, Ix, Iy, Iz, Ixz)
    # I u_tau_d
    b0 = Ix * u_tau_d[0] - Ixz * u_tau_d[2] + gy[0] - tau0[0]
    b1 = Iy * u_tau_d[1] + gy[1] - tau0[1]
    b2 = -Ixz * u_tau_d[0] + Iz * u_tau_d[2] + gy[2] - tau0[2]
    det = Mtau[0, 0] * Mtau[2, 2] - Mtau[0, 2] * Mtau[2, 0]
    scale = abs(Mtau[0, 0] * Mtau[2, 2]) + abs(Mtau[0, 2] * Mtau[2, 0])
    if scale == 0.0 or abs(det) < 1e-9 * scale or Mtau[1, 1] == 0.0:
        return 0.0, 0.0, 0.0, 0, 1
    da = (Mtau[2, 2] * b0 - Mtau[0, 2] * b2) / det
    dr = (-Mtau[2, 0] * b0 + Mtau[0, 0] * b2) / det
    de = b1 / Mtau[1, 1]
    sat = 0
    if da > da_max:
        da = da_max
        sat = 1
    elif da < -da_max:
        da = -da_max
        sat = 1
    if de > de_max:
        de = de_max
        sat = 1
    elif de < -de_max:
        de = -de_max
        sat = 1
    if dr > dr_max:
        dr = dr_max
        sat = 1
    elif dr < -dr_max:
        dr = -dr_max
        sat = 1
    return da, de, dr, sat, 0


@njit(cache=True)
def realized_rate_input(da: float, de: float, dr: float, p: float, q: float,
                        r: float, tau0: np.ndarray, Mtau: np.ndarray,
                        Ix: float, Iy: float, Iz: float, Ixz: float) -> np.ndarray:
    """u_tau implied by the clamped surfaces: I^-1 (tau0 + Mtau delta - Omega x I Omega).

    Equals the commanded u_tau_d exactly whenever no surface limit is active;
    the rate observer is stepped with this value.
    """
    t0 = tau0[0] + Mtau[0, 0] * da + Mtau[0, 2] * dr
    t1 = tau0[1] + Mtau[1, 1] * de
    t2 = tau0[2] + Mtau[2, 0] * da + Mtau[2, 2] * dr
    gy = gyro_torque(p, q, r, Ix, Iy, Iz, Ixz)
    m0 = t0 - gy[0]
    m1 = t1 - gy[1]
    m2 = t2 - gy[2]
    Gi = Ix * Iz - Ixz * Ixz
    out = np.empty(3)
    out[0] = (Iz * m0 + Ixz * m2) / Gi
    out[1] = m1 / Iy
    out[2] = (Ixz * m0 + Ix * m2) / Gi
    return out
