"""Trailing-vortex wake of the leader: induced velocities and force/moment increments.

Horseshoe substitute for a rolled-up wake: two semi-infinite vortex lines
trail straight back from the leader's wing at lateral stations +/- b'/2,
b' = (pi/4) b (elliptic loading), with Lamb-Oseen core regularization and
circulation Gamma = m g / (rho V b').  Everything is evaluated quasi-
statically in the leader's instantaneous wind frame; points ahead of the
leader see zero wake.

Sign conventions (leader wind frame, z down): the starboard vortex carries
+Gamma so the flow between the tips is downwash (W_z > 0) and outboard of
either tip is upwash (W_z < 0) - the region a trailing aircraft exploits.

Force/moment increments come from strip theory over the follower wing.
The local angle-of-attack perturbation per strip uses the *deviation* of
the induced velocity from its CG value: the CG component is already
carried by the position kinematics of the truth model, so only the
nonuniform part may load the wing, otherwise the uniform updraft would be
counted twice.
"""

import math
from typing import NamedTuple

import numpy as np
from numba import njit

from .vehicle import GRAV, air_density


class WakeParams(NamedTuple):
    circulation: float    # Gamma, m^2/s
    vortex_span: float    # b' = (pi/4) b, m
    core_radius: float    # Lamb-Oseen core, m (flow transport)
    load_radius: float    # smoothing core for surface loads, m
    n_strips: int         # strip count for the increment integrals
    rollup_length: float  # downstream distance for the sheet to roll up, m


def wake_params(veh, rho: float, V: float, n_strips: int = 48,
                core_fraction: float = 0.05, load_core_fraction: float = 0.2,
                rollup_spans: float = 2.0) -> WakeParams:
    """Wake of a leader with the given vehicle at (rho, V) in level trim.

    Two core radii: the sharp Lamb core regularizes the transported flow
    field, while surface-load integrals use a wing-scale smoothing radius,
    standing in for the chordwise/lifting-surface averaging a panel-method
    increment map would exhibit.
    """
    span = math.pi / 4.0 * veh.b
    gamma = veh.m * GRAV / (rho * V * span)
    return WakeParams(circulation=gamma, vortex_span=span,
                      core_radius=core_fraction * veh.b,
                      load_radius=load_core_fraction * veh.b,
                      n_strips=n_strips, rollup_length=rollup_spans * veh.b)


@njit(cache=True)
def _leg_velocity(px: float, py: float, pz: float, ay: float, gamma: float,
                  rc: float):
    """Induced velocity of one semi-infinite trailing leg.

    Leg starts at (0, ay, 0), runs downstream along -x, circulation gamma
    about that direction.  Closed form of the Biot-Savart integral with a
    Lamb-Oseen factor on the perpendicular distance; written with the
    rationalized denominator (|r| - r_x) that stays well-conditioned in the
    wake region r_x < 0.
    """
    rx = px
    ry = py - ay
    rz = pz
    h2 = ry * ry + rz * rz
    rmag = math.sqrt(rx * rx + h2)
    if h2 < 1e-30:
        return 0.0, 0.0, 0.0
    core = 1.0 - math.exp(-h2 / (rc * rc))
    scale = gamma / (4.0 * math.pi) * core * (rmag - rx) / (rmag * h2)
    # direction u = (-1, 0, 0): u x r = (0, rz, -ry)
    return 0.0, scale * rz, -scale * ry


@njit(cache=True)
def induced_velocity_wind(px: float, py: float, pz: float, gamma: float,
                          span: float, rc: float, rollup: float):
    """Wake velocity at a point of the leader wind frame (leader at origin).

    The Gaussian onset factor 1 - exp(-(x/rollup)^2) stands in for the
    finite distance the trailing sheet needs to roll up into the two
    concentrated cores; immediately aft of the wing the distributed sheet
    produces far weaker velocities than the rolled-up pair would.
    """
    if gamma == 0.0 or px >= 0.0:
        return 0.0, 0.0, 0.0
    onset = 1.0 - math.exp(-(px / rollup) ** 2)
    vx1, vy1, vz1 = _leg_velocity(px, py, pz, +0.5 * span, gamma, rc)
    vx2, vy2, vz2 = _leg_velocity(px, py, pz, -0.5 * span, -gamma, rc)
    return onset * (vx1 + vx2), onset * (vy1 + vy2), onset * (vz1 + vz2)


def induced_velocity(rel_pos, params: WakeParams):
    """Induced (W_x, W_y, W_z) at `rel_pos` in the leader wind frame."""
    r = np.asarray(rel_pos, dtype=float)
    return induced_velocity_wind(r[0], r[1], r[2], params.circulation,
                                 params.vortex_span, params.core_radius,
                                 params.rollup_length)


@njit(cache=True)
def wake_sample(rel_w: np.ndarray, R_lf: np.ndarray, V: float, qbar: float,
                alpha: float, gamma: float, span: float, rc: float,
                rc_load: float, rollup: float, n_strips: int, veh,
                aero) -> np.ndarray:
    """Full wake sample at the follower: velocities plus strip increments.

    rel_w  : follower CG in the leader wind frame (m)
    R_lf   : rotation taking follower-wind vectors into the leader wind frame
    Returns (W_x, W_y, W_z [leader wind axes], dL, dD, dY, dRoll, dPitch, dYaw
    [follower wind axes]).
    """
    out = np.zeros(9)
    if gamma == 0.0 or rel_w[0] >= 0.0:
        return out

    # transported flow: one body-averaged sample at the CG; the aircraft as a
    # whole responds to flow averaged over its own scale
    wx, wy, wz = induced_velocity_wind(rel_w[0], rel_w[1], rel_w[2],
                                       gamma, span, rc_load, rollup)
    out[0] = wx
    out[1] = wy
    out[2] = wz
    w_cg_y = R_lf[0, 1] * wx + R_lf[1, 1] * wy + R_lf[2, 1] * wz

    CL_op = aero.C_L_0 + aero.C_L_alpha * alpha
    half = 0.5 * veh.b
    dy = veh.b / n_strips
    dL = 0.0
    dD = 0.0
    dRoll = 0.0
    for i in range(n_strips):
        ys = -half + (i + 0.5) * dy
        chord = veh.c_root + (veh.c_tip - veh.c_root) * (2.0 * abs(ys) / veh.b)
        # chordwise averaging: each strip samples the field with a smoothing
        # radius tied to its own chord, and references the CG value at the
        # same radius so a uniform field still produces zero deviation
        rc_i = 0.5 * chord
        if rc_i < rc:
            rc_i = rc
        elif rc_i > rc_load:
            rc_i = rc_load
        sx = rel_w[0] + R_lf[0, 1] * ys
        sy = rel_w[1] + R_lf[1, 1] * ys
        sz = rel_w[2] + R_lf[2, 1] * ys
        vx, vy, vz = induced_velocity_wind(sx, sy, sz, gamma, span, rc_i, rollup)
        gx, gy, gz = induced_velocity_wind(rel_w[0], rel_w[1], rel_w[2],
                                           gamma, span, rc_i, rollup)
        w_z_f = R_lf[0, 2] * vx + R_lf[1, 2] * vy + R_lf[2, 2] * vz
        w_z_g = R_lf[0, 2] * gx + R_lf[1, 2] * gy + R_lf[2, 2] * gz
        upwash_dev = -(w_z_f - w_z_g)
        d_alpha = upwash_dev / V
        lift_i = qbar * chord * aero.C_l_alpha * d_alpha * dy
        dL += lift_i
        dD += -qbar * chord * CL_op * d_alpha * dy
        dRoll += -ys * lift_i

    # tail reference value at the body scale
    gx, gy, gz = induced_velocity_wind(rel_w[0], rel_w[1], rel_w[2],
                                       gamma, span, rc_load, rollup)
    w_cg_z = R_lf[0, 2] * gx + R_lf[1, 2] * gy + R_lf[2, 2] * gz

    # horizontal tail: pitch from the tail-arm upwash difference
    tx = rel_w[0] + R_lf[0, 0] * (-veh.l_h)
    ty = rel_w[1] + R_lf[1, 0] * (-veh.l_h)
    tz = rel_w[2] + R_lf[2, 0] * (-veh.l_h)
    vx, vy, vz = induced_velocity_wind(tx, ty, tz, gamma, span, rc_load, rollup)
    w_z_t = R_lf[0, 2] * vx + R_lf[1, 2] * vy + R_lf[2, 2] * vz
    dalpha_t = -(w_z_t - w_cg_z) / V
    dPitch = -veh.l_h * qbar * veh.S_h * aero.C_l_alpha * dalpha_t

    # vertical tail: side force and yaw from the lateral flow difference,
    # averaged over the fin height (the fin spans z; a point sample would
    # spike where the core's lateral flow reverses across the span)
    w_y_v = 0.0
    for zf in (-0.3 * veh.h_t, -0.8 * veh.h_t):
        vxv, vyv, vzv = induced_velocity_wind(
            rel_w[0] + R_lf[0, 0] * (-veh.l_v) + R_lf[0, 2] * zf,
            rel_w[1] + R_lf[1, 0] * (-veh.l_v) + R_lf[1, 2] * zf,
            rel_w[2] + R_lf[2, 0] * (-veh.l_v) + R_lf[2, 2] * zf,
            gamma, span, rc_load, rollup)
        w_y_v += 0.5 * (R_lf[0, 1] * vxv + R_lf[1, 1] * vyv + R_lf[2, 1] * vzv)
    dY = qbar * veh.S_v * aero.c_eta * aero.C_l_alpha * (w_y_v - w_cg_y) / V
    dYaw = -veh.l_v * dY

    out[3] = dL
    out[4] = dD
    out[5] = dY
    out[6] = dRoll
    out[7] = dPitch
    out[8] = dYaw
    return out


def induced_increments(rel_pos, V: float, qbar: float, alpha: float,
                       params: WakeParams, veh, aero,
                       R_lf: np.ndarray | None = None) -> np.ndarray:
    """Strip-theory force/moment increments for an aligned or rotated follower."""
    if R_lf is None:
        R_lf = np.eye(3)
    rel = np.asarray(rel_pos, dtype=float)
    return wake_sample(rel, np.asarray(R_lf, dtype=float), V, qbar, alpha,
                       params.circulation, params.vortex_span,
                       params.core_radius, params.load_radius,
                       params.rollup_length, params.n_strips, veh, aero)


def optimal_offset_search(params: WakeParams, veh, aero, V: float,
                          altitude: float, alpha: float,
                          r_x: float = -36.0, n_grid: int = 101):
    """Grid-search the lateral offset minimizing the drag increment.

    Scans r_y in [0.5b, 1.5b] at fixed r_x; used for wake-model validation
    only (the scenario offsets are configuration inputs).
    """
    rho = air_density(altitude)
    qbar = 0.5 * rho * V * V
    grid = np.linspace(0.5 * veh.b, 1.5 * veh.b, n_grid)
    dD = np.empty(n_grid)
    for i, ry in enumerate(grid):
        s = induced_increments((r_x, ry, 0.0), V, qbar, alpha, params, veh, aero)
        dD[i] = s[4]
    k = int(np.argmin(dD))
    return (r_x, float(grid[k])), dD, grid
