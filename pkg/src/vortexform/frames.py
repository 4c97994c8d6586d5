"""Rotation and axis-transform utilities shared by the planner, controllers and plant.

Conventions
-----------
Inertial frame is NED: x north, y east, z positive DOWN.  Altitude is -z.
A wind frame is attached to the velocity vector: x along the airspeed,
y to the right, z completing the right-handed triad (down-ish).  Its
attitude relative to NED is given by the triplet (mu, gamma, chi) =
(bank, flight-path, heading), composed heading -> flight-path -> bank.

All angles in radians, all functions pure.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def wrap_pi(angle: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = (angle + math.pi) % (2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


@njit(cache=True)
def rotation_wind_to_inertial(mu: float, gamma: float, chi: float) -> np.ndarray:
    """Rotation matrix mapping wind-frame vectors into inertial NED.

    Composition R_z(chi) * R_y(-gamma) * R_x(mu); the wind x-axis maps to
    (cos(gamma)cos(chi), cos(gamma)sin(chi), -sin(gamma)), matching the
    point-mass kinematics x_dot = V cos(gamma) cos(chi), z_dot = -V sin(gamma).
    """
    cg, sg = math.cos(gamma), math.sin(gamma)
    cc, sc = math.cos(chi), math.sin(chi)
    cm, sm = math.cos(mu), math.sin(mu)
    out = np.empty((3, 3))
    out[0, 0] = cg * cc
    out[0, 1] = sm * sg * cc - cm * sc
    out[0, 2] = cm * sg * cc + sm * sc
    out[1, 0] = cg * sc
    out[1, 1] = sm * sg * sc + cm * cc
    out[1, 2] = cm * sg * sc - sm * cc
    out[2, 0] = -sg
    out[2, 1] = sm * cg
    out[2, 2] = cm * cg
    return out


@njit(cache=True)
def inertial_error_to_track(x_e: float, y_e: float, z_e: float, chi_hat: float):
    """Rotate inertial position errors into the track frame of heading chi_hat.

    Plane rotation about z: horizontal norm is preserved, z passes through.
    """
    c, s = math.cos(chi_hat), math.sin(chi_hat)
    e_x = c * x_e + s * y_e
    e_y = -s * x_e + c * y_e
    return e_x, e_y, z_e


@njit(cache=True)
def track_to_inertial_error(e_x: float, e_y: float, e_z: float, chi_hat: float):
    """Inverse of :func:`inertial_error_to_track`."""
    c, s = math.cos(chi_hat), math.sin(chi_hat)
    return c * e_x - s * e_y, s * e_x + c * e_y, e_z


def validate_euler_wind(mu: float, gamma: float, chi: float) -> None:
    """Check the wind-attitude triplet: finite, |gamma| strictly below pi/2."""
    for name, v in (("mu", mu), ("gamma", gamma), ("chi", chi)):
        if not math.isfinite(v):
            raise ValueError(f"non-finite wind attitude angle {name}={v!r}")
    if abs(gamma) >= math.pi / 2.0:
        raise ValueError(f"flight path angle out of range: gamma={gamma}")


def rotation_checked(mu: float, gamma: float, chi: float) -> np.ndarray:
    """Validated wrapper around :func:`rotation_wind_to_inertial`."""
    validate_euler_wind(mu, gamma, chi)
    return rotation_wind_to_inertial(mu, gamma, chi)
