"""Horseshoe wake model: velocities against an independent Biot-Savart
quadrature, sign structure, scaling laws, strip increments and the optimal
lateral offset."""

import math

import numpy as np

from vortexform.vehicle import air_density, default_aero, default_vehicle
from vortexform.wake import (induced_increments, induced_velocity,
                             optimal_offset_search, wake_params)

VEH = default_vehicle()
AERO = default_aero()
RHO = air_density(5015.0)
V = 200.0
QBAR = 0.5 * RHO * V * V
WP = wake_params(VEH, RHO, V)
ALPHA = 0.0335


def oracle_velocity(point, params):
    """Independent check: trapezoid quadrature of the Biot-Savart integrand
    along each trailing leg, with the same per-leg core factor and the same
    roll-up onset as the closed form."""
    p = np.asarray(point, dtype=float)
    # filament grid graded toward the observation plane
    xs = -np.concatenate([np.linspace(0.0, 500.0, 200_001),
                          np.geomspace(500.0, 40000.0, 40_000)[1:]])
    out = np.zeros(3)
    for ay, gam in ((+0.5 * params.vortex_span, params.circulation),
                    (-0.5 * params.vortex_span, -params.circulation)):
        # filament points (xs, ay, 0), oriented along -x
        r = p[None, :] - np.stack([xs, np.full(xs.size, ay), np.zeros(xs.size)],
                                  axis=1)
        dl = np.zeros((xs.size, 3))
        dl[:, 0] = np.gradient(xs)
        cross = np.cross(dl, r)
        rmag = np.linalg.norm(r, axis=1)
        leg = gam / (4.0 * math.pi) * (cross / rmag[:, None] ** 3).sum(axis=0)
        h2 = (p[1] - ay) ** 2 + p[2] ** 2
        out += leg * (1.0 - math.exp(-h2 / params.core_radius ** 2))
    return out * (1.0 - math.exp(-(p[0] / params.rollup_length) ** 2))


def test_velocity_matches_independent_quadrature():
    for point in ((-36.0, 0.95 * VEH.b, 0.0), (-36.0, 0.0, 0.0),
                  (-20.0, 5.0, 1.5)):
        w = np.array(induced_velocity(point, WP))
        w_oracle = oracle_velocity(point, WP)
        assert np.abs(w - w_oracle).max() < 5e-4 * max(1.0, np.abs(w_oracle).max())


def test_upwash_outboard_downwash_centerline():
    w_out = induced_velocity((-36.0, 0.95 * VEH.b, 0.0), WP)
    w_mid = induced_velocity((-36.0, 0.0, 0.0), WP)
    assert w_out[2] < 0.0  # upwash outboard (NED z down)
    assert w_mid[2] > 0.0  # downwash between the vortices


def test_far_field_decay():
    w = induced_velocity((-36.0, 1.0e6, 0.0), WP)
    assert np.abs(np.asarray(w)).max() < 1e-9
    # at least 1/distance along a lateral log-spaced ray
    ds = np.geomspace(2.0 * VEH.b, 200.0 * VEH.b, 12)
    mags = np.array([abs(induced_velocity((-36.0, d, 0.0), WP)[2]) for d in ds])
    ratio = mags[:-1] / mags[1:]
    dist_ratio = ds[1:] / ds[:-1]
    assert np.all(ratio >= dist_ratio * 0.99)


def test_zero_circulation_zero_everywhere():
    wp0 = WP._replace(circulation=0.0)
    assert induced_velocity((-36.0, 9.0, 0.0), wp0) == (0.0, 0.0, 0.0)
    s = induced_increments((-36.0, 9.0, 0.0), V, QBAR, ALPHA, wp0, VEH, AERO)
    assert np.all(s == 0.0)


def test_ahead_of_leader_is_zero():
    assert induced_velocity((1.0, 5.0, 0.0), WP) == (0.0, 0.0, 0.0)


def test_linear_in_circulation():
    w1 = np.array(induced_velocity((-36.0, 7.0, 1.0), WP))
    w2 = np.array(induced_velocity((-36.0, 7.0, 1.0),
                                   WP._replace(circulation=2.0 * WP.circulation)))
    assert np.abs(w2 - 2.0 * w1).max() < 1e-12 * np.abs(w1).max()
    s1 = induced_increments((-36.0, 9.0, 0.0), V, QBAR, ALPHA, WP, VEH, AERO)
    s2 = induced_increments((-36.0, 9.0, 0.0), V, QBAR, ALPHA,
                            WP._replace(circulation=2.0 * WP.circulation),
                            VEH, AERO)
    assert np.abs(s2 - 2.0 * s1).max() < 1e-9 * np.abs(s1).max()


def test_leg_antisymmetry_about_centerline():
    # vertical induced velocity of the pair is even about the wake centerline
    for d in (0.7, 2.0, 5.0):
        wl = induced_velocity((-36.0, -d, 0.0), WP)
        wr = induced_velocity((-36.0, +d, 0.0), WP)
        assert abs(wl[2] - wr[2]) < 1e-12
        assert abs(wl[1] + wr[1]) < 1e-12


def test_drag_reduction_at_station():
    s = induced_increments((-36.0, 9.0, 0.0), V, QBAR, ALPHA, WP, VEH, AERO)
    assert s[4] < 0.0


def test_strip_refinement():
    s40 = induced_increments((-36.0, 9.0, 0.0), V, QBAR, ALPHA,
                             WP._replace(n_strips=40), VEH, AERO)
    s400 = induced_increments((-36.0, 9.0, 0.0), V, QBAR, ALPHA,
                              WP._replace(n_strips=400), VEH, AERO)
    for i in (3, 4, 6):
        assert abs(s40[i] - s400[i]) < 0.01 * abs(s400[i])


def test_optimal_offset_band():
    (r_x, r_y), dD, grid = optimal_offset_search(WP, VEH, AERO, V, 5015.0, ALPHA)
    assert 0.8 * VEH.b <= r_y <= 1.1 * VEH.b
    # the optimum beats a station two spans out
    far = induced_increments((r_x, 2.0 * VEH.b, 0.0), V, QBAR, ALPHA, WP,
                             VEH, AERO)
    assert dD.min() < far[4]


def test_optimal_offset_stable_under_strip_doubling():
    (_, ry1), _, grid = optimal_offset_search(WP, VEH, AERO, V, 5015.0, ALPHA)
    (_, ry2), _, _ = optimal_offset_search(WP._replace(n_strips=2 * WP.n_strips),
                                           VEH, AERO, V, 5015.0, ALPHA)
    cell = grid[1] - grid[0]
    assert abs(ry1 - ry2) <= cell + 1e-12
