"""Rotation and track-frame transform checks against closed-form oracles."""

import math

import numpy as np
import pytest

from vortexform.frames import (inertial_error_to_track, rotation_checked,
                               rotation_wind_to_inertial,
                               track_to_inertial_error, wrap_pi)


def test_zero_angles_identity():
    R = rotation_wind_to_inertial(0.0, 0.0, 0.0)
    assert np.allclose(R, np.eye(3), atol=1e-15)


def test_pure_heading_quarter_turn():
    R = rotation_wind_to_inertial(0.0, 0.0, math.pi / 2)
    v = R @ np.array([1.0, 0.0, 0.0])
    assert np.allclose(v, [0.0, 1.0, 0.0], atol=1e-15)


def test_orthonormality_specific_triple():
    R = rotation_wind_to_inertial(0.3, -0.2, 1.1)
    assert np.abs(R.T @ R - np.eye(3)).max() < 1e-12
    assert abs(np.linalg.det(R) - 1.0) < 1e-12


def test_orthonormality_random_triples():
    rng = np.random.default_rng(42)
    for _ in range(1000):
        mu, ga, chi = rng.uniform((-math.pi, -1.5, -math.pi),
                                  (math.pi, 1.5, math.pi))
        R = rotation_wind_to_inertial(mu, ga, chi)
        assert np.abs(R.T @ R - np.eye(3)).max() < 1e-12
        assert abs(np.linalg.det(R) - 1.0) < 1e-12


def test_first_column_matches_kinematics():
    # the wind x-axis must map onto the velocity direction of the
    # point-mass equations: (cos g cos c, cos g sin c, -sin g)
    rng = np.random.default_rng(3)
    for _ in range(50):
        mu, ga, chi = rng.uniform((-3.0, -1.4, -3.0), (3.0, 1.4, 3.0))
        R = rotation_wind_to_inertial(mu, ga, chi)
        expect = [math.cos(ga) * math.cos(chi),
                  math.cos(ga) * math.sin(chi), -math.sin(ga)]
        assert np.allclose(R[:, 0], expect, atol=1e-14)


def test_track_rotation_identity():
    assert inertial_error_to_track(1.0, 2.0, 3.0, 0.0) == (1.0, 2.0, 3.0)


def test_track_rotation_quarter_turn():
    e_x, e_y, e_z = inertial_error_to_track(1.0, 0.0, 0.0, math.pi / 2)
    assert abs(e_x) < 1e-15 and abs(e_y + 1.0) < 1e-15 and e_z == 0.0


def test_track_rotation_isometry_and_inverse():
    rng = np.random.default_rng(7)
    for _ in range(200):
        xe, ye, ze, chi = rng.uniform(-100.0, 100.0, size=4)
        ex, ey, ez = inertial_error_to_track(xe, ye, ze, chi)
        assert abs(math.hypot(ex, ey) - math.hypot(xe, ye)) < 1e-12 * max(
            1.0, math.hypot(xe, ye))
        bx, by, bz = track_to_inertial_error(ex, ey, ez, chi)
        assert abs(bx - xe) < 1e-12 * max(1.0, abs(xe))
        assert abs(by - ye) < 1e-12 * max(1.0, abs(ye))
        assert bz == ze


def test_wrap_pi():
    assert abs(wrap_pi(3 * math.pi) - math.pi) < 1e-12
    assert abs(wrap_pi(-3 * math.pi) - math.pi) < 1e-12
    assert abs(wrap_pi(0.3) - 0.3) < 1e-15


def test_validation_rejects_bad_angles():
    with pytest.raises(ValueError):
        rotation_checked(0.0, math.pi / 2, 0.0)
    with pytest.raises(ValueError):
        rotation_checked(float("nan"), 0.0, 0.0)
    R = rotation_checked(0.1, 0.2, 0.3)
    assert R.shape == (3, 3)
