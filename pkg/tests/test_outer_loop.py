"""Guidance-loop pieces: gain audit, corrected air state, desired signals,
auxiliary states and the command allocation."""

import math

import numpy as np
import pytest

from vortexform.frames import inertial_error_to_track
from vortexform.outer_loop import (GainAuditError, allocate, audit_outer_gains,
                                   aux_step, corrected_air_state,
                                   default_outer_gains, desired_speed_fpa,
                                   realized_virtual_inputs,
                                   virtual_inputs_nominal)
from vortexform.vehicle import GRAV, default_aero, default_vehicle, nominal_forces

OG = default_outer_gains()
VEH = default_vehicle()
AERO = default_aero()


def test_gain_audit_passes_default_table():
    msgs = audit_outer_gains(OG)
    assert len(msgs) == 5  # two inequalities + three 2x2 blocks


def test_gain_audit_rejects_violation():
    with pytest.raises(GainAuditError):
        audit_outer_gains(OG._replace(K_x=16.1))
    with pytest.raises(GainAuditError):
        audit_outer_gains(OG._replace(T_chi=-0.1))
    # a huge time constant breaks the 2x2 positivity of the chi block
    with pytest.raises(GainAuditError):
        audit_outer_gains(OG._replace(T_chi=5.0))


def test_corrected_state_no_wake_is_identity():
    out = corrected_air_state(200.0, 0.05, -0.3, 0.0, 0.0, 0.0)
    assert np.allclose(out, (200.0, 0.05, -0.3, 0.0), atol=1e-14)


def test_corrected_state_tailwind():
    V_hat, gam_hat, chi_hat, dV = corrected_air_state(200.0, 0.0, 0.0,
                                                      7.0, 0.0, 0.0)
    assert abs(V_hat - 207.0) < 1e-12
    assert gam_hat == 0.0 and chi_hat == 0.0 and abs(dV - 7.0) < 1e-12


def test_corrected_state_crosswind():
    w = 10.0
    V_hat, gam_hat, chi_hat, _ = corrected_air_state(200.0, 0.0, 0.0,
                                                     0.0, w, 0.0)
    assert abs(chi_hat - math.asin(w / V_hat)) < 1e-12
    assert gam_hat == 0.0


def test_track_errors_and_auxiliary_identity():
    e_x, e_y, e_z = inertial_error_to_track(1.0, 0.0, 0.0, math.pi / 2)
    assert abs(e_x) < 1e-15 and abs(e_y + 1.0) < 1e-15
    # epsilon_x + xi_x recovers e_x by construction
    e_x, xi_x = 1.25, 0.37
    eps_x = e_x - xi_x
    assert abs((eps_x + xi_x) - e_x) < 1e-15


def test_desired_speed_fpa_on_reference():
    V_d, gam_d, clamped = desired_speed_fpa(0.0, 0.0, 0.0, 200.0, 0.0, 0.0,
                                            0.0, 0.0, 200.0, OG.K_x, OG.K_z)
    assert V_d == 200.0 and gam_d == 0.0 and clamped == 0


def test_desired_fpa_commands_climb_for_low_follower():
    # e_z = +10 m means below the reference in NED; gam_d = asin(2/200)
    _, gam_d, clamped = desired_speed_fpa(0.0, 10.0, 0.0, 200.0, 0.0, 0.0,
                                          0.0, 0.0, 200.0, 0.3, 0.2)
    assert abs(gam_d - math.asin(2.0 / 200.0)) < 1e-14
    assert abs(math.degrees(gam_d) - 0.573) < 0.01
    assert clamped == 0


def test_desired_fpa_clamps_and_counts():
    _, gam_d, clamped = desired_speed_fpa(0.0, 2000.0, 0.0, 200.0, 0.0, 0.0,
                                          0.0, 0.0, 200.0, 0.3, 0.2)
    assert clamped == 1 and abs(gam_d - math.pi / 2) < 1e-12


def test_virtual_inputs_zero_errors_vanish():
    u_V0, u_g0, u_c0, H = virtual_inputs_nominal(
        0.0, 0.0, 0.0, 0.0, 0.0, 200.0, 0.0, 0.0,
        OG.K_V, OG.K_gamma, OG.K_chi, OG.c_V, OG.c_chi)
    assert u_V0 == 0.0 and u_g0 == 0.0 and u_c0 == 0.0 and H == 1.0


def test_virtual_inputs_coupling_bounded():
    # |coupling| <= c_V and c_chi * V_r by the H normalization
    for eps_x, e_y in ((1e3, 0.0), (0.0, -1e3), (50.0, 50.0)):
        u_V0, _, u_c0, H = virtual_inputs_nominal(
            0.0, 0.0, 0.0, eps_x, e_y, 200.0, 0.0, 0.0,
            OG.K_V, OG.K_gamma, OG.K_chi, OG.c_V, OG.c_chi)
        assert abs(u_V0) <= OG.c_V + 1e-15
        assert abs(u_c0) <= OG.c_chi * 200.0 + 1e-12
        assert H >= 1.0


def test_auxiliary_homogeneous_decay():
    xi_x, xi_z = 2.0, -1.5
    dt = 0.002
    for _ in range(500):
        xi_x, xi_z = aux_step(xi_x, xi_z, 200.0, 200.0, 0.0, 0.01, 0.01,
                              200.0, OG.K_x, OG.K_z, dt)
    t = 500 * dt
    assert abs(xi_x - 2.0 * math.exp(-OG.K_x * t)) < 1e-9
    assert abs(xi_z + 1.5 * math.exp(-OG.K_z * t)) < 1e-9


def test_auxiliary_steady_state_matches_bound():
    # constant V_c - V_d = delta: xi_x -> delta / K_x
    xi_x, xi_z = 0.0, 0.0
    delta = 3.0
    for _ in range(40000):
        xi_x, xi_z = aux_step(xi_x, xi_z, 200.0 + delta, 200.0, 0.0, 0.0, 0.0,
                              200.0, OG.K_x, OG.K_z, 0.002)
    assert abs(xi_x - delta / OG.K_x) < 1e-6


def _nominal(V=200.0, h=5015.0, alpha=0.03):
    return nominal_forces(V, h, alpha, VEH.S, VEH.b, AERO.C_D_0, AERO.e_o,
                          AERO.C_L_0, AERO.C_L_alpha)


def test_allocation_zero_demand_cases():
    D, L0, La, _ = _nominal(alpha=0.0)
    # with u_gamma = -g/V the demanded wind-normal force is zero
    T_c, a_d, mu_d, sat = allocate(2.0, -GRAV / 200.0, 0.0, 0.0, 0.0, 0.0,
                                   200.0, 1.5e4, D, L0, La, VEH.m, VEH.T_max,
                                   OG.alpha_d_max, OG.mu_d_max)
    assert abs(T_c - (VEH.m * 2.0 + D)) < 1e-9
    assert mu_d == 0.0 and sat == 0
    # zero heading demand keeps wings level
    _, _, mu_d, _ = allocate(0.0, 0.05, 0.0, 0.02, 0.0, 0.0, 200.0, 1.5e4,
                             D, L0, La, VEH.m, VEH.T_max, OG.alpha_d_max,
                             OG.mu_d_max)
    assert mu_d == 0.0


def test_allocation_round_trip_exact_when_unsaturated():
    D, L0, La, _ = _nominal()
    u = (1.2, 0.021, 0.04)
    T_c, a_d, mu_d, sat = allocate(*u, 0.03, 0.001, 0.01, 200.0, 1.4e4, D,
                                   L0, La, VEH.m, VEH.T_max, OG.alpha_d_max,
                                   OG.mu_d_max)
    assert sat == 0
    back = realized_virtual_inputs(T_c, a_d, mu_d, 0.03, 0.001, 0.01, 200.0,
                                   1.4e4, D, L0, La, VEH.m)
    assert np.allclose(back, u, atol=1e-12)


def test_allocation_round_trip_with_state_substitution():
    # substituting (T_c, alpha_d, mu_d) into the plant-side expressions with
    # the *commanded* angles reproduces the demands within 2 percent
    D, L0, La, _ = _nominal()
    u = (0.8, 0.015, 0.03)
    alpha_f, T = 0.03, 1.4e4
    T_c, a_d, mu_d, _ = allocate(*u, alpha_f, 0.0, 0.0, 200.0, T, D, L0, La,
                                 VEH.m, VEH.T_max, OG.alpha_d_max, OG.mu_d_max)
    LT = L0 + La * a_d + T * math.sin(a_d)
    u_g = (LT * math.cos(mu_d) - VEH.m * GRAV) / (VEH.m * 200.0)
    u_c = LT * math.sin(mu_d) / (VEH.m * 200.0)
    u_v = (T_c * math.cos(a_d) - D) / VEH.m
    assert abs(u_v - u[0]) / max(abs(u[0]), 0.1) < 0.02
    assert abs(u_g - u[1]) / max(abs(u[1]), 0.01) < 0.02
    assert abs(u_c - u[2]) / max(abs(u[2]), 0.01) < 0.02


def test_allocation_saturation_flags():
    D, L0, La, _ = _nominal()
    T_c, a_d, mu_d, sat = allocate(50.0, 0.5, 1.5, 0.0, 0.0, 0.0, 200.0,
                                   1.4e4, D, L0, La, VEH.m, VEH.T_max,
                                   OG.alpha_d_max, OG.mu_d_max)
    assert sat == 1
    assert T_c <= VEH.T_max and a_d <= OG.alpha_d_max and mu_d <= OG.mu_d_max
    T_c, _, _, sat = allocate(-50.0, 0.0, 0.0, 0.0, 0.0, 0.0, 200.0, 1.4e4,
                              D, L0, La, VEH.m, VEH.T_max, OG.alpha_d_max,
                              OG.mu_d_max)
    assert sat == 1 and T_c == 0.0
