"""Aircraft parameters, nominal polynomial aerodynamics and the truth 6-DOF model.

The controller only ever sees the *nominal* model (`nominal_forces`,
`nominal_moments`): a flat-plate polar with linear lift and dimensional
moment buildup from the coefficient set below.  The *truth* plant
(`truth_deriv`) runs the same structure with multiplicative coefficient
perturbations, a side-force derivative the nominal model omits, and the
wake-induced force/moment increments.  With all factors at 1, wake off and
the side force disabled, truth and nominal coincide exactly.

State vector (13, wind/track formulation, NED inertial, z down):

    0 x, 1 y, 2 z      inertial position (m)
    3 V                airspeed (m/s)
    4 gamma, 5 chi     flight path / heading (rad)
    6 mu, 7 alpha,     bank / angle of attack / sideslip (rad)
    8 beta
    9 p, 10 q, 11 r    body rates (rad/s)
    12 T               thrust (N), first-order lag toward the command
"""

import math
from typing import NamedTuple

import numpy as np
from numba import njit

GRAV = 9.80665

#: simulation aborts below this airspeed (stall floor)
V_STALL_FLOOR = 40.0

#: state-vector length
NX = 13


class VehicleParams(NamedTuple):
    """Geometry and mass (Table-style symbols, SI units)."""
    S: float          # wing area, m^2
    S_v: float        # vertical tail area, m^2
    S_h: float        # horizontal tail area, m^2
    b: float          # wing span, m
    b_t: float        # tail span, m
    c_bar: float      # mean aerodynamic chord, m
    c_root: float     # root chord, m
    c_tip: float      # tip chord, m
    h_t: float        # vertical tail height, m
    sweep: float      # quarter-chord sweep, rad
    dihedral: float   # rad
    m: float          # gross mass, kg
    I_x: float
    I_y: float
    I_z: float
    I_xz: float
    l_h: float        # horizontal-tail moment arm, m
    l_v: float        # vertical-tail moment arm, m
    T_max: float      # thrust limit, N
    thrust_tau: float  # first-order engine lag, s


class AeroCoeffs(NamedTuple):
    """Nominal aerodynamic coefficients (per-radian derivatives)."""
    C_D_0: float
    e_o: float        # Oswald efficiency
    C_l_alpha: float  # section lift-curve slope (strip model)
    C_L_0: float
    C_L_alpha: float
    c_eta: float      # vertical-tail efficiency
    C_LL_beta: float  # rolling-moment derivatives
    C_LL_p: float
    C_LL_r: float
    C_LL_da: float
    C_LL_dr: float
    C_M_0: float      # pitching-moment derivatives
    C_M_alpha: float
    C_M_q: float
    C_M_de: float
    C_N_beta: float   # yawing-moment derivatives
    C_N_p: float
    C_N_r: float
    C_N_da: float
    C_N_dr: float


class UncertaintyFactors(NamedTuple):
    """Truth-model multiplicative factors and the truth-only side force."""
    k_drag: float
    k_lift_slope: float
    k_roll: float
    k_pitch: float
    k_yaw: float
    C_Y_beta: float


def default_vehicle() -> VehicleParams:
    return VehicleParams(
        S=27.87, S_v=5.09, S_h=10.034, b=9.14, b_t=5.49, c_bar=3.45,
        c_root=5.02, c_tip=1.07, h_t=3.05, sweep=0.57, dihedral=0.0,
        m=9295.44, I_x=12874.8, I_y=75673.6, I_z=85552.1, I_xz=1331.4,
        l_h=4.4, l_v=4.9, T_max=129000.0, thrust_tau=0.5)


def default_aero() -> AeroCoeffs:
    return AeroCoeffs(
        C_D_0=0.02, e_o=0.663, C_l_alpha=5.3, C_L_0=0.05, C_L_alpha=5.3,
        c_eta=0.95,
        C_LL_beta=-0.1059, C_LL_p=-0.4127, C_LL_r=0.0625,
        C_LL_da=-0.1463, C_LL_dr=0.02636,
        C_M_0=-0.02029, C_M_alpha=0.0466, C_M_q=-5.159, C_M_de=-0.60123,
        C_N_beta=0.2993, C_N_p=0.02678, C_N_r=-0.36988,
        C_N_da=-0.03349, C_N_dr=-0.081159)


def default_uncertainty(enabled: bool = True) -> UncertaintyFactors:
    """Default perturbations: drag +8%, lift slope -5%, moments +/-5%."""
    if not enabled:
        return UncertaintyFactors(1.0, 1.0, 1.0, 1.0, 1.0, 0.0)
    return UncertaintyFactors(k_drag=1.08, k_lift_slope=0.95, k_roll=1.05,
                              k_pitch=0.95, k_yaw=1.05, C_Y_beta=-0.8)


def validate_vehicle(veh: VehicleParams) -> None:
    for name, v in veh._asdict().items():
        if name in ("sweep", "dihedral"):
            continue
        if not v > 0.0:
            raise ValueError(f"vehicle parameter {name} must be positive (got {v})")
    if veh.I_x * veh.I_z - veh.I_xz ** 2 <= 0.0:
        raise ValueError("inertia matrix is not positive definite")


def validate_aero(coef: AeroCoeffs) -> None:
    if coef.C_D_0 <= 0.0:
        raise ValueError("C_D_0 must be positive")
    for name in ("C_LL_p", "C_M_q", "C_N_r"):
        if getattr(coef, name) >= 0.0:
            raise ValueError(f"damping derivative {name} must be negative")


def validate_uncertainty(unc: UncertaintyFactors) -> None:
    for name in ("k_drag", "k_lift_slope", "k_roll", "k_pitch", "k_yaw"):
        v = getattr(unc, name)
        if not 0.5 <= v <= 1.5:
            raise ValueError(f"uncertainty factor {name}={v} outside [0.5, 1.5]")


# ---------------------------------------------------------------------------
# atmosphere and nominal aerodynamics
# ---------------------------------------------------------------------------

@njit(cache=True)
def air_density(altitude: float) -> float:
    """Exponential ISA fit rho = 1.225 exp(-h/9296), valid 0..20 km."""
    return 1.225 * math.exp(-altitude / 9296.0)


def air_density_checked(altitude: float) -> float:
    if not 0.0 <= altitude <= 20000.0:
        raise ValueError(f"altitude {altitude} m outside [0, 20000]")
    return air_density(altitude)


@njit(cache=True)
def nominal_forces(V: float, altitude: float, alpha: float, S: float, b: float,
                   C_D_0: float, e_o: float, C_L_0: float, C_L_alpha: float):
    """Nominal (D_bar, L_bar0, L_bar_alpha, L_bar) at the given flight point.

    Parabolic polar D = qS (C_D0 + C_L^2 / (pi e AR)); lift linear in alpha.
    """
    rho = air_density(altitude)
    qbar = 0.5 * rho * V * V
    L0 = qbar * S * C_L_0
    La = qbar * S * C_L_alpha
    CL = C_L_0 + C_L_alpha * alpha
    AR = b * b / S
    D = qbar * S * (C_D_0 + CL * CL / (math.pi * e_o * AR))
    return D, L0, La, L0 + La * alpha


@njit(cache=True)
def nominal_moments(V: float, qbar: float, alpha: float, beta: float,
                    p: float, q: float, r: float, S: float, b: float, c_bar: float,
                    C_LL_beta: float, C_LL_p: float, C_LL_r: float,
                    C_LL_da: float, C_LL_dr: float,
                    C_M_0: float, C_M_alpha: float, C_M_q: float, C_M_de: float,
                    C_N_beta: float, C_N_p: float, C_N_r: float,
                    C_N_da: float, C_N_dr: float):
    """Zero-deflection moments tau0 and the 3x3 control derivative matrix.

    Rows roll/pitch/yaw scale with qSb, qSc, qSb; columns aileron/elevator/rudder.
    """
    qSb = qbar * S * b
    qSc = qbar * S * c_bar
    b2V = b / (2.0 * V)
    c2V = c_bar / (2.0 * V)
    tau0 = np.empty(3)
    tau0[0] = qSb * (C_LL_beta * beta + b2V * (C_LL_p * p + C_LL_r * r))
    tau0[1] = qSc * (C_M_0 + C_M_alpha * alpha + c2V * C_M_q * q)
    tau0[2] = qSb * (C_N_beta * beta + b2V * (C_N_p * p + C_N_r * r))
    M = np.zeros((3, 3))
    M[0, 0] = qSb * C_LL_da
    M[0, 2] = qSb * C_LL_dr
    M[1, 1] = qSc * C_M_de
    M[2, 0] = qSb * C_N_da
    M[2, 2] = qSb * C_N_dr
    return tau0, M


# ---------------------------------------------------------------------------
# truth model
# ---------------------------------------------------------------------------

@njit(cache=True)
def truth_deriv(x: np.ndarray, T_c: float, da: float, de: float, dr: float,
                wake: np.ndarray, gust_v: float, veh, aero, unc) -> np.ndarray:
    """Time derivative of the 13-state truth model.

    `wake` packs (W_x, W_y, W_z, dL, dD, dY, dRoll, dPitch, dYaw): induced
    velocity at the CG in inertial axes plus strip-integrated force/moment
    increments.  Forces are the nominal buildup times the uncertainty
    factors, plus the increments and the truth-only side force.  `gust_v`
    is an ambient lateral gust velocity; it perturbs the aerodynamic
    sideslip seen by the lateral force/moment terms.
    """
    V = x[3]
    gam = x[4]
    chi = x[5]
    mu = x[6]
    al = x[7]
    be = x[8]
    p = x[9]
    q = x[10]
    r = x[11]
    T = x[12]

    rho = air_density(-x[2])
    qbar = 0.5 * rho * V * V
    qS = qbar * veh.S

    # truth forces: scaled polar/lift plus wake increments
    CL_t = aero.C_L_0 + unc.k_lift_slope * aero.C_L_alpha * al
    AR = veh.b * veh.b / veh.S
    be_air = be + gust_v / V
    D_t = unc.k_drag * qS * (aero.C_D_0 + CL_t * CL_t / (math.pi * aero.e_o * AR)) + wake[4]
    L_t = qS * CL_t + wake[3]
    Y_t = qS * unc.C_Y_beta * be_air + wake[5]

    sg, cg = math.sin(gam), math.cos(gam)
    sm, cm = math.sin(mu), math.cos(mu)
    sa, ca = math.sin(al), math.cos(al)
    sb, cb = math.sin(be), math.cos(be)

    Vdot = (T * ca * cb - D_t) / veh.m - GRAV * sg
    LT = L_t + T * sa
    YT = Y_t - T * ca * sb
    gamdot = (LT * cm - YT * sm) / (veh.m * V) - GRAV * cg / V
    chidot = (LT * sm + YT * cm) / (veh.m * V * cg)

    tb = sb / cb
    mudot = (p * ca + r * sa) / cb + gamdot * cm * tb + chidot * (sg + sm * cg * tb)
    aldot = q - (p * ca + r * sa) * tb - gamdot * cm / cb - chidot * sm * cg / cb
    bedot = p * sa - r * ca - gamdot * sm + chidot * cm * cg

    # truth moments: scaled coefficient groups plus wake increments
    qSb = qS * veh.b
    qSc = qS * veh.c_bar
    b2V = veh.b / (2.0 * V)
    c2V = veh.c_bar / (2.0 * V)
    Lm = unc.k_roll * qSb * (aero.C_LL_beta * be_air + b2V * (aero.C_LL_p * p + aero.C_LL_r * r)
                             + aero.C_LL_da * da + aero.C_LL_dr * dr) + wake[6]
    Mm = unc.k_pitch * qSc * (aero.C_M_0 + aero.C_M_alpha * al + c2V * aero.C_M_q * q
                              + aero.C_M_de * de) + wake[7]
    Nm = unc.k_yaw * qSb * (aero.C_N_beta * be_air + b2V * (aero.C_N_p * p + aero.C_N_r * r)
                            + aero.C_N_da * da + aero.C_N_dr * dr) + wake[8]

    Ix, Iy, Iz, Ixz = veh.I_x, veh.I_y, veh.I_z, veh.I_xz
    Gi = Ix * Iz - Ixz * Ixz
    pdot = (Iz * Lm + Ixz * Nm + Ixz * (Ix - Iy + Iz) * p * q
            + (Iz * (Iy - Iz) - Ixz * Ixz) * q * r) / Gi
    qdot = ((Iz - Ix) * p * r + Ixz * (r * r - p * p) + Mm) / Iy
    rdot = (Ixz * Lm + Ix * Nm + (Ix * (Ix - Iy) + Ixz * Ixz) * p * q
            - Ixz * (Ix - Iy + Iz) * q * r) / Gi

    out = np.empty(NX)
    out[0] = V * cg * math.cos(chi) + wake[0]
    out[1] = V * cg * math.sin(chi) + wake[1]
    out[2] = -V * sg + wake[2]
    out[3] = Vdot
    out[4] = gamdot
    out[5] = chidot
    out[6] = mudot
    out[7] = aldot
    out[8] = bedot
    out[9] = pdot
    out[10] = qdot
    out[11] = rdot
    out[12] = (T_c - T) / veh.thrust_tau
    return out


@njit(cache=True)
def rk4_plant(x: np.ndarray, T_c: float, da: float, de: float, dr: float,
              wake: np.ndarray, gust_v: float, veh, aero, unc,
              dt: float) -> np.ndarray:
    """Classical RK4 step of the truth model with all inputs held."""
    k1 = truth_deriv(x, T_c, da, de, dr, wake, gust_v, veh, aero, unc)
    k2 = truth_deriv(x + 0.5 * dt * k1, T_c, da, de, dr, wake, gust_v, veh, aero, unc)
    k3 = truth_deriv(x + 0.5 * dt * k2, T_c, da, de, dr, wake, gust_v, veh, aero, unc)
    k4 = truth_deriv(x + dt * k3, T_c, da, de, dr, wake, gust_v, veh, aero, unc)
    xn = x + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    # thrust lag can microscopically overshoot its hard limits within a step
    if xn[12] < 0.0:
        xn[12] = 0.0
    elif xn[12] > veh.T_max:
        xn[12] = veh.T_max
    return xn


# ---------------------------------------------------------------------------
# parameter file IO (key = value, symbols as in the coefficient tables)
# ---------------------------------------------------------------------------

_VEH_KEYS = {
    "S": "S", "S_v": "S_v", "S_h": "S_h", "b": "b", "b_t": "b_t",
    "c_bar": "c_bar", "c_r": "c_root", "c_t": "c_tip", "h_t": "h_t",
    "Lambda_s": "sweep", "Lambda_d": "dihedral", "m": "m",
    "I_x": "I_x", "I_y": "I_y", "I_z": "I_z", "I_xz": "I_xz",
    "l_h": "l_h", "l_v": "l_v", "T_max": "T_max", "thrust_tau": "thrust_tau",
}


def load_param_file(path) -> tuple[VehicleParams, AeroCoeffs]:
    """Read a `key = value` text file mirroring the two parameter tables.

    Unknown keys raise; missing keys fall back to the defaults.
    """
    veh = default_vehicle()._asdict()
    aero = default_aero()._asdict()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            if key in _VEH_KEYS:
                veh[_VEH_KEYS[key]] = float(val)
            elif key in aero:
                aero[key] = float(val)
            else:
                raise ValueError(f"{path}:{lineno}: unknown parameter {key!r}")
    v = VehicleParams(**veh)
    a = AeroCoeffs(**aero)
    validate_vehicle(v)
    validate_aero(a)
    return v, a


def save_param_file(path, veh: VehicleParams, aero: AeroCoeffs) -> None:
    inv = {v: k for k, v in _VEH_KEYS.items()}
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# aircraft geometry and mass\n")
        for name, value in veh._asdict().items():
            fh.write(f"{inv[name]} = {value!r}\n")
        fh.write("\n# aerodynamic coefficients\n")
        for name, value in aero._asdict().items():
            fh.write(f"{name} = {value!r}\n")
