"""Scenario configuration: defaults, validation and the key-value config file.

The file format is INI with one section per module; keys are named after the
symbols of the parameter tables (K_x, T_Wx, omega_V, C_M_alpha, ...), angles
carried in degrees where the key says so.  Any key omitted falls back to the
defaults, which reproduce the first study scenario.
"""

import configparser
import io
import math
from dataclasses import dataclass, field, replace

from .filters import CF2_STABILITY_LIMIT
from .inner_loop import InnerGains, audit_inner_gains, default_inner_gains
from .outer_loop import OuterGains, audit_outer_gains, default_outer_gains
from .planner import LeaderProfile, make_profile
from .vehicle import (AeroCoeffs, UncertaintyFactors, VehicleParams,
                      default_aero, default_uncertainty, default_vehicle,
                      validate_aero, validate_uncertainty, validate_vehicle)


class ConfigError(ValueError):
    """Invalid scenario configuration."""


@dataclass
class ScenarioConfig:
    name: str = "s1"
    dt: float = 0.002
    duration: float = 180.0
    # leader initial state and formation geometry
    x_l0: float = 45.0
    y_l0: float = -15.0
    z_l0: float = -5015.0
    chi_l0: float = 0.0
    r_x: float = -36.0
    r_y: float = 9.0
    # profile: list of (duration, V, gamma, chi_dot), SI/rad
    segments: tuple = ((35.0, 200.0, 0.0, 0.0),
                       (110.0, 200.0, math.radians(-1.5), math.radians(0.75)),
                       (35.0, 200.0, 0.0, 0.0))
    ramp: float = 3.0
    # follower initial state (position defaults to the leader's)
    alpha_f0: float = math.radians(2.774)
    V_f0: float | None = None  # defaults to the leader's initial speed
    # switches
    wake_on: bool = True
    observers_on: bool = True
    uncertainty_on: bool = True
    # loop-observer model input: True = evaluated from current measurements
    # (estimate error decays first-order regardless of inner-loop lag);
    # False = the printed baseline-law form, whose estimate absorbs the
    # command-rate feedforward during steady maneuvers
    outer_do_feedforward: bool = True
    speed: float | None = None  # overrides every segment's V and V_f(0)
    # wake model
    n_strips: int = 48
    gust_amp: float = 0.0        # ambient lateral gust amplitude, m/s
    gust_period: float = 20.0    # gust period, s
    core_fraction: float = 0.05
    load_core_fraction: float = 0.2
    rollup_spans: float = 2.5
    # parameter blocks
    vehicle: VehicleParams = field(default_factory=default_vehicle)
    aero: AeroCoeffs = field(default_factory=default_aero)
    outer: OuterGains = field(default_factory=default_outer_gains)
    inner: InnerGains = field(default_factory=default_inner_gains)

    def resolved_segments(self):
        if self.speed is None:
            return self.segments
        return tuple((d, float(self.speed), g, c) for d, _, g, c in self.segments)

    def profile(self) -> LeaderProfile:
        return make_profile(list(self.resolved_segments()), ramp=self.ramp)

    def uncertainty(self) -> UncertaintyFactors:
        return default_uncertainty(self.uncertainty_on)

    def validate(self) -> None:
        if not 1e-4 <= self.dt <= 0.01:
            raise ConfigError(f"dt={self.dt} outside [1e-4, 0.01]")
        if self.duration <= 0.0:
            raise ConfigError("duration must be positive")
        validate_vehicle(self.vehicle)
        validate_aero(self.aero)
        validate_uncertainty(self.uncertainty())
        audit_outer_gains(self.outer)
        audit_inner_gains(self.inner)
        w_max = max(self.outer.omega_V, self.outer.omega_gamma,
                    self.outer.omega_chi_r, self.outer.omega_chi_f,
                    self.inner.omega_mu, self.inner.omega_alpha,
                    self.inner.omega_p, self.inner.omega_q, self.inner.omega_r)
        if self.dt * w_max >= CF2_STABILITY_LIMIT:
            raise ConfigError(
                f"dt*omega_max = {self.dt * w_max:.3f} >= {CF2_STABILITY_LIMIT}: "
                "stiffest command filter under-resolved")
        t_min = min(self.outer.T_Wx, self.outer.T_Wy, self.outer.T_Wz,
                    self.outer.T_V, self.outer.T_gamma, self.outer.T_chi,
                    self.inner.T_mu, self.inner.T_alpha, self.inner.T_beta,
                    self.inner.T_p, self.inner.T_q, self.inner.T_r)
        if self.dt >= t_min:
            raise ConfigError(f"dt={self.dt} must stay below the smallest observer "
                              f"time constant {t_min}")
        if self.n_strips < 40:
            raise ConfigError("wake strip count must be >= 40")
        self.profile()  # raises on malformed segments

    def fingerprint(self, ignore=("observers_on",)) -> str:
        """Stable textual identity of the run setup (for run comparisons)."""
        d = {k: v for k, v in self.__dict__.items() if k not in ignore}
        return repr(sorted((k, repr(v)) for k, v in d.items()))


def scenario_config(name: str = "s1", **overrides) -> ScenarioConfig:
    """Built-in scenarios.

    's1': level flight, one long descending coordinated turn, level again.
    's2': the speed-study variant: same trajectory, plus a small
          deterministic lateral gust (1 m/s sinusoid, 20 s period).  The
          gust provides the persistent lateral disturbance the speed study
          measures; in still air the observers null the steady lateral
          error to the solver's noise floor at every speed and the scaling
          behaviour under study is unobservable.
    """
    if name not in ("s1", "s2"):
        raise ConfigError(f"unknown scenario {name!r} (expected 's1' or 's2')")
    if name == "s2":
        overrides.setdefault("outer_do_feedforward", False)
    return ScenarioConfig(name=name, **overrides)


# ---------------------------------------------------------------------------
# INI reading / writing
# ---------------------------------------------------------------------------

_OUTER_KEYMAP = {
    "K_x": "K_x", "K_z": "K_z", "K_V": "K_V", "K_gamma": "K_gamma",
    "K_chi": "K_chi", "C_x": "c_V", "C_y": "c_chi",
    "T_Wx": "T_Wx", "T_Wy": "T_Wy", "T_Wz": "T_Wz",
    "T_V": "T_V", "T_gamma": "T_gamma", "T_chi": "T_chi",
    "omega_V": "omega_V", "omega_gamma": "omega_gamma",
    "zeta_V": "zeta_V", "zeta_gamma": "zeta_gamma",
    "omega_chi_r": "omega_chi_r", "zeta_chi_r": "zeta_chi_r",
    "omega_chi_f": "omega_chi_f", "zeta_chi_f": "zeta_chi_f",
}

_VEHICLE_KEYMAP = {
    "S": "S", "S_v": "S_v", "S_h": "S_h", "b": "b", "b_t": "b_t",
    "c_bar": "c_bar", "c_r": "c_root", "c_t": "c_tip", "h_t": "h_t",
    "Lambda_s": "sweep", "Lambda_d": "dihedral", "m": "m",
    "I_x": "I_x", "I_y": "I_y", "I_z": "I_z", "I_xz": "I_xz",
    "l_h": "l_h", "l_v": "l_v", "T_max": "T_max", "thrust_tau": "thrust_tau",
}


def write_config(cfg: ScenarioConfig, path=None) -> str:
    cp = configparser.ConfigParser()
    cp["sim"] = {
        "scenario": cfg.name,
        "dt": repr(cfg.dt),
        "duration": repr(cfg.duration),
        "wake": "on" if cfg.wake_on else "off",
        "observers": "on" if cfg.observers_on else "off",
        "uncertainty": "on" if cfg.uncertainty_on else "off",
        "speed": "" if cfg.speed is None else repr(cfg.speed),
        "gust_amp": repr(cfg.gust_amp),
        "gust_period": repr(cfg.gust_period),
    }
    cp["planner"] = {
        "r_x": repr(cfg.r_x), "r_y": repr(cfg.r_y),
        "x_l0": repr(cfg.x_l0), "y_l0": repr(cfg.y_l0), "z_l0": repr(cfg.z_l0),
        "chi_l0_deg": repr(math.degrees(cfg.chi_l0)),
        "alpha_f0_deg": repr(math.degrees(cfg.alpha_f0)),
        "ramp": repr(cfg.ramp),
        "segments": ", ".join(
            f"{d:g}:{v:g}:{math.degrees(g):g}:{math.degrees(c):g}"
            for d, v, g, c in cfg.segments),
    }
    cp["wake"] = {"n_strips": str(cfg.n_strips),
                  "core_fraction": repr(cfg.core_fraction),
                  "load_core_fraction": repr(cfg.load_core_fraction),
                  "rollup_spans": repr(cfg.rollup_spans)}
    cp["vehicle"] = {k: repr(getattr(cfg.vehicle, a)) for k, a in _VEHICLE_KEYMAP.items()}
    cp["vehicle"].update({k: repr(v) for k, v in cfg.aero._asdict().items()})
    outer = {k: repr(getattr(cfg.outer, a)) for k, a in _OUTER_KEYMAP.items()}
    outer["C_z"] = "5e-07"  # accepted for table completeness; no law consumes it
    outer["alpha_d_max_deg"] = repr(math.degrees(cfg.outer.alpha_d_max))
    outer["mu_d_max_deg"] = repr(math.degrees(cfg.outer.mu_d_max))
    cp["outer_loop"] = outer
    inner = {k: repr(v) for k, v in cfg.inner._asdict().items()
             if not k.endswith("_max")}
    inner["da_max_deg"] = repr(math.degrees(cfg.inner.da_max))
    inner["de_max_deg"] = repr(math.degrees(cfg.inner.de_max))
    inner["dr_max_deg"] = repr(math.degrees(cfg.inner.dr_max))
    cp["inner_loop"] = inner
    buf = io.StringIO()
    cp.write(buf)
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def _parse_segments(text: str):
    segs = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        parts = item.split(":")
        if len(parts) != 4:
            raise ConfigError(f"segment {item!r} is not dur:V:gamma_deg:chidot_degps")
        d, v, g, c = (float(p) for p in parts)
        segs.append((d, v, math.radians(g), math.radians(c)))
    if not segs:
        raise ConfigError("empty segment list")
    return tuple(segs)


def read_config(path) -> ScenarioConfig:
    cp = configparser.ConfigParser()
    cp.optionxform = str  # keys are case-sensitive table symbols
    with open(path, "r", encoding="utf-8") as fh:
        cp.read_file(fh)
    cfg = ScenarioConfig()

    def fget(sec, key, cur):
        return cp.getfloat(sec, key) if cp.has_option(sec, key) else cur

    def onoff(sec, key, cur):
        if not cp.has_option(sec, key):
            return cur
        v = cp.get(sec, key).strip().lower()
        if v in ("on", "true", "1", "yes"):
            return True
        if v in ("off", "false", "0", "no"):
            return False
        raise ConfigError(f"[{sec}] {key} must be on/off (got {v!r})")

    if cp.has_section("sim"):
        cfg.name = cp.get("sim", "scenario", fallback=cfg.name)
        cfg.dt = fget("sim", "dt", cfg.dt)
        cfg.duration = fget("sim", "duration", cfg.duration)
        cfg.wake_on = onoff("sim", "wake", cfg.wake_on)
        cfg.observers_on = onoff("sim", "observers", cfg.observers_on)
        cfg.uncertainty_on = onoff("sim", "uncertainty", cfg.uncertainty_on)
        if cp.get("sim", "speed", fallback="").strip():
            cfg.speed = cp.getfloat("sim", "speed")
        cfg.gust_amp = fget("sim", "gust_amp", cfg.gust_amp)
        cfg.gust_period = fget("sim", "gust_period", cfg.gust_period)
    if cp.has_section("planner"):
        cfg.r_x = fget("planner", "r_x", cfg.r_x)
        cfg.r_y = fget("planner", "r_y", cfg.r_y)
        cfg.x_l0 = fget("planner", "x_l0", cfg.x_l0)
        cfg.y_l0 = fget("planner", "y_l0", cfg.y_l0)
        cfg.z_l0 = fget("planner", "z_l0", cfg.z_l0)
        if cp.has_option("planner", "chi_l0_deg"):
            cfg.chi_l0 = math.radians(cp.getfloat("planner", "chi_l0_deg"))
        if cp.has_option("planner", "alpha_f0_deg"):
            cfg.alpha_f0 = math.radians(cp.getfloat("planner", "alpha_f0_deg"))
        cfg.ramp = fget("planner", "ramp", cfg.ramp)
        if cp.has_option("planner", "segments"):
            cfg.segments = _parse_segments(cp.get("planner", "segments"))
    if cp.has_section("wake"):
        if cp.has_option("wake", "n_strips"):
            cfg.n_strips = cp.getint("wake", "n_strips")
        cfg.core_fraction = fget("wake", "core_fraction", cfg.core_fraction)
        cfg.load_core_fraction = fget("wake", "load_core_fraction",
                                      cfg.load_core_fraction)
        cfg.rollup_spans = fget("wake", "rollup_spans", cfg.rollup_spans)
    if cp.has_section("vehicle"):
        veh = cfg.vehicle._asdict()
        aero = cfg.aero._asdict()
        for key in cp.options("vehicle"):
            val = cp.getfloat("vehicle", key)
            if key in _VEHICLE_KEYMAP:
                veh[_VEHICLE_KEYMAP[key]] = val
            elif key in aero:
                aero[key] = val
            else:
                raise ConfigError(f"[vehicle] unknown key {key!r}")
        cfg.vehicle = VehicleParams(**veh)
        cfg.aero = AeroCoeffs(**aero)
    if cp.has_section("outer_loop"):
        og = cfg.outer._asdict()
        for key in cp.options("outer_loop"):
            val = cp.getfloat("outer_loop", key)
            if key in _OUTER_KEYMAP:
                og[_OUTER_KEYMAP[key]] = val
            elif key == "C_z":
                pass  # carried by the parameter table, unused by every law
            elif key == "alpha_d_max_deg":
                og["alpha_d_max"] = math.radians(val)
            elif key == "mu_d_max_deg":
                og["mu_d_max"] = math.radians(val)
            else:
                raise ConfigError(f"[outer_loop] unknown key {key!r}")
        cfg.outer = OuterGains(**og)
    if cp.has_section("inner_loop"):
        ig = cfg.inner._asdict()
        for key in cp.options("inner_loop"):
            val = cp.getfloat("inner_loop", key)
            if key in ig and not key.endswith("_max"):
                ig[key] = val
            elif key in ("da_max_deg", "de_max_deg", "dr_max_deg"):
                ig[key[:2] + "_max"] = math.radians(val)
            else:
                raise ConfigError(f"[inner_loop] unknown key {key!r}")
        cfg.inner = InnerGains(**ig)
    return cfg


def with_overrides(cfg: ScenarioConfig, *, dt=None, speed=None, observers=None,
                   wake=None, duration=None, uncertainty=None) -> ScenarioConfig:
    """Typed CLI overrides on top of a loaded configuration."""
    out = replace(cfg)
    if dt is not None:
        out.dt = float(dt)
    if duration is not None:
        out.duration = float(duration)
    if speed is not None:
        out.speed = float(speed)
    if observers is not None:
        out.observers_on = bool(observers)
    if wake is not None:
        out.wake_on = bool(wake)
    if uncertainty is not None:
        out.uncertainty_on = bool(uncertainty)
    return out
