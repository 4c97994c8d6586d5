"""Command line entry point.

Subcommands:
  run       one scenario: telemetry.csv, metrics.json, config_used.ini and
            SVG figures into the output directory
  sweep     the lateral speed study over a list of speeds
  selftest  analytic-oracle suites and the startup gain audits

Exit codes: 0 success, 1 selftest failure, 2 bad configuration,
3 simulation abort (snapshot written when an output directory is given).
All outputs are written via a temporary file and an atomic rename.
"""

import argparse
import json
import os
import sys

from .config import ConfigError, read_config, scenario_config, with_overrides, write_config
from .sim import SimulationAbort, lateral_speed_study, run_scenario, write_telemetry_csv

EXIT_OK = 0
EXIT_SELFTEST = 1
EXIT_CONFIG = 2
EXIT_ABORT = 3


def _onoff(value: str) -> bool:
    v = value.strip().lower()
    if v in ("on", "true", "1", "yes"):
        return True
    if v in ("off", "false", "0", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected on/off, got {value!r}")


def _write_atomic(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _load_config(args):
    if args.config:
        cfg = read_config(args.config)
    else:
        cfg = scenario_config(args.scenario)
    cfg = with_overrides(cfg, dt=args.dt, speed=getattr(args, "speed", None),
                         observers=args.observers, wake=args.wake,
                         duration=args.duration)
    cfg.validate()
    return cfg


def cmd_run(args) -> int:
    try:
        cfg = _load_config(args)
    except (ConfigError, ValueError, OSError) as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = args.out
    os.makedirs(out_dir, exist_ok=True)
    try:
        result = run_scenario(cfg, out_dir=out_dir)
    except SimulationAbort as err:
        path = getattr(err, "snapshot_path", os.path.join(out_dir, "abort_snapshot.json"))
        print(f"simulation abort: {err} (snapshot: {path})", file=sys.stderr)
        return EXIT_ABORT

    csv_path = os.path.join(out_dir, "telemetry.csv")
    write_telemetry_csv(csv_path + ".tmp", result.telemetry)
    os.replace(csv_path + ".tmp", csv_path)
    _write_atomic(os.path.join(out_dir, "metrics.json"), result.metrics.to_json())
    _write_atomic(os.path.join(out_dir, "config_used.ini"), write_config(cfg))
    if args.plots:
        from .report import render_run_figures
        render_run_figures(result.telemetry, cfg.vehicle.b, out_dir)

    m = result.metrics
    print(f"scenario {cfg.name}: {cfg.duration:.0f} s simulated in "
          f"{m.runtime_s:.2f} s wall")
    for p in m.phases:
        print(f"  window [{p['window'][0]:6.1f},{p['window'][1]:6.1f}] s  "
              f"max|y_e|={p['max_abs_y_e']:.3f} m  max|z_e|={p['max_abs_z_e']:.3f} m  "
              f"5%-band={'ok' if p['in_band_5pct'] else 'VIOLATED'}  "
              f"10%-band={'ok' if p['in_band_10pct'] else 'VIOLATED'}")
    print(f"  mean thrust (final 20 s): {m.mean_thrust_final20:.0f} N; "
          f"max |beta| = {m.max_abs_beta_deg:.3f} deg")
    return EXIT_OK


def cmd_sweep(args) -> int:
    try:
        speeds = [float(s) for s in args.speeds.split(",") if s.strip()]
        if len(speeds) < 2:
            raise ConfigError("sweep needs at least two speeds")
        if args.config:
            base = read_config(args.config)
        else:
            base = scenario_config("s2")
        base = with_overrides(base, dt=args.dt, duration=args.duration)
        base.validate()
    except (ConfigError, ValueError, OSError) as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    os.makedirs(args.out, exist_ok=True)

    workers = int(os.environ.get("VORTEXFORM_THREADS", "1"))
    try:
        if workers > 1:
            results = _sweep_parallel(speeds, base, min(workers, len(speeds)))
        else:
            results = lateral_speed_study(speeds, base_cfg=base)
    except SimulationAbort as err:
        print(f"simulation abort during sweep: {err}", file=sys.stderr)
        return EXIT_ABORT

    summary = []
    print(f"{'V [m/s]':>8}  {'steady |y_e| [m]':>18}  {'steady |z_e| [m]':>18}")
    for r in results:
        print(f"{r['speed']:8.1f}  {r['steady_abs_y_e']:18.4f}  "
              f"{r['steady_abs_z_e']:18.4f}")
        summary.append({"speed": r["speed"],
                        "steady_abs_y_e": r["steady_abs_y_e"],
                        "steady_abs_z_e": r["steady_abs_z_e"],
                        "metrics": r["metrics"].to_dict()})
        _write_atomic(os.path.join(args.out, f"metrics_V{r['speed']:.0f}.json"),
                      r["metrics"].to_json())
    mono = all(summary[i]["steady_abs_y_e"] > summary[i + 1]["steady_abs_y_e"]
               for i in range(len(summary) - 1))
    print(f"steady |y_e| strictly decreasing with speed: {'yes' if mono else 'NO'}")
    _write_atomic(os.path.join(args.out, "sweep_summary.json"),
                  json.dumps({"speeds": speeds, "monotone_decreasing": mono,
                              "runs": summary}, indent=2))
    if args.plots:
        from .report import sweep_figure
        path = os.path.join(args.out, "sweep.svg")
        sweep_figure(results, path + ".tmp.svg")
        os.replace(path + ".tmp.svg", path)
    return EXIT_OK


def _sweep_one(payload):
    speed, text = payload
    import io
    from .config import read_config  # noqa: F811 (worker import)
    import tempfile
    with tempfile.NamedTemporaryFile("w", suffix=".ini", delete=False) as fh:
        fh.write(text)
        path = fh.name
    try:
        cfg = read_config(path)
    finally:
        os.unlink(path)
    cfg.speed = speed
    res = run_scenario(cfg)
    import numpy as np
    turn_end = float(np.cumsum([s[0] for s in cfg.segments])[-2])
    t = res.telemetry[:, 0]
    sel = (t >= turn_end - 20.0) & (t <= turn_end)
    return {"speed": speed,
            "steady_abs_y_e": float(np.max(np.abs(res.telemetry[sel, 30]))),
            "steady_abs_z_e": float(np.max(np.abs(res.telemetry[sel, 31]))),
            "metrics": res.metrics}


def _sweep_parallel(speeds, base, workers):
    from concurrent.futures import ProcessPoolExecutor
    text = write_config(base)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_one, [(V, text) for V in speeds]))


def cmd_selftest(args) -> int:
    from .selftest import run_all
    results = run_all()
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_OK if not failed else EXIT_SELFTEST


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vortexform",
                                description="Close formation flight simulation")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario")
    run.add_argument("--scenario", default="s1", choices=("s1", "s2"))
    run.add_argument("--config", help="INI configuration file")
    run.add_argument("--out", default="out", help="output directory")
    run.add_argument("--dt", type=float, default=None)
    run.add_argument("--duration", type=float, default=None)
    run.add_argument("--speed", type=float, default=None)
    run.add_argument("--observers", type=_onoff, default=None, metavar="on|off")
    run.add_argument("--wake", type=_onoff, default=None, metavar="on|off")
    run.add_argument("--plots", action=argparse.BooleanOptionalAction, default=True)
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="lateral speed study")
    sweep.add_argument("--speeds", default="180,200,220",
                       help="comma-separated speeds in m/s")
    sweep.add_argument("--config", help="INI configuration file")
    sweep.add_argument("--out", default="out", help="output directory")
    sweep.add_argument("--dt", type=float, default=None)
    sweep.add_argument("--duration", type=float, default=None)
    sweep.add_argument("--plots", action=argparse.BooleanOptionalAction, default=True)
    sweep.set_defaults(func=cmd_sweep)

    st = sub.add_parser("selftest", help="analytic-oracle checks")
    st.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
