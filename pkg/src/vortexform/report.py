"""Figure rendering for scenario runs: tracking errors with the wingspan
bands, actuator histories, and the speed-sweep summary.  File output only
(SVG); no interactive display."""

import numpy as np
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .sim import TELEMETRY_COLUMNS

_COL = {name: i for i, name in enumerate(TELEMETRY_COLUMNS)}


def _thin(telem: np.ndarray, max_points: int = 6000) -> np.ndarray:
    step = max(1, telem.shape[0] // max_points)
    return telem[::step]


def tracking_error_figure(telem: np.ndarray, span: float, path) -> None:
    """x/y/z tracking errors vs time; 5% and 10% span bands on y and z."""
    d = _thin(telem)
    t = d[:, _COL["t"]]
    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(9, 7))
    labels = ("x_e [m]", "y_e [m]", "z_e [m]")
    for ax, col, lab in zip(axes, ("x_e", "y_e", "z_e"), labels):
        ax.plot(t, d[:, _COL[col]], lw=0.9, color="tab:blue")
        if col in ("y_e", "z_e"):
            for frac, shade in ((0.10, 0.10), (0.05, 0.18)):
                ax.axhspan(-frac * span, frac * span, color="tab:green",
                           alpha=shade, lw=0)
        ax.set_ylabel(lab)
        ax.grid(True, alpha=0.3)
    axes[-1].set_xlabel("time [s]")
    axes[0].set_title("formation tracking errors (bands: 5% / 10% span)")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def actuator_figure(telem: np.ndarray, path) -> None:
    d = _thin(telem)
    t = d[:, _COL["t"]]
    fig, axes = plt.subplots(2, 1, sharex=True, figsize=(9, 5.5))
    axes[0].plot(t, d[:, _COL["T"]] / 1e3, lw=0.9, label="thrust")
    axes[0].plot(t, d[:, _COL["T_c"]] / 1e3, lw=0.7, ls="--", label="command")
    axes[0].set_ylabel("thrust [kN]")
    axes[0].legend(loc="best", fontsize=8)
    axes[0].grid(True, alpha=0.3)
    for col, lab in (("delta_a", "aileron"), ("delta_e", "elevator"),
                     ("delta_r", "rudder")):
        axes[1].plot(t, np.degrees(d[:, _COL[col]]), lw=0.8, label=lab)
    axes[1].set_ylabel("surface [deg]")
    axes[1].set_xlabel("time [s]")
    axes[1].legend(loc="best", fontsize=8)
    axes[1].grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def estimate_figure(telem: np.ndarray, path) -> None:
    """Wake velocity estimates and the loop-observer outputs."""
    d = _thin(telem)
    t = d[:, _COL["t"]]
    fig, axes = plt.subplots(2, 1, sharex=True, figsize=(9, 5.5))
    for col in ("W_hat_x", "W_hat_y", "W_hat_z"):
        axes[0].plot(t, d[:, _COL[col]], lw=0.8, label=col)
    axes[0].set_ylabel("wake estimate [m/s]")
    axes[0].legend(loc="best", fontsize=8)
    axes[0].grid(True, alpha=0.3)
    for col in ("d_hat_V", "d_hat_gamma", "d_hat_chi"):
        axes[1].plot(t, d[:, _COL[col]], lw=0.8, label=col)
    axes[1].set_ylabel("loop estimates")
    axes[1].set_xlabel("time [s]")
    axes[1].legend(loc="best", fontsize=8)
    axes[1].grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def sweep_figure(results: list, path) -> None:
    """Steady lateral error vs speed with the 1/V^2 guide line."""
    V = np.array([r["speed"] for r in results])
    y = np.array([r["steady_abs_y_e"] for r in results])
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.plot(V, y, "o-", label="steady |y_e|")
    guide = y[0] * (V[0] / V) ** 2
    ax.plot(V, guide, "k--", lw=0.8, label=r"$\propto 1/V^2$")
    ax.set_xlabel("speed [m/s]")
    ax.set_ylabel("steady turn |y_e| [m]")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_run_figures(telem: np.ndarray, span: float, out_dir) -> list:
    """Standard figure set for one run; returns the written paths."""
    import os
    paths = []
    for name, fn in (("tracking_errors.svg",
                      lambda p: tracking_error_figure(telem, span, p)),
                     ("actuators.svg", lambda p: actuator_figure(telem, p)),
                     ("estimates.svg", lambda p: estimate_figure(telem, p))):
        path = os.path.join(str(out_dir), name)
        tmp = path + ".tmp.svg"
        fn(tmp)
        os.replace(tmp, path)
        paths.append(path)
    return paths
