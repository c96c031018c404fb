"""Figures from a run directory's CSV logs.

Everything renders through the Agg backend so plots work headless. Each
helper returns the written file path; `render_run_plots` makes whatever
the available logs support and skips the rest.
"""

from __future__ import annotations

import csv
import glob
import os
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _read_csv(path: str) -> dict[str, np.ndarray]:
    """Columns of a log file as float arrays (non-numeric columns as object)."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"missing log file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    cols: dict[str, np.ndarray] = {}
    for j, name in enumerate(header):
        raw = [r[j] for r in rows]
        try:
            cols[name] = np.array([float(x) for x in raw])
        except ValueError:
            cols[name] = np.array(raw, dtype=object)
    return cols


def plot_path_overview(run_dir: str, out_path: Optional[str] = None) -> str:
    """True carrier track colored by phase, plus the dead-reckoned track."""
    data = _read_csv(os.path.join(run_dir, "carrier.csv"))
    out_path = out_path or os.path.join(run_dir, "path_overview.png")
    fig, ax = plt.subplots(figsize=(8.0, 7.0))
    phases = data["phase"].astype(int)
    cmap = plt.get_cmap("viridis")
    for ph in np.unique(phases):
        sel = phases == ph
        ax.plot(
            data["x"][sel],
            data["y"][sel],
            ".",
            ms=2.0,
            color=cmap((ph - 1) / 4.0),
            label=f"phase {ph}",
        )
    dvl = os.path.join(run_dir, "dvl_path.csv")
    if os.path.exists(dvl):
        d = _read_csv(dvl)
        ax.plot(d["x"], d["y"], "k--", lw=0.8, alpha=0.6, label="dead reckoning")
    ax.plot(data["x"][0], data["y"][0], "g^", ms=10, label="start")
    ax.plot(data["x"][-1], data["y"][-1], "rv", ms=10, label="end")
    ax.set_xlabel("east [m]")
    ax.set_ylabel("north [m]")
    ax.set_title("carrier track")
    ax.axis("equal")
    ax.legend(loc="best", fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return out_path


def plot_heading(run_dir: str, out_path: Optional[str] = None) -> str:
    data = _read_csv(os.path.join(run_dir, "carrier.csv"))
    out_path = out_path or os.path.join(run_dir, "heading.png")
    fig, axes = plt.subplots(2, 1, figsize=(9.0, 6.0), sharex=True)
    axes[0].plot(data["t"], np.degrees(data["yaw"]), lw=0.8, label="yaw")
    beta = data["beta_cmd"]
    ok = np.isfinite(beta)
    axes[0].plot(
        data["t"][ok], np.degrees(beta[ok]), ".", ms=1.5, alpha=0.5, label="commanded"
    )
    axes[0].set_ylabel("heading [deg]")
    axes[0].legend(loc="best", fontsize=8)
    axes[0].grid(alpha=0.3)
    axes[1].plot(data["t"], data["surge"], lw=0.8, label="surge")
    axes[1].plot(data["t"], data["sway"], lw=0.8, label="sway")
    axes[1].set_ylabel("speed [m/s]")
    axes[1].set_xlabel("t [s]")
    axes[1].legend(loc="best", fontsize=8)
    axes[1].grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return out_path


def plot_fit_history(run_dir: str, out_path: Optional[str] = None) -> str:
    data = _read_csv(os.path.join(run_dir, "fits.csv"))
    out_path = out_path or os.path.join(run_dir, "fits.png")
    fig, ax = plt.subplots(figsize=(9.0, 4.5))
    ax.plot(data["t"], data["length"], ".", ms=3, label="length")
    ax.plot(data["t"], data["width"], ".", ms=3, label="width")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("fitted dimension [m]")
    ax.set_title("rectangle fits of the tracked vessel")
    ax.legend(loc="best", fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return out_path


def plot_deck_motion(run_dir: str, out_path: Optional[str] = None) -> str:
    data = _read_csv(os.path.join(run_dir, "carrier.csv"))
    out_path = out_path or os.path.join(run_dir, "deck_motion.png")
    fig, ax = plt.subplots(figsize=(9.0, 4.0))
    ax.plot(data["t"], np.degrees(data["roll"]), lw=0.7, label="roll")
    ax.plot(data["t"], np.degrees(data["pitch"]), lw=0.7, label="pitch")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("angle [deg]")
    ax.set_title("wave-induced deck motion")
    ax.legend(loc="best", fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return out_path


def plot_uav_paths(run_dir: str, out_path: Optional[str] = None) -> str:
    files = sorted(glob.glob(os.path.join(run_dir, "uav_*.csv")))
    populated = []
    for path in files:
        data = _read_csv(path)
        if len(data["t"]):
            populated.append((os.path.basename(path)[:-4], data))
    if not populated:
        raise FileNotFoundError(f"no populated uav logs in {run_dir}")
    out_path = out_path or os.path.join(run_dir, "uav_paths.png")
    fig, (ax_xy, ax_z) = plt.subplots(
        1, 2, figsize=(11.0, 5.0), gridspec_kw={"width_ratios": [1.2, 1.0]}
    )
    for name, data in populated:
        ax_xy.plot(data["x"], data["y"], lw=0.8, label=name)
        ax_z.plot(data["t"], data["z"], lw=0.8, label=name)
    ax_xy.set_xlabel("deck x [m]")
    ax_xy.set_ylabel("deck y [m]")
    ax_xy.set_title("drone tracks (deck frame)")
    ax_xy.axis("equal")
    ax_xy.grid(alpha=0.3)
    ax_xy.legend(loc="best", fontsize=8)
    ax_z.set_xlabel("t [s]")
    ax_z.set_ylabel("altitude [m]")
    ax_z.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return out_path


def render_run_plots(run_dir: str) -> list[str]:
    """All plots the run directory's logs support. carrier.csv is required."""
    if not os.path.exists(os.path.join(run_dir, "carrier.csv")):
        raise FileNotFoundError(f"carrier.csv not found in {run_dir}")
    written = [
        plot_path_overview(run_dir),
        plot_heading(run_dir),
        plot_deck_motion(run_dir),
    ]
    fits = os.path.join(run_dir, "fits.csv")
    if os.path.exists(fits) and len(_read_csv(fits)["t"]):
        written.append(plot_fit_history(run_dir))
    try:
        written.append(plot_uav_paths(run_dir))
    except FileNotFoundError:
        pass
    return written
