"""CSV and plot exports of a telemetry log."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .gait import STANCE  # noqa: E402
from .runtime import TelemetryLog  # noqa: E402

KINDS = ("trajectory-force", "velocity-tracking", "travel")
EXPORT_RATE_HZ = 100.0


def _decimate(log: TelemetryLog) -> np.ndarray:
    step = max(1, int(round(log.rate / EXPORT_RATE_HZ)))
    return np.arange(0, len(log), step)


def _write_csv(path: Path, header: list[str], cols: list[np.ndarray]) -> None:
    np.savetxt(path, np.column_stack(cols), delimiter=",", header=",".join(header),
               comments="", fmt="%.9g")


def _trajectory_force(log, idx, foot, out: Path, stem: str) -> list[Path]:
    x, z = log.foot(foot, "x")[idx], log.foot(foot, "z")[idx]
    fx, fz = log.foot(foot, "fx")[idx], log.foot(foot, "fz")[idx]
    csv_path = out / f"{stem}.csv"
    _write_csv(csv_path, ["x", "z", "f_x", "f_z"], [x, z, fx, fz])
    swing = log.foot(foot, "phase")[idx] != STANCE
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(x, z, color="0.6", lw=0.8)
    ax.quiver(x[swing], z[swing], fx[swing], fz[swing], angles="xy", color="tab:red",
              width=0.002, scale=2000)
    ax.set_xlabel("x [m]")
    ax.set_ylabel("z [m]")
    ax.set_title(f"foot {foot}: swing path and interaction force")
    ax.set_aspect("equal", adjustable="datalim")
    png = out / f"{stem}.png"
    fig.savefig(png, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return [csv_path, png]


def _velocity_tracking(log, idx, foot, out: Path, stem: str) -> list[Path]:
    t = log["t"][idx]
    cols = {"t": t, "phase": log.foot(foot, "phase")[idx]}
    for axis in ("x", "z"):
        vd, v = log.foot(foot, f"vd{axis}")[idx], log.foot(foot, f"v{axis}")[idx]
        cols[f"vd_{axis}"], cols[f"v_{axis}"], cols[f"err_{axis}"] = vd, v, vd - v
    csv_path = out / f"{stem}.csv"
    _write_csv(csv_path, list(cols), list(cols.values()))
    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(8, 6))
    for ax, axis in zip(axes[:2], ("x", "z")):
        ax.plot(t, cols[f"vd_{axis}"] * 1000, label="target")
        ax.plot(t, cols[f"v_{axis}"] * 1000, label="actual", lw=0.8)
        ax.set_ylabel(f"v_{axis} [mm/s]")
        ax.legend(loc="upper right")
    axes[2].plot(t, cols["err_x"] * 1000, label="x")
    axes[2].plot(t, cols["err_z"] * 1000, label="z")
    axes[2].axhline(100, color="0.5", ls="--", lw=0.8)
    axes[2].axhline(-100, color="0.5", ls="--", lw=0.8)
    axes[2].set_ylabel("error [mm/s]")
    axes[2].set_xlabel("t [s]")
    axes[2].legend(loc="upper right")
    png = out / f"{stem}.png"
    fig.savefig(png, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return [csv_path, png]


def footstep_heights(log: TelemetryLog) -> tuple[np.ndarray, np.ndarray]:
    """Time and avatar-frame height of every heel strike (ground under the foot minus ``d_z``)."""
    times, heights = [], []
    for f in range(2):
        phase = log.foot(f, "phase")
        strikes = np.flatnonzero((phase[1:] == STANCE) & (phase[:-1] != STANCE)) + 1
        times.append(log["t"][strikes])
        heights.append(log.foot(f, "ground")[strikes] - log["d_z"][strikes])
    t, h = np.concatenate(times), np.concatenate(heights)
    order = np.argsort(t)
    return t[order], h[order]


def _travel(log, idx, foot, out: Path, stem: str) -> list[Path]:
    t = log["t"][idx]
    d_x, d_z = log["d_x"][idx], log["d_z"][idx]
    cols = [t, d_x, d_z, -d_x, -d_z, log["v_x"][idx], log["m_k"][idx], log["step"][idx]]
    csv_path = out / f"{stem}.csv"
    _write_csv(csv_path, ["t", "d_x", "d_z", "forward", "height", "v_x", "m_k", "step"], cols)
    st, sh = footstep_heights(log)
    fig, axes = plt.subplots(2, 1, sharex=True, figsize=(8, 5))
    axes[0].plot(t, -d_x)
    axes[0].set_ylabel("forward travel [m]")
    axes[1].plot(t, -d_z, label="avatar height")
    axes[1].plot(st, sh, "o", ms=4, label="footstep height")
    axes[1].set_ylabel("height [m]")
    axes[1].set_xlabel("t [s]")
    axes[1].legend(loc="upper left")
    png = out / f"{stem}.png"
    fig.savefig(png, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return [csv_path, png]


_WRITERS = {"trajectory-force": _trajectory_force, "velocity-tracking": _velocity_tracking,
            "travel": _travel}


def export(log: TelemetryLog, kind: str, out_dir: str | Path = ".", foot: int = 0) -> list[Path]:
    """Write ``<kind>.csv`` and ``<kind>.png`` into ``out_dir`` and return their paths."""
    if kind not in _WRITERS:
        raise ValueError(f"unknown export kind {kind!r}; valid kinds: {', '.join(KINDS)}")
    if len(log) == 0:
        raise ValueError("cannot export an empty telemetry log")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return _WRITERS[kind](log, _decimate(log), foot, out, kind)
