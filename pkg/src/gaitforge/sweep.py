"""Grid sweep over virtual mass and damping with per-cell stability metrics."""

from __future__ import annotations

import copy
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy.signal import welch

from .config import ConfigError, ScenarioConfig
from .runtime import ScenarioInvalid, TelemetryLog, simulate

OSC_BAND_HZ = 5.0
OSC_RATIO = 30.0  # calibrated: tuned defaults score ~14, audible oscillation > 60


@dataclass(frozen=True)
class SweepCell:
    virtual_mass: float
    virtual_damping: float
    status: str  # ok | skipped
    reason: str = ""
    peak_swing_force: float = math.nan  # N
    tracking_rms: float = math.nan  # m/s, swing samples
    oscillation_ratio: float = math.nan
    oscillatory: bool = False
    velocity_per_force: float = math.nan  # steady-state m/s per N, 1/c_v


def swing_metrics(log: TelemetryLog) -> tuple[float, float]:
    """Peak force magnitude and RMS velocity-tracking error over swing samples."""
    forces, errors = [], []
    for f in range(2):
        sw = log.foot(f, "phase") == 0
        forces.append(np.hypot(log.foot(f, "fx"), log.foot(f, "fz"))[sw])
        errors.append((log.foot(f, "vdx") - log.foot(f, "vx"))[sw])
        errors.append((log.foot(f, "vdz") - log.foot(f, "vz"))[sw])
    force = np.concatenate(forces)
    err = np.concatenate(errors)
    peak = float(force.max()) if force.size else 0.0
    rms = float(np.sqrt(np.mean(err**2))) if err.size else 0.0
    return peak, rms


def oscillation_ratio(log: TelemetryLog, band_hz: float = OSC_BAND_HZ) -> float:
    """Largest spectral peak of the swing force above ``band_hz``, relative to the broadband trend.

    Stance samples carry the body weight and are zeroed so the load steps do
    not swamp the spectrum. The trend is a power-law fit over the band, so
    the smooth roll-off of gait harmonics scores near 1 and a resonance
    stands out as a narrow bump.
    """
    worst = 0.0
    for f in range(2):
        sw = log.foot(f, "phase") == 0
        for axis in ("fx", "fz"):
            sig = np.where(sw, log.foot(f, axis), 0.0)
            sig = sig - sig.mean()
            freqs, psd = welch(sig, fs=log.rate, nperseg=min(1024, sig.size))
            keep = (freqs > band_hz) & (psd > 0)
            if keep.sum() < 3:
                continue
            lf, lp = np.log(freqs[keep]), np.log(psd[keep])
            trend = np.polyval(np.polyfit(lf, lp, 1), lf)
            worst = max(worst, float(np.exp(lp - trend).max()))
    return worst


def _cell(args) -> SweepCell:
    base, m_v, c_v, threshold = args
    cfg = copy.deepcopy(base)
    cfg.admittance.virtual_mass = float(m_v)
    cfg.admittance.virtual_damping = float(c_v)
    try:
        cfg.validate()
        log = simulate(cfg)
    except (ConfigError, ScenarioInvalid) as exc:
        return SweepCell(m_v, c_v, "skipped", str(exc))
    peak, rms = swing_metrics(log)
    ratio = oscillation_ratio(log)
    return SweepCell(m_v, c_v, "ok", "", peak, rms, ratio, ratio > threshold,
                     math.inf if c_v == 0 else 1.0 / c_v)


def run_sweep(base: ScenarioConfig, masses, dampings, jobs: int = 1,
              threshold: float = OSC_RATIO) -> list[SweepCell]:
    """Evaluate every ``(m_v, c_v)`` pair; invalid cells are skipped, not fatal."""
    grid = [(base, float(m), float(c), threshold) for m in masses for c in dampings]
    if not grid:
        raise ValueError("sweep grid is empty")
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            return list(pool.map(_cell, grid))
    return [_cell(g) for g in grid]


def cells_to_rows(cells: list[SweepCell]) -> list[dict]:
    return [asdict(c) for c in cells]
