"""Virtual ground, walking-velocity estimation, slope compensation and travel.

Platform positions are in the device frame: a foot in stance slides backward
at the estimated walking speed, so forward avatar travel shows up as a
negative ``d_x``. The bridge negates travel before it reaches the avatar.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np
from numba import njit

DEFAULT_SPEED_LIMIT = 0.5  # m/s walking clamp
MIN_FOOTSTEP_RUN = 1e-3  # m, below this the forefoot/rearfoot slope is undefined

FLAT, STAIR, UNEVEN, EXTERNAL = 0, 1, 2, 3


@dataclass(frozen=True)
class Flat:
    height: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.height):
            raise ValueError("height must be finite")


@dataclass(frozen=True)
class Stair:
    slope: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.slope):
            raise ValueError("slope must be finite")


@dataclass(frozen=True)
class Uneven:
    step_heights: tuple[float, ...] = (0.0,)

    def __post_init__(self):
        heights = tuple(float(h) for h in self.step_heights)
        if not heights:
            raise ValueError("Uneven needs at least one step height")
        if not all(math.isfinite(h) for h in heights):
            raise ValueError("step heights must be finite")
        object.__setattr__(self, "step_heights", heights)


@dataclass
class External:
    """Heights pushed in by a terrain service, one slot per foot."""

    heights: list = field(default_factory=lambda: [None, None])
    fallback_used: bool = False

    def receive(self, foot: int, height: float) -> None:
        if not math.isfinite(height):
            raise ValueError("terrain height must be finite")
        self.heights[foot] = float(height)


TerrainProfile = Union[Flat, Stair, Uneven, External]


def terrain_code(profile: TerrainProfile) -> int:
    return {Flat: FLAT, Stair: STAIR, Uneven: UNEVEN, External: EXTERNAL}[type(profile)]


@njit(cache=True)
def ground_z(kind, flat_height, slope, heights, step_index, x, ext_height, ext_valid):
    """Return ``(z, fell_back)``; ``fell_back`` is set when External has no data yet."""
    if kind == FLAT:
        return flat_height, False
    if kind == STAIR:
        return slope * x, False
    if kind == UNEVEN:
        return heights[step_index % heights.shape[0]], False
    if ext_valid:
        return ext_height, False
    return 0.0, True


def ground_height(profile: TerrainProfile, x: float, step_index: int = 0, foot: int = 0) -> float:
    if not math.isfinite(x):
        raise ValueError("x must be finite")
    if isinstance(profile, Flat):
        return profile.height
    if isinstance(profile, Stair):
        return profile.slope * x
    if isinstance(profile, Uneven):
        return profile.step_heights[step_index % len(profile.step_heights)]
    h = profile.heights[foot]
    if h is None:
        profile.fallback_used = True
        return 0.0
    return h


@dataclass(frozen=True)
class FixedSpeed:
    v: float = 0.4


@dataclass(frozen=True)
class Dynamic:
    pass


WalkMode = Union[FixedSpeed, Dynamic]


@dataclass(frozen=True)
class WalkState:
    user_mass: float = 80.0  # kg
    walk_velocity: float = 0.0  # m/s
    travel: tuple[float, float] = (0.0, 0.0)  # (d_x, d_z) in m
    current_slope: float = 0.0
    speed_limit: float = DEFAULT_SPEED_LIMIT
    mode: WalkMode = field(default_factory=Dynamic)
    allow_reverse: bool = False
    fault: bool = False

    def __post_init__(self):
        if not self.user_mass > 0:
            raise ValueError("user_mass must be > 0")
        if not self.speed_limit > 0:
            raise ValueError("speed_limit must be > 0")
        if not math.isfinite(self.current_slope):
            raise ValueError("slope must be finite")
        if abs(self.walk_velocity) > self.speed_limit:
            raise ValueError("walk_velocity exceeds speed_limit")


@dataclass(frozen=True)
class FootstepRecord:
    forefoot: tuple[float, float]
    rearfoot: tuple[float, float]
    step_index: int = 0


class DegenerateFootstep(ValueError):
    """Forefoot and rearfoot share an x position so the slope is undefined."""


@njit(cache=True)
def estimate_step(v_prev, f_grf_x, mass, dt, speed_limit, allow_reverse):
    v = v_prev + f_grf_x / mass * dt
    lo = -speed_limit if allow_reverse else 0.0
    if v > speed_limit:
        v = speed_limit
    elif v < lo:
        v = lo
    return v


@njit(cache=True)
def slope_from(x_f, z_f, x_r, z_r, previous):
    """Return ``(m_k, degenerate)``; a degenerate record keeps ``previous``."""
    run = x_f - x_r
    if abs(run) < MIN_FOOTSTEP_RUN:
        return previous, True
    return (z_f - z_r) / run, False


def estimate_walk_velocity(state: WalkState, f_grf_x: float, dt: float) -> WalkState:
    if not dt > 0:
        raise ValueError("dt must be > 0")
    if isinstance(state.mode, FixedSpeed):
        return replace(state, walk_velocity=state.mode.v, fault=False)
    if not math.isfinite(f_grf_x):
        return replace(state, fault=True)
    v = estimate_step(state.walk_velocity, float(f_grf_x), state.user_mass, float(dt),
                      state.speed_limit, state.allow_reverse)
    return replace(state, walk_velocity=v, fault=False)


def stance_platform_command(state: WalkState) -> tuple[float, float]:
    v_px = -state.walk_velocity
    return v_px, state.current_slope * v_px


def update_slope(rec: FootstepRecord) -> float:
    m, degenerate = slope_from(*map(float, rec.forefoot), *map(float, rec.rearfoot), 0.0)
    if degenerate:
        raise DegenerateFootstep(
            f"forefoot and rearfoot x differ by less than {MIN_FOOTSTEP_RUN} m"
        )
    return m


def apply_footstep(state: WalkState, rec: FootstepRecord) -> tuple[WalkState, bool]:
    """Update the slope from a new footstep, keeping the old slope when degenerate."""
    try:
        return replace(state, current_slope=update_slope(rec)), False
    except DegenerateFootstep:
        return state, True


def integrate_travel(state: WalkState, v_px: float, v_pz: float, dt: float) -> WalkState:
    if not dt > 0:
        raise ValueError("dt must be > 0")
    d_x, d_z = state.travel
    return replace(state, travel=(d_x + v_px * dt, d_z + v_pz * dt))


def heights_array(profile: TerrainProfile) -> np.ndarray:
    if isinstance(profile, Uneven):
        return np.asarray(profile.step_heights, dtype=np.float64)
    return np.zeros(1)
