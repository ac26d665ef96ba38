"""Simulated gantry axes, force sensor and an impedance-coupled synthetic walker.

The inner velocity loop of each actuator is modelled as a transport delay of
a few control ticks followed by a first-order lag. The synthetic user pulls
each platform toward a planned foot path through a spring-damper and loads
it with body weight while standing on it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .gait import GaitPhase, FootState, WORKSPACE_X, WORKSPACE_Z
from .terrain import Flat, Stair, Uneven, External, TerrainProfile

G = 9.81
MAX_USER_MASS = 90.0  # kg, design envelope of the device


@njit(cache=True)
def lag_step(v, pos, u, dt, tau, v_limit, pos_min, pos_max):
    """Advance one axis by one tick. Returns ``(v, pos, limit_hit)``."""
    v = v + (u - v) * dt / tau
    if v > v_limit:
        v = v_limit
    elif v < -v_limit:
        v = -v_limit
    pos = pos + v * dt
    hit = False
    if pos > pos_max:
        pos = pos_max
        hit = True
        if v > 0.0:
            v = 0.0
    elif pos < pos_min:
        pos = pos_min
        hit = True
        if v < 0.0:
            v = 0.0
    return v, pos, hit


@njit(cache=True)
def lowpass_step(y, u, alpha):
    return y + alpha * (u - y)


@njit(cache=True)
def impedance_force(k_h, b_h, x_ref, z_ref, vx_ref, vz_ref, x, z, vx, vz, load):
    """Spring-damper pull toward the reference with ``load`` N of weight on z."""
    fx = k_h * (x_ref - x) + b_h * (vx_ref - vx)
    fz = k_h * (z_ref - z) + b_h * (vz_ref - vz) - load
    return fx, fz


@dataclass(frozen=True)
class GantryAxis:
    position: float = 0.0
    velocity: float = 0.0
    lag_time_constant: float = 0.005  # s
    command_delay: int = 3  # ticks
    travel_limits: tuple[float, float] = WORKSPACE_X
    velocity_limit: float = 1.0  # m/s
    delayed_command_queue: tuple[float, ...] | None = None
    limit_hit: bool = False

    def __post_init__(self):
        if not self.lag_time_constant > 0:
            raise ValueError("lag_time_constant must be > 0")
        if self.command_delay < 0:
            raise ValueError("command_delay must be >= 0")
        lo, hi = self.travel_limits
        if not lo < hi:
            raise ValueError("travel_limits must be increasing")
        if self.delayed_command_queue is None:
            object.__setattr__(self, "delayed_command_queue", (0.0,) * self.command_delay)
        elif len(self.delayed_command_queue) != self.command_delay:
            raise ValueError("queue length must equal command_delay")


def step_axis(axis: GantryAxis, v_cmd: float, dt: float) -> GantryAxis:
    if not dt > 0:
        raise ValueError("dt must be > 0")
    queue = axis.delayed_command_queue + (float(v_cmd),)
    applied, queue = queue[0], queue[1:]
    v, pos, hit = lag_step(axis.velocity, axis.position, applied, float(dt),
                           axis.lag_time_constant, axis.velocity_limit, *axis.travel_limits)
    return replace(axis, position=pos, velocity=v, delayed_command_queue=queue, limit_hit=hit)


@dataclass(frozen=True)
class ForceSensorModel:
    noise_sigma: float = 0.5  # N
    lowpass_cutoff: float = 100.0  # Hz

    def __post_init__(self):
        if not self.noise_sigma >= 0:
            raise ValueError("noise_sigma must be >= 0")
        if not self.lowpass_cutoff > 0:
            raise ValueError("lowpass_cutoff must be > 0")

    def alpha(self, dt: float) -> float:
        return -math.expm1(-2.0 * math.pi * self.lowpass_cutoff * dt)


class ForceSensor:
    """Stateful sensor channel with its own seeded noise stream."""

    def __init__(self, model: ForceSensorModel, seed: int = 0, initial: float = 0.0):
        self.model = model
        self.filtered = float(initial)
        self.rng = np.random.default_rng(seed)

    def sense(self, true_force: float, dt: float) -> float:
        return sense_force(self, true_force, dt)


def sense_force(sensor: ForceSensor, true_force: float, dt: float) -> float:
    if not dt > 0:
        raise ValueError("dt must be > 0")
    sensor.filtered = lowpass_step(sensor.filtered, float(true_force), sensor.model.alpha(dt))
    noise = sensor.rng.normal(0.0, sensor.model.noise_sigma) if sensor.model.noise_sigma else 0.0
    return sensor.filtered + noise


@dataclass(frozen=True)
class WalkerParams:
    """Timing and shape of the synthetic user's planned foot path."""

    stance_time: float = 0.9  # s
    swing_time: float = 1.3  # s
    clearance: float = 0.10  # m
    first_liftoff: float = 0.1  # s, toe-off of foot 0
    # (t, v) knots of the intended walking speed, linearly interpolated
    speed_profile: tuple[tuple[float, float], ...] = ((0.0, 0.4),)

    def __post_init__(self):
        if not (self.stance_time > 0 and self.swing_time > 0):
            raise ValueError("stance_time and swing_time must be > 0")
        if not self.clearance >= 0:
            raise ValueError("clearance must be >= 0")
        if not self.speed_profile:
            raise ValueError("speed_profile needs at least one knot")
        ts = [k[0] for k in self.speed_profile]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("speed_profile times must be increasing")
        object.__setattr__(self, "speed_profile",
                           tuple((float(a), float(b)) for a, b in self.speed_profile))

    @property
    def cycle_time(self) -> float:
        return self.stance_time + self.swing_time

    def speed(self, t):
        knots = np.asarray(self.speed_profile)
        return np.interp(t, knots[:, 0], knots[:, 1])


# Columns of a walker reference sample.
REF_X, REF_Z, REF_VX, REF_VZ, REF_LOAD = range(5)


@dataclass
class WalkerReference:
    """Planned foot path sampled on the control grid: ``data[tick, foot, column]``."""

    dt: float
    data: np.ndarray
    liftoffs: list = field(default_factory=list)  # per foot, planned toe-off times
    touchdowns: list = field(default_factory=list)

    def at(self, t: float, foot: int) -> np.ndarray:
        """Sample at time ``t``; outside the plan the boundary value is held."""
        i = int(round(t / self.dt))
        i = min(max(i, 0), self.data.shape[0] - 1)
        return self.data[i, foot]


def _cycloid(tau):
    return tau - np.sin(2 * np.pi * tau) / (2 * np.pi), 1 - np.cos(2 * np.pi * tau)


def build_walker_reference(
    params: WalkerParams, world: TerrainProfile, n: int, dt: float, ramp_time: float = 0.1
) -> WalkerReference:
    """Plan both feet over ``n`` ticks with feet half a cycle apart.

    In stance a foot rides the belt backward at the intended speed. The swing
    is the belt motion plus a cycloid that carries the foot to its next
    landing spot, so position and velocity stay continuous at lift-off and
    touch-down.
    """
    if isinstance(world, External):
        raise ValueError("the walker needs a concrete world profile, not External")
    Ts, Tw = params.stance_time, params.swing_time
    T = Ts + Tw
    t = np.arange(n) * dt
    # Belt displacement on a grid extended past the run so event lookups never clip.
    tg = np.arange(n + int(2 * T / dt) + 2) * dt
    vg = params.speed(tg)
    Bg = np.concatenate(([0.0], np.cumsum(0.5 * (vg[1:] + vg[:-1]) * dt)))

    def belt(tt):
        return np.interp(tt, tg, Bg)

    v = params.speed(t)
    Bt = belt(t)

    def stance_z(x, landing):
        if isinstance(world, Stair):
            return world.slope * x, world.slope
        if isinstance(world, Uneven):
            h = world.step_heights[landing % len(world.step_heights)]
            return np.full_like(x, h), 0.0
        return np.full_like(x, world.height), 0.0

    data = np.zeros((n, 2, 5))
    liftoffs, touchdowns = [], []
    h = params.clearance
    for f in range(2):
        lo0 = params.first_liftoff + f * T / 2
        # Both feet stand from t=0 until their first toe-off, placed so the
        # first lift happens at the usual rear position.
        t_strike, B_strike = 0.0, 0.0
        x_strike = -float(params.speed(0.0)) * Ts / 2 + belt(lo0)
        landing = 0
        lo = lo0
        los, tds = [], []
        while True:
            # stance over [t_strike, lo)
            m = (t >= t_strike) & (t < lo)
            if m.any():
                x = x_strike - (Bt[m] - B_strike)
                z, dz = stance_z(x, landing)
                data[m, f, REF_X] = x
                data[m, f, REF_Z] = z
                data[m, f, REF_VX] = -v[m]
                data[m, f, REF_VZ] = -dz * v[m]
                data[m, f, REF_LOAD] = np.clip((lo - t[m]) / ramp_time, 0.0, 1.0)
            if lo >= t[-1] + dt:
                break
            x_lo = x_strike - (belt(lo) - B_strike)
            z_lo = float(stance_z(np.array([x_lo]), landing)[0][0])
            td = lo + Tw
            landing += 2 if landing else f + 1
            x_td = float(params.speed(td)) * Ts / 2
            z_td = float(stance_z(np.array([x_td]), landing)[0][0])
            los.append(lo)
            tds.append(td)
            m = (t >= lo) & (t < td)
            if m.any():
                tau = (t[m] - lo) / Tw
                c, dc = _cycloid(tau)
                Dw = x_td - x_lo + (belt(td) - belt(lo))
                x = x_lo - (Bt[m] - belt(lo)) + Dw * c
                vx = -v[m] + Dw / Tw * dc
                bump = h * (1 - np.cos(2 * np.pi * tau)) / 2
                dbump = h * np.pi / Tw * np.sin(2 * np.pi * tau)
                if isinstance(world, Stair):
                    z, vz = world.slope * x, world.slope * vx
                else:
                    z, vz = z_lo + (z_td - z_lo) * c, (z_td - z_lo) / Tw * dc
                data[m, f, REF_X] = x
                data[m, f, REF_Z] = z + bump
                data[m, f, REF_VX] = vx
                data[m, f, REF_VZ] = vz + dbump
                data[m, f, REF_LOAD] = (tau >= 0.5).astype(float)
            t_strike, x_strike, B_strike = td, x_td, belt(td)
            lo = td + Ts
        liftoffs.append(los)
        touchdowns.append(tds)
    return WalkerReference(dt=dt, data=data, liftoffs=liftoffs, touchdowns=touchdowns)


@dataclass
class HumanModel:
    stiffness: float = 2000.0  # N/m
    damping: float = 100.0  # N*s/m
    user_mass: float = 80.0  # kg
    weight_ramp_time: float = 0.1  # s
    reference: WalkerReference | None = None

    def __post_init__(self):
        if not (self.stiffness >= 0 and self.damping >= 0):
            raise ValueError("stiffness and damping must be >= 0")
        if not 0 < self.user_mass <= MAX_USER_MASS:
            raise ValueError(f"user_mass must be in (0, {MAX_USER_MASS}] kg")
        if not self.weight_ramp_time > 0:
            raise ValueError("weight_ramp_time must be > 0")


def weight_fraction(t: float, t_strike: float | None, plan_load: float, ramp_time: float) -> float:
    ramp_in = 1.0 if t_strike is None else min(1.0, max(0.0, (t - t_strike) / ramp_time))
    return min(ramp_in, plan_load)


def human_force(
    model: HumanModel,
    t: float,
    platform: FootState,
    phase: GaitPhase,
    foot: int = 0,
    t_strike: float | None = None,
) -> tuple[float, float]:
    """Force the synthetic user applies to one platform (+z up).

    ``t_strike`` is the detected heel strike that started the current stance;
    leave it ``None`` to treat the weight as fully ramped in.
    """
    if model.reference is None:
        raise ValueError("HumanModel has no reference trajectory")
    ref = model.reference.at(t, foot)
    load = 0.0
    if phase == GaitPhase.STANCE:
        load = model.user_mass * G * weight_fraction(t, t_strike, ref[REF_LOAD],
                                                      model.weight_ramp_time)
    (x, z), (vx, vz) = platform.position, platform.velocity
    return impedance_force(model.stiffness, model.damping, ref[REF_X], ref[REF_Z],
                           ref[REF_VX], ref[REF_VZ], x, z, vx, vz, load)


def check_reference_workspace(ref: WalkerReference) -> None:
    x, z = ref.data[..., REF_X], ref.data[..., REF_Z]
    if x.min() < WORKSPACE_X[0] or x.max() > WORKSPACE_X[1]:
        raise ValueError(f"walker x path [{x.min():.3f}, {x.max():.3f}] leaves the workspace")
    if z.min() < WORKSPACE_Z[0] or z.max() > WORKSPACE_Z[1]:
        raise ValueError(f"walker z path [{z.min():.3f}, {z.max():.3f}] leaves the workspace")
