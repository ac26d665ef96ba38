"""Synthetic gait trajectories and actuator sizing by inverse dynamics.

A foot path in the device frame is a constant-speed backward stance followed
by a swing that superposes a cycloid on the belt motion. The sizing pipeline
turns the path into actuator forces, then into motor torque and speed after
the gearbox, and compares those peaks with a motor catalog.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

G = 9.81
AXES = ("x", "z")


@dataclass(frozen=True)
class GaitParams:
    """Gait shape.

    ``step_length`` is the full x-span a foot sweeps in the device frame over
    one cycle, swing overshoot included. ``cadence`` (steps per second, two
    per cycle) is derived from the other fields; pass it only to cross-check.
    """

    step_length: float = 0.67  # m
    foot_clearance: float = 0.14  # m
    walk_speed: float = 1.2  # m/s
    duty_factor: float = 0.6
    cadence: float | None = None

    def __post_init__(self):
        for name in ("step_length", "foot_clearance", "walk_speed"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if not 0.5 < self.duty_factor < 0.8:
            raise ValueError("duty_factor must lie in (0.5, 0.8) for walking")
        if self.cadence is not None and not math.isclose(self.cadence, self.derived_cadence, rel_tol=1e-6):
            raise ValueError(
                f"cadence {self.cadence} is inconsistent with the other fields "
                f"(derived {self.derived_cadence:.6g} steps/s)"
            )

    @property
    def overshoot_ratio(self) -> float:
        return swing_overshoot_ratio(self.duty_factor)

    @property
    def stance_length(self) -> float:
        return self.step_length / (1 + 2 * self.overshoot_ratio)

    @property
    def stance_time(self) -> float:
        return self.stance_length / self.walk_speed

    @property
    def cycle_time(self) -> float:
        return self.stance_time / self.duty_factor

    @property
    def swing_time(self) -> float:
        return self.cycle_time - self.stance_time

    @property
    def derived_cadence(self) -> float:
        return 2.0 / self.cycle_time

    @property
    def peak_swing_speed(self) -> float:
        """Device-frame swing peak ``v (1 + d) / (1 - d)``."""
        d = self.duty_factor
        return self.walk_speed * (1 + d) / (1 - d)


def swing_overshoot_ratio(duty: float) -> float:
    """How far the swing overshoots each end of the stance, per unit stance length.

    The device-frame swing velocity ``-v + (D/Tw)(1 - cos 2πτ)`` is zero at
    ``cos 2πτ = d``; the position there is the rear extreme.
    """
    tau = math.acos(duty) / (2 * math.pi)
    c = tau - math.sin(2 * math.pi * tau) / (2 * math.pi)
    return -(c - (1 - duty) * tau) / duty


@dataclass
class GaitTrajectory:
    """Samples on a uniform grid; each channel has shape ``(n, 2)`` for two feet."""

    t: np.ndarray
    x: np.ndarray
    z: np.ndarray
    vx: np.ndarray
    vz: np.ndarray
    ax: np.ndarray | None
    az: np.ndarray | None
    stance: np.ndarray

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])


def _foot(tc, p: GaitParams):
    """One foot with stance starting at cycle time 0."""
    S, v, h = p.stance_length, p.walk_speed, p.foot_clearance
    Ts, Tw = p.stance_time, p.swing_time
    Dw = S + v * Tw
    stance = tc < Ts
    tau = np.where(stance, 0.0, (tc - Ts) / Tw)
    w = 2 * np.pi * tau
    c = tau - np.sin(w) / (2 * np.pi)
    x = np.where(stance, S / 2 - v * tc, -S / 2 - v * (tc - Ts) + Dw * c)
    vx = np.where(stance, -v, -v + Dw / Tw * (1 - np.cos(w)))
    ax = np.where(stance, 0.0, Dw / Tw**2 * 2 * np.pi * np.sin(w))
    z = np.where(stance, 0.0, h * (1 - np.cos(w)) / 2)
    vz = np.where(stance, 0.0, h * np.pi / Tw * np.sin(w))
    az = np.where(stance, 0.0, h / 2 * (2 * np.pi / Tw) ** 2 * np.cos(w))
    return x, z, vx, vz, ax, az, stance


def generate_gait(params: GaitParams, duration: float, dt: float,
                  max_swing_speed: float | None = 10.0) -> GaitTrajectory:
    """Sample both feet, half a cycle apart, for ``duration`` seconds."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    if duration < 2 * params.cycle_time:
        raise ValueError(f"duration must cover two cycles ({2 * params.cycle_time:.3f} s)")
    if max_swing_speed is not None and params.peak_swing_speed > max_swing_speed:
        raise ValueError(
            f"swing peak {params.peak_swing_speed:.3f} m/s exceeds the cap {max_swing_speed} m/s"
        )
    t = np.arange(int(round(duration / dt)) + 1) * dt
    T = params.cycle_time
    chans = [np.empty((t.size, 2)) for _ in range(6)]
    stance = np.empty((t.size, 2), dtype=bool)
    for f in range(2):
        out = _foot(np.mod(t - f * T / 2, T), params)
        for ch, val in zip(chans, out[:6]):
            ch[:, f] = val
        stance[:, f] = out[6]
    return GaitTrajectory(t, *chans, stance)


@dataclass(frozen=True)
class MotorSpec:
    """Motor plus gearbox, all torques and speeds measured after the gear."""

    rated_torque_after_gear: float  # N*m
    momentary_max_torque: float  # N*m
    max_speed_after_gear: float  # RPM
    gear_ratio: float
    transmission_factor: float  # actuator N per N*m of output torque
    name: str = ""

    def __post_init__(self):
        for f in ("rated_torque_after_gear", "momentary_max_torque", "max_speed_after_gear",
                  "gear_ratio", "transmission_factor"):
            if not getattr(self, f) > 0:
                raise ValueError(f"{f} must be > 0")
        if self.momentary_max_torque < self.rated_torque_after_gear:
            raise ValueError("momentary_max_torque must be >= rated torque")

    @property
    def momentary_force(self) -> float:
        return self.momentary_max_torque * self.transmission_factor

    @property
    def rated_force(self) -> float:
        return self.rated_torque_after_gear * self.transmission_factor

    def with_gear_ratio(self, gear_ratio: float) -> "MotorSpec":
        """Same motor and linear drive behind a different reduction."""
        r = gear_ratio / self.gear_ratio
        return replace(self, rated_torque_after_gear=self.rated_torque_after_gear * r,
                       momentary_max_torque=self.momentary_max_torque * r,
                       max_speed_after_gear=self.max_speed_after_gear / r,
                       gear_ratio=gear_ratio)


def load_motor_catalog(path: str | Path | None = None) -> dict[str, dict[str, MotorSpec]]:
    """Read ``{name: {axis: MotorSpec}}`` from YAML; defaults to the bundled catalog."""
    if path is None:
        text = resources.files("gaitforge").joinpath("data/motors.yaml").read_text()
    else:
        text = Path(path).read_text()
    raw = yaml.safe_load(text) or {}
    catalog = {}
    for name, axes in raw.items():
        catalog[name] = {}
        for axis, spec in axes.items():
            if axis not in AXES:
                raise ValueError(f"{name}: unknown axis {axis!r}")
            spec = dict(spec)
            if "transmission_factor" not in spec:
                spec["transmission_factor"] = spec.pop("rated_force") / spec["rated_torque_after_gear"]
            catalog[name][axis] = MotorSpec(name=name, **spec)
    return catalog


def table1_motor() -> dict[str, MotorSpec]:
    return load_motor_catalog()["table1"]


@dataclass(frozen=True)
class ActuationRequirement:
    peak_force: dict  # axis -> N
    peak_motor_torque: dict  # axis -> N*m after gear
    peak_motor_speed: dict  # axis -> RPM after gear

    def __post_init__(self):
        for d in (self.peak_force, self.peak_motor_torque, self.peak_motor_speed):
            if any(v < 0 for v in d.values()):
                raise ValueError("requirements must be non-negative")


def weight_profile(stance: np.ndarray, dt: float, ramp_time: float = 0.1) -> np.ndarray:
    """Fraction of body weight on one foot: ramped in after each strike and out before lift-off.

    Stance runs that touch the ends of the record are treated as already
    loaded at that end.
    """
    n = stance.size
    w = np.zeros(n)
    idx = np.flatnonzero(np.diff(np.concatenate(([0], stance.astype(np.int8), [0]))))
    for start, stop in zip(idx[::2], idx[1::2]):
        k = np.arange(start, stop)
        since = (k - start) * dt / ramp_time if start > 0 else np.inf
        until = (stop - k) * dt / ramp_time if stop < n else np.inf
        w[start:stop] = np.minimum(1.0, np.minimum(since, until))
    return w


def actuator_forces(traj: GaitTrajectory, user_mass: float, carried_mass: float,
                    ramp_time: float = 0.1) -> tuple[np.ndarray, np.ndarray]:
    """Axis forces ``(F_x, F_z)`` of shape ``(n, 2)``.

    ``F_x = m_c a_x``; ``F_z = m_c (a_z + g)`` plus the user's weight while the
    foot stands on the platform.
    """
    if traj.ax is None or traj.az is None:
        raise ValueError("trajectory has no acceleration channels")
    if user_mass < 0 or carried_mass < 0:
        raise ValueError("masses must be >= 0")
    fx = carried_mass * traj.ax
    fz = carried_mass * (traj.az + G)
    for f in range(traj.stance.shape[1]):
        fz[:, f] += user_mass * G * weight_profile(traj.stance[:, f], traj.dt, ramp_time)
    return fx, fz


def required_actuation(traj: GaitTrajectory, user_mass: float, carried_mass: float,
                       spec: dict[str, MotorSpec], ramp_time: float = 0.1) -> ActuationRequirement:
    fx, fz = actuator_forces(traj, user_mass, carried_mass, ramp_time)
    force = {"x": float(np.abs(fx).max()), "z": float(np.abs(fz).max())}
    speed_lin = {"x": float(np.abs(traj.vx).max()), "z": float(np.abs(traj.vz).max())}
    torque = {a: force[a] / spec[a].transmission_factor for a in AXES}
    rpm = {a: speed_lin[a] * spec[a].transmission_factor * 60 / (2 * math.pi) for a in AXES}
    return ActuationRequirement(force, torque, rpm)


@dataclass(frozen=True)
class AxisCheck:
    axis: str
    required_torque: float
    available_torque: float
    required_speed: float
    available_speed: float

    @property
    def torque_margin(self) -> float:
        return math.inf if self.required_torque == 0 else self.available_torque / self.required_torque

    @property
    def speed_margin(self) -> float:
        return math.inf if self.required_speed == 0 else self.available_speed / self.required_speed

    @property
    def torque_ok(self) -> bool:
        return self.required_torque <= self.available_torque

    @property
    def speed_ok(self) -> bool:
        return self.required_speed <= self.available_speed

    @property
    def passed(self) -> bool:
        return self.torque_ok and self.speed_ok


@dataclass(frozen=True)
class SpecReport:
    axes: dict = field(default_factory=dict)  # axis -> AxisCheck

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.axes.values())

    def lines(self) -> list[str]:
        out = []
        for a, c in self.axes.items():
            out.append(
                f"{a}: torque {c.required_torque:8.2f} / {c.available_torque:8.2f} N*m "
                f"(x{c.torque_margin:.2f}) {'ok' if c.torque_ok else 'FAIL'}  "
                f"speed {c.required_speed:8.1f} / {c.available_speed:8.1f} RPM "
                f"(x{c.speed_margin:.2f}) {'ok' if c.speed_ok else 'FAIL'}"
            )
        return out


def check_spec(req: ActuationRequirement, spec: dict[str, MotorSpec]) -> SpecReport:
    return SpecReport({
        a: AxisCheck(a, req.peak_motor_torque[a], spec[a].momentary_max_torque,
                     req.peak_motor_speed[a], spec[a].max_speed_after_gear)
        for a in AXES if a in req.peak_motor_torque
    })


CSV_CHANNELS = ("x", "z", "vx", "vz", "ax", "az", "stance")


def save_trajectory_csv(traj: GaitTrajectory, path: str | Path) -> None:
    header = ["t"] + [f"f{f}_{c}" for f in range(2) for c in CSV_CHANNELS]
    cols = [traj.t]
    for f in range(2):
        for c in CSV_CHANNELS:
            cols.append(getattr(traj, c)[:, f].astype(float))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(np.column_stack(cols).tolist())


def load_trajectory_csv(path: str | Path) -> GaitTrajectory:
    """Read a trajectory; acceleration and stance columns are optional."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    col = {name: i for i, name in enumerate(header)}
    if "t" not in col:
        raise ValueError("trajectory CSV needs a 't' column")

    def chan(c, required=True):
        names = [f"f{f}_{c}" for f in range(2)]
        if not all(n in col for n in names):
            if required:
                raise ValueError(f"trajectory CSV is missing {names}")
            return None
        return body[:, [col[n] for n in names]]

    stance = chan("stance", required=False)
    if stance is None:
        stance = np.zeros((body.shape[0], 2))
    return GaitTrajectory(body[:, col["t"]], chan("x"), chan("z"), chan("vx"), chan("vz"),
                          chan("ax", False), chan("az", False), stance.astype(bool))
