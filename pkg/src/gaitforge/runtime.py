"""Fixed-rate control loop, telemetry log and loop-timing statistics.

Deterministic mode runs the compiled tick kernel on a simulated clock.
WallClock mode paces the same kernel one tick at a time against
``time.perf_counter`` and records read times and jitter; the control math
never looks at the wall clock.
"""

from __future__ import annotations

import logging
import math
import queue
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernel as K
from .bridge import (FootPose, LoopbackLink, LoopbackService, OutboundMessage, TcpLink,
                     TerrainHeight)
from .config import LoopConfig, ScenarioConfig
from .gait import STANCE, ContactEvent, EventKind, GaitPhase
from .plant import G, REF_LOAD, REF_VX, REF_VZ, REF_X, REF_Z, build_walker_reference
from .terrain import EXTERNAL, heights_array, slope_from, terrain_code

CSV_HEADER = "gaitforge-telemetry-v1"
COLUMNS = K.COLUMNS

log = logging.getLogger(__name__)


class ScenarioInvalid(ValueError):
    pass


@dataclass(frozen=True)
class TelemetryFrame:
    tick: int
    t: float
    t_read: float
    t_start: float
    t_end: float
    jitter: float
    flags: int
    phase: tuple[GaitPhase, GaitPhase]
    force: tuple[tuple[float, float], tuple[float, float]]
    desired_velocity: tuple[tuple[float, float], tuple[float, float]]
    velocity: tuple[tuple[float, float], tuple[float, float]]
    position: tuple[tuple[float, float], tuple[float, float]]
    ground: tuple[float, float]
    v_x: float
    d_x: float
    d_z: float
    m_k: float
    step: int


class TelemetryLog:
    """One row per tick in a preallocated array; columns follow ``COLUMNS``."""

    def __init__(self, data: np.ndarray, rate: float, delay_cycles: int, mode: str = "deterministic"):
        if data.ndim != 2 or data.shape[1] != K.N_COLS:
            raise ValueError(f"telemetry needs {K.N_COLS} columns")
        self.data = data
        self.rate = float(rate)
        self.delay_cycles = int(delay_cycles)
        self.mode = mode
        self.outbound: list[OutboundMessage] = []
        self.dropped_frames = 0

    def __len__(self) -> int:
        return self.data.shape[0]

    def __getitem__(self, name: str) -> np.ndarray:
        return self.data[:, K.COL[name]]

    def foot(self, i: int, name: str) -> np.ndarray:
        return self[f"f{i}_{name}"]

    @property
    def dt(self) -> float:
        return 1.0 / self.rate

    def frame(self, k: int) -> TelemetryFrame:
        r = self.data[k]
        c = K.COL

        def pair(a, b):
            return tuple((float(r[c[f"f{i}_{a}"]]), float(r[c[f"f{i}_{b}"]])) for i in range(2))

        return TelemetryFrame(
            tick=int(r[0]), t=float(r[1]), t_read=float(r[2]), t_start=float(r[3]),
            t_end=float(r[4]), jitter=float(r[5]), flags=int(r[6]),
            phase=tuple(GaitPhase(int(r[c[f"f{i}_phase"]])) for i in range(2)),
            force=pair("fx", "fz"), desired_velocity=pair("vdx", "vdz"),
            velocity=pair("vx", "vz"), position=pair("x", "z"),
            ground=tuple(float(r[c[f"f{i}_ground"]]) for i in range(2)),
            v_x=float(r[c["v_x"]]), d_x=float(r[c["d_x"]]), d_z=float(r[c["d_z"]]),
            m_k=float(r[c["m_k"]]), step=int(r[c["step"]]),
        )

    def events(self, foot: int) -> list[ContactEvent]:
        phase = self.foot(foot, "phase")
        idx = np.flatnonzero(np.diff(phase) != 0) + 1
        x, z, t = self.foot(foot, "x"), self.foot(foot, "z"), self["t"]
        out = []
        for k in idx:
            kind = EventKind.HEEL_STRIKE if phase[k] == STANCE else EventKind.TOE_OFF
            out.append(ContactEvent(kind, foot, float(t[k]), (float(x[k - 1]), float(z[k - 1]))))
        return out

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(CSV_HEADER + "\n")
            fh.write(",".join(COLUMNS) + "\n")
            np.savetxt(fh, self.data, delimiter=",", fmt="%.17g")

    @classmethod
    def from_csv(cls, path: str | Path, rate: float = 1000.0, delay_cycles: int = 3) -> "TelemetryLog":
        with open(path) as fh:
            header = fh.readline().strip()
            if header != CSV_HEADER:
                raise ValueError(f"unsupported telemetry header {header!r}")
            names = fh.readline().strip().split(",")
            if names != COLUMNS:
                raise ValueError("telemetry columns do not match the v1 schema")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        if data.size == 0:
            data = np.zeros((0, K.N_COLS))
        if len(data) >= 2:
            rate = 1.0 / float(np.round(data[1, 1] - data[0, 1], 12))
        return cls(data, rate, delay_cycles)


class TelemetryTap:
    """Bounded hand-off of telemetry rows to a consumer thread.

    The control loop calls :meth:`offer` and never blocks; when the queue is
    full the rows are dropped from the tap only, the log keeps every row.
    """

    def __init__(self, consumer, maxsize: int = 256):
        self._q: queue.Queue = queue.Queue(maxsize)
        self.dropped = 0
        self._consumer = consumer
        self._thread = threading.Thread(target=self._drain, daemon=True)
        self._thread.start()

    def offer(self, rows: np.ndarray) -> None:
        try:
            self._q.put_nowait(rows.copy())
        except queue.Full:
            self.dropped += len(rows)

    def _drain(self):
        while True:
            rows = self._q.get()
            if rows is None:
                return
            self._consumer(rows)

    def close(self) -> None:
        self._q.put(None)
        self._thread.join(5.0)


@dataclass
class _Machine:
    params: np.ndarray
    heights: np.ndarray
    ref: np.ndarray
    noise: np.ndarray
    feet: np.ndarray
    walk: np.ndarray
    queue: np.ndarray
    ext: np.ndarray
    out: np.ndarray

    def run(self, k0: int, k1: int) -> None:
        K.run_ticks(k0, k1, self.params, self.heights, self.ref, self.noise, self.feet,
                    self.walk, self.queue, self.ext, self.out)


def _ground_now(cfg: ScenarioConfig, x: float) -> float:
    world = cfg.terrain.world()
    return float(K.ground_z(terrain_code(world), getattr(world, "height", 0.0),
                            getattr(world, "slope", 0.0), heights_array(world), 0, x, 0.0, True)[0])


def build_machine(loop: LoopConfig, cfg: ScenarioConfig) -> _Machine:
    """Translate a validated scenario into kernel arrays at tick 0."""
    try:
        cfg.validate()
        if cfg.loop is not loop:
            cfg.admittance.params().check_stability(loop.dt)
    except ValueError as exc:
        raise ScenarioInvalid(str(exc)) from exc
    n, dt = loop.n_ticks, loop.dt
    ref = build_walker_reference(cfg.walker_params(), cfg.terrain.world(), n, dt,
                                 cfg.human.weight_ramp_time)
    x_ref, z_ref = ref.data[..., REF_X], ref.data[..., REF_Z]
    lo_x, hi_x = cfg.plant.x_limits
    lo_z, hi_z = cfg.plant.z_limits
    if x_ref.min() < lo_x or x_ref.max() > hi_x or z_ref.min() < lo_z or z_ref.max() > hi_z:
        raise ScenarioInvalid("walker reference leaves the plant workspace")

    profile = cfg.terrain.profile()
    code = terrain_code(profile)
    p = np.zeros(K.N_PARAMS)
    p[K.P_DT] = dt
    p[K.P_MV] = cfg.admittance.virtual_mass
    p[K.P_CV] = cfg.admittance.virtual_damping
    p[K.P_VSAT] = cfg.admittance.saturation
    th = cfg.thresholds
    p[K.P_EPS], p[K.P_LIFT], p[K.P_DWELL] = th.contact_epsilon, th.liftoff_force, th.min_phase_dwell
    p[K.P_MASS] = cfg.walk.user_mass
    p[K.P_SPEEDLIM] = cfg.walk.speed_limit
    p[K.P_DYNAMIC] = cfg.walk.mode == "dynamic"
    p[K.P_FIXV] = cfg.walk.speed
    p[K.P_TERRAIN] = code
    p[K.P_FLATH] = getattr(profile, "height", 0.0)
    p[K.P_SLOPE] = getattr(profile, "slope", 0.0)
    p[K.P_TAU] = cfg.plant.lag_time_constant
    p[K.P_XMIN], p[K.P_XMAX] = lo_x, hi_x
    p[K.P_ZMIN], p[K.P_ZMAX] = lo_z, hi_z
    p[K.P_VLIM] = cfg.plant.velocity_limit
    p[K.P_ALPHA] = -math.expm1(-2 * math.pi * cfg.sensor.lowpass_cutoff * dt)
    p[K.P_KH], p[K.P_BH] = cfg.human.stiffness, cfg.human.damping
    p[K.P_HMASS], p[K.P_G] = cfg.human.user_mass, G
    p[K.P_RAMP] = cfg.human.weight_ramp_time
    p[K.P_SLOPECOMP] = cfg.terrain.compensates_slope()
    p[K.P_ALLOWREV] = cfg.walk.allow_reverse
    p[K.P_SEEDPLAT] = cfg.admittance.swing_seed == "platform"
    p[K.P_DELAY] = loop.delay_cycles

    rng = np.random.default_rng(cfg.seed)
    noise = rng.normal(0.0, cfg.sensor.noise_sigma, size=(n, 2, 2)) if cfg.sensor.noise_sigma else np.zeros((n, 2, 2))

    # Both feet start standing on the ground at their planned positions.
    feet = np.zeros((2, K.N_FOOT))
    v0 = cfg.walk.speed if cfg.walk.mode == "fixed" else 0.0
    for f in range(2):
        x0 = ref.data[0, f, REF_X]
        z0 = _ground_now(cfg, x0)
        feet[f, K.F_PHASE] = STANCE
        feet[f, K.F_LAST_EVENT] = -1e9
        feet[f, K.F_TSTRIKE] = -1e9
        feet[f, K.F_X], feet[f, K.F_Z] = x0, z0
        feet[f, K.F_SX], feet[f, K.F_SZ] = x0, z0
    walk = np.zeros(K.N_WALK)
    walk[K.W_VX] = v0
    if cfg.terrain.compensates_slope():
        walk[K.W_MK] = slope_from(feet[1, K.F_X], feet[1, K.F_Z], feet[0, K.F_X], feet[0, K.F_Z], 0.0)[0]
    q = np.zeros((2, 2, loop.delay_cycles))
    for f in range(2):
        feet[f, K.F_VX] = -v0
        feet[f, K.F_VZ] = -v0 * walk[K.W_MK]
        q[f, 0, :], q[f, 1, :] = feet[f, K.F_VX], feet[f, K.F_VZ]
        load = cfg.human.user_mass * G * ref.data[0, f, REF_LOAD]
        fx = cfg.human.stiffness * (x_ref[0, f] - feet[f, K.F_X]) + cfg.human.damping * (ref.data[0, f, REF_VX] - feet[f, K.F_VX])
        fz = cfg.human.stiffness * (z_ref[0, f] - feet[f, K.F_Z]) + cfg.human.damping * (ref.data[0, f, REF_VZ] - feet[f, K.F_VZ]) - load
        feet[f, K.F_LPX], feet[f, K.F_LPZ] = fx, fz
    return _Machine(p, heights_array(profile), np.ascontiguousarray(ref.data), noise, feet, walk,
                    q, np.zeros((2, 2)), np.full((n, K.N_COLS), np.nan))


def outbound_from(m: _Machine, k: int) -> OutboundMessage:
    """Pose message for the state after tick ``k`` (``k=-1`` is the initial state)."""
    if k < 0:
        feet = [FootPose(f, m.feet[f, K.F_X], m.feet[f, K.F_Z],
                         "stance" if m.feet[f, K.F_PHASE] == STANCE else "swing") for f in range(2)]
        return OutboundMessage.from_travel(0.0, feet, m.walk[K.W_DX], m.walk[K.W_DZ], m.walk[K.W_VX])
    r = m.out[k]
    feet = []
    for f in range(2):
        b = K.FOOT0 + 10 * f
        feet.append(FootPose(f, r[b + 7], r[b + 8], "stance" if r[b] == STANCE else "swing"))
    return OutboundMessage.from_travel(r[1] * 1000.0, feet, r[K.WALK0 + 1], r[K.WALK0 + 2], r[K.WALK0])


def _apply_inbound(m: _Machine, messages) -> None:
    for msg in messages:
        if isinstance(msg, TerrainHeight) and msg.foot in (0, 1):
            m.ext[msg.foot, 0] = msg.height
            m.ext[msg.foot, 1] = 1.0


def _exchange(m: _Machine, link, msg: OutboundMessage, timeout: float = 2.0) -> None:
    """Send a pose and wait until every foot's height reply is in (lockstep)."""
    link.send(msg)
    want = {p.id for p in msg.feet}
    deadline = time.monotonic() + timeout
    while True:
        got = link.poll()
        _apply_inbound(m, got)
        want -= {g.foot for g in got if isinstance(g, TerrainHeight)}
        if not want:
            return
        if time.monotonic() > deadline:
            raise ConnectionError(f"terrain service did not answer within {timeout} s")
        time.sleep(0.0002)


def open_link(cfg: ScenarioConfig):
    if cfg.bridge.loopback:
        return LoopbackLink(LoopbackService(cfg.terrain.world(), cfg.thresholds.contact_epsilon))
    return TcpLink(cfg.bridge.host, cfg.bridge.port)


def run_scenario(config: LoopConfig, scenario: ScenarioConfig, *, link=None,
                 tap: TelemetryTap | None = None) -> TelemetryLog:
    """Run the full stack for ``config.duration`` seconds and return the log.

    External terrain talks to ``link`` (or one opened from the scenario's
    bridge settings); outbound poses go out every ``bridge.decimation`` ticks.
    Deterministic mode waits for each height reply so runs are reproducible
    over any transport; WallClock mode never blocks on the link.
    """
    m = build_machine(config, scenario)
    n = config.n_ticks
    external = int(m.params[K.P_TERRAIN]) == EXTERNAL
    own_link = external and link is None
    if own_link:
        link = open_link(scenario)
    sent: list[OutboundMessage] = []
    chunk = scenario.bridge.decimation if external else (n if tap is None else 100)
    try:
        if external:
            first = outbound_from(m, -1)
            _exchange(m, link, first)
            sent.append(first)
        if config.mode == "deterministic":
            for k0 in range(0, n, chunk):
                k1 = min(k0 + chunk, n)
                m.run(k0, k1)
                if tap is not None:
                    tap.offer(m.out[k0:k1])
                if external:
                    msg = outbound_from(m, k1 - 1)
                    _exchange(m, link, msg)
                    sent.append(msg)
        else:
            _run_wallclock(m, config, link if external else None, chunk, sent, tap)
    finally:
        if own_link:
            link.close()
    out = TelemetryLog(m.out, config.rate, config.delay_cycles, config.mode)
    out.outbound = sent
    if tap is not None:
        out.dropped_frames = tap.dropped
    return out


def _run_wallclock(m: _Machine, config: LoopConfig, link, decimation, sent, tap) -> None:
    n, dt, d = config.n_ticks, config.dt, config.delay_cycles
    clock = time.perf_counter
    t0 = clock()
    prev_read = None
    for k in range(n):
        t_read = clock() - t0
        m.run(k, k + 1)
        t_end = clock() - t0
        row = m.out[k]
        row[2] = t_read
        row[3] = m.out[k - d, 2] if k >= d else np.nan
        row[4] = t_end
        row[5] = 0.0 if prev_read is None else t_read - prev_read - dt
        prev_read = t_read
        if t_end > (k + 1) * dt:
            row[6] = int(row[6]) | K.FLAG_OVERRUN
        if link is not None and (k + 1) % decimation == 0:
            msg = outbound_from(m, k)
            link.send(msg)
            sent.append(msg)
            _apply_inbound(m, link.poll())
        if tap is not None:
            tap.offer(m.out[k:k + 1])
        # Sleep to the next period; when late, run the next tick at once.
        remaining = (k + 1) * dt - (clock() - t0)
        if remaining > 0:
            time.sleep(remaining)


def simulate(scenario: ScenarioConfig, **kwargs) -> TelemetryLog:
    return run_scenario(scenario.loop, scenario, **kwargs)


@dataclass(frozen=True)
class DelayStats:
    mean: float
    min: float
    max: float
    count: int


def measure_loop_delay(log: TelemetryLog) -> DelayStats:
    """Distribution of ``T_end - T_start`` over every tick that has both stamps."""
    if len(log) == 0:
        raise ValueError("telemetry log is empty")
    d = log["t_end"] - log["t_start"]
    d = d[np.isfinite(d)]
    if d.size == 0:
        raise ValueError("log is shorter than the pipeline delay")
    return DelayStats(float(d.mean()), float(d.min()), float(d.max()), int(d.size))


@dataclass(frozen=True)
class JitterStats:
    mean: float
    p99: float
    max: float


def jitter_stats(log_or_times, rate: float | None = None) -> JitterStats:
    """Deviation of successive read times from the nominal period, in seconds.

    Accepts a :class:`TelemetryLog` or an array of read timestamps with ``rate``.
    """
    if isinstance(log_or_times, TelemetryLog):
        times, rate = log_or_times["t_read"], log_or_times.rate
    else:
        times = np.asarray(log_or_times, dtype=float)
        if rate is None:
            raise ValueError("rate is required with raw timestamps")
    if len(times) < 2:
        raise ValueError("jitter needs at least two frames")
    dev = np.abs(np.diff(times) - 1.0 / rate)
    # Simulated stamps are k/rate, so rounding noise below 1 ns is not jitter.
    dev = np.where(dev < 1e-9, 0.0, dev)
    return JitterStats(float(dev.mean()), float(np.percentile(dev, 99)), float(dev.max()))


def command_step_response(config: ScenarioConfig, step: float = 1.0, ticks: int = 60,
                          delay_cycles: int | None = None) -> np.ndarray:
    """Velocity of one gantry axis after a command step issued at tick 0."""
    from .plant import GantryAxis, step_axis

    d = config.loop.delay_cycles if delay_cycles is None else delay_cycles
    axis = GantryAxis(lag_time_constant=config.plant.lag_time_constant, command_delay=d,
                      velocity_limit=max(config.plant.velocity_limit, abs(step)))
    out = np.zeros(ticks)
    for k in range(ticks):
        axis = step_axis(axis, step, config.loop.dt)
        out[k] = axis.velocity
    return out


def rise_times(response: np.ndarray, dt: float, final: float) -> tuple[float, float]:
    """Times (from command issue) at which ``response`` first reaches 10% and 90% of ``final``.

    Sample ``k`` is the velocity logged at tick ``k``, stamped ``k * dt`` like
    the telemetry ``t_end`` column.
    """
    def first(level):
        idx = np.flatnonzero(response >= level * final)
        return float(idx[0] * dt) if idx.size else math.inf
    return first(0.1), first(0.9)
