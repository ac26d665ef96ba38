"""Scenario configuration: a tree of dataclasses loaded from YAML.

Every section has defaults, so an empty file is a valid scenario. Unknown
keys and invariant violations raise :class:`ConfigError` naming the key path.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .admittance import AdmittanceParams
from .gait import PhaseThresholds, WORKSPACE_X, WORKSPACE_Z
from .plant import MAX_USER_MASS, WalkerParams
from .terrain import Dynamic, External, FixedSpeed, Flat, Stair, Uneven

TERRAIN_KINDS = ("flat", "stair", "uneven", "external")
# Walk-start and walk-stop profile used when a dynamic run gives no speed profile.
DEFAULT_DYNAMIC_PROFILE = [[0.0, 0.0], [2.0, 0.0], [4.0, 0.4], [10.0, 0.4], [12.0, 0.0]]


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


@dataclass
class TerrainConfig:
    kind: str = "flat"
    height: float = 0.0
    slope: float = 0.0
    step_heights: list = field(default_factory=lambda: [0.0])
    # For kind=external: the profile the terrain service renders.
    source: str = "flat"
    # None selects per kind: on for flat/stair/external, off for uneven.
    slope_compensation: bool | None = None

    def profile(self, kind: str | None = None):
        kind = kind or self.kind
        if kind == "flat":
            return Flat(self.height)
        if kind == "stair":
            return Stair(self.slope)
        if kind == "uneven":
            return Uneven(tuple(self.step_heights))
        if kind == "external":
            return External()
        raise ConfigError("terrain.kind", f"unknown terrain {kind!r}, expected one of {TERRAIN_KINDS}")

    def world(self):
        """Concrete profile of the world the user walks in."""
        return self.profile(self.source if self.kind == "external" else self.kind)

    def compensates_slope(self) -> bool:
        if self.slope_compensation is not None:
            return self.slope_compensation
        return self.kind != "uneven"


@dataclass
class WalkConfig:
    mode: str = "fixed"  # fixed | dynamic
    speed: float = 0.4  # m/s, used by fixed mode
    speed_limit: float = 0.5
    user_mass: float = 80.0  # lumped mass for the velocity estimator
    allow_reverse: bool = False

    def walk_mode(self):
        return FixedSpeed(self.speed) if self.mode == "fixed" else Dynamic()


@dataclass
class AdmittanceConfig:
    virtual_mass: float = 8.0
    virtual_damping: float = 4.0
    saturation: float = 1.0  # m/s, 0 disables the clamp
    swing_seed: str = "zero"  # zero | platform: initial v_d after toe-off

    def params(self) -> AdmittanceParams:
        return AdmittanceParams(self.virtual_mass, self.virtual_damping)


@dataclass
class ThresholdConfig:
    contact_epsilon: float = 0.002
    liftoff_force: float = 20.0
    min_phase_dwell: float = 0.050

    def thresholds(self) -> PhaseThresholds:
        return PhaseThresholds(self.contact_epsilon, self.liftoff_force, self.min_phase_dwell)


@dataclass
class PlantConfig:
    lag_time_constant: float = 0.005
    velocity_limit: float = 1.0
    x_limits: list = field(default_factory=lambda: list(WORKSPACE_X))
    z_limits: list = field(default_factory=lambda: list(WORKSPACE_Z))


@dataclass
class SensorConfig:
    noise_sigma: float = 0.5
    lowpass_cutoff: float = 100.0


@dataclass
class HumanConfig:
    stiffness: float = 2000.0
    damping: float = 100.0
    user_mass: float = 80.0
    weight_ramp_time: float = 0.1


@dataclass
class WalkerConfig:
    stance_time: float = 0.9
    swing_time: float = 1.3
    clearance: float = 0.10
    first_liftoff: float = 0.1
    # [[t, v], ...]; None means the fixed walk speed, or the default
    # start/stop profile in dynamic mode.
    speed_profile: list | None = None


@dataclass
class LoopConfig:
    rate: float = 1000.0  # Hz
    mode: str = "deterministic"  # deterministic | wallclock
    duration: float = 10.0  # s
    delay_cycles: int = 3

    def __post_init__(self):
        if not self.rate > 0:
            raise ConfigError("loop.rate", "must be > 0")
        if int(self.delay_cycles) != self.delay_cycles or self.delay_cycles < 1:
            raise ConfigError("loop.delay_cycles", "must be an integer >= 1")
        if self.mode not in ("deterministic", "wallclock"):
            raise ConfigError("loop.mode", "must be 'deterministic' or 'wallclock'")
        if not self.duration > 0:
            raise ConfigError("loop.duration", "must be > 0")

    @property
    def dt(self) -> float:
        return 1.0 / self.rate

    @property
    def n_ticks(self) -> int:
        return int(round(self.duration * self.rate))


@dataclass
class BridgeConfig:
    loopback: bool = True
    host: str = "127.0.0.1"
    port: int = 8765
    decimation: int = 10


@dataclass
class ScenarioConfig:
    terrain: TerrainConfig = field(default_factory=TerrainConfig)
    walk: WalkConfig = field(default_factory=WalkConfig)
    admittance: AdmittanceConfig = field(default_factory=AdmittanceConfig)
    thresholds: ThresholdConfig = field(default_factory=ThresholdConfig)
    plant: PlantConfig = field(default_factory=PlantConfig)
    sensor: SensorConfig = field(default_factory=SensorConfig)
    human: HumanConfig = field(default_factory=HumanConfig)
    walker: WalkerConfig = field(default_factory=WalkerConfig)
    loop: LoopConfig = field(default_factory=LoopConfig)
    bridge: BridgeConfig = field(default_factory=BridgeConfig)
    seed: int = 0

    def walker_params(self) -> WalkerParams:
        w = self.walker
        profile = w.speed_profile
        if profile is None:
            profile = [[0.0, self.walk.speed]] if self.walk.mode == "fixed" else DEFAULT_DYNAMIC_PROFILE
        return WalkerParams(w.stance_time, w.swing_time, w.clearance, w.first_liftoff,
                            tuple(tuple(k) for k in profile))

    def validate(self) -> "ScenarioConfig":
        _check(self)
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)


def _wrap(path, fn, *args):
    try:
        return fn(*args)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(path, str(exc)) from None


def _check(cfg: ScenarioConfig) -> None:
    t = cfg.terrain
    if t.kind not in TERRAIN_KINDS:
        raise ConfigError("terrain.kind", f"unknown terrain {t.kind!r}, expected one of {TERRAIN_KINDS}")
    if t.kind == "external" and t.source not in ("flat", "stair", "uneven"):
        raise ConfigError("terrain.source", "must be flat, stair or uneven")
    _wrap("terrain", t.world)

    w = cfg.walk
    if w.mode not in ("fixed", "dynamic"):
        raise ConfigError("walk.mode", "must be 'fixed' or 'dynamic'")
    if not w.speed_limit > 0:
        raise ConfigError("walk.speed_limit", "must be > 0")
    if not w.user_mass > 0:
        raise ConfigError("walk.user_mass", "must be > 0")
    if w.mode == "fixed" and not 0 <= w.speed <= w.speed_limit:
        raise ConfigError("walk.speed", f"must lie in [0, speed_limit={w.speed_limit}]")

    a = cfg.admittance
    params = _wrap("admittance", a.params)
    _wrap("admittance", params.check_stability, cfg.loop.dt)
    if a.saturation < 0:
        raise ConfigError("admittance.saturation", "must be >= 0")
    if a.swing_seed not in ("zero", "platform"):
        raise ConfigError("admittance.swing_seed", "must be 'zero' or 'platform'")

    _wrap("thresholds", cfg.thresholds.thresholds)

    p = cfg.plant
    if not p.lag_time_constant > 0:
        raise ConfigError("plant.lag_time_constant", "must be > 0")
    if not p.velocity_limit > 0:
        raise ConfigError("plant.velocity_limit", "must be > 0")
    for name in ("x_limits", "z_limits"):
        lo, hi = getattr(p, name)
        if not lo < hi:
            raise ConfigError(f"plant.{name}", "must be increasing")

    s = cfg.sensor
    if not s.noise_sigma >= 0:
        raise ConfigError("sensor.noise_sigma", "must be >= 0")
    if not s.lowpass_cutoff > 0:
        raise ConfigError("sensor.lowpass_cutoff", "must be > 0")

    h = cfg.human
    if not (h.stiffness >= 0 and h.damping >= 0):
        raise ConfigError("human", "stiffness and damping must be >= 0")
    if not 0 < h.user_mass <= MAX_USER_MASS:
        raise ConfigError("human.user_mass", f"must lie in (0, {MAX_USER_MASS}]")
    if not h.weight_ramp_time > 0:
        raise ConfigError("human.weight_ramp_time", "must be > 0")

    _wrap("walker", cfg.walker_params)
    if cfg.bridge.decimation < 1:
        raise ConfigError("bridge.decimation", "must be >= 1")
    if not isinstance(cfg.seed, int) or cfg.seed < 0:
        raise ConfigError("seed", "must be a non-negative integer")


def _from_dict(cls, data: Any, path: str):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(path or "<root>", f"expected a mapping, got {type(data).__name__}")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        sub = f"{path}.{key}" if path else str(key)
        if key not in fields:
            raise ConfigError(sub, "unknown key")
        ftype = fields[key].type
        nested = _SECTIONS.get(ftype) if isinstance(ftype, str) else None
        if nested is not None:
            kwargs[key] = _from_dict(nested, value, sub)
        else:
            kwargs[key] = _coerce(ftype, value, sub)
    return _build(cls, kwargs, path)


def _build(cls, kwargs, path):
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(path, str(exc)) from None


def _coerce(ftype: str, value, path):
    if value is None:
        if "None" in ftype:
            return None
        raise ConfigError(path, "may not be null")
    base = ftype.split("|")[0].strip()
    if base == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, f"expected a number, got {value!r}")
        if not math.isfinite(value):
            raise ConfigError(path, "must be finite")
        return float(value)
    if base == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return value
    if base == "bool":
        if not isinstance(value, bool):
            raise ConfigError(path, f"expected true/false, got {value!r}")
        return value
    if base == "str":
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}")
        return value
    if base == "list":
        if not isinstance(value, list):
            raise ConfigError(path, f"expected a list, got {value!r}")
        return value
    return value


_SECTIONS = {
    "TerrainConfig": TerrainConfig,
    "WalkConfig": WalkConfig,
    "AdmittanceConfig": AdmittanceConfig,
    "ThresholdConfig": ThresholdConfig,
    "PlantConfig": PlantConfig,
    "SensorConfig": SensorConfig,
    "HumanConfig": HumanConfig,
    "WalkerConfig": WalkerConfig,
    "LoopConfig": LoopConfig,
    "BridgeConfig": BridgeConfig,
}


def from_dict(data: dict | None) -> ScenarioConfig:
    return _from_dict(ScenarioConfig, data, "").validate()


def loads(text: str) -> ScenarioConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"invalid YAML: {exc}") from None
    return from_dict(data)


def load(path: str | Path) -> ScenarioConfig:
    return loads(Path(path).read_text())


def merge(base: dict, overrides: dict) -> dict:
    """Deep-merge ``overrides`` into a copy of ``base``."""
    out = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = merge(out[key], value)
        else:
            out[key] = value
    return out
