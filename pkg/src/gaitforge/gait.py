"""Swing/stance classification and contact events for one foot platform."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from numba import njit

# Workspace of one gantry, centred on the neutral platform position.
WORKSPACE_X = (-0.5, 0.5)
WORKSPACE_Z = (-0.25, 0.25)

SWING = 0
STANCE = 1


class GaitPhase(enum.IntEnum):
    SWING = SWING
    STANCE = STANCE

    @property
    def label(self) -> str:
        return self.name.lower()


class EventKind(enum.Enum):
    HEEL_STRIKE = "heel_strike"
    TOE_OFF = "toe_off"


@dataclass(frozen=True)
class FootState:
    position: tuple[float, float] = (0.0, 0.0)
    velocity: tuple[float, float] = (0.0, 0.0)
    measured_force: tuple[float, float] = (0.0, 0.0)  # force applied by the user, +z up
    phase: GaitPhase = GaitPhase.SWING

    def __post_init__(self):
        for name in ("position", "velocity", "measured_force"):
            if not all(math.isfinite(v) for v in getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def in_workspace(self) -> bool:
        x, z = self.position
        return WORKSPACE_X[0] <= x <= WORKSPACE_X[1] and WORKSPACE_Z[0] <= z <= WORKSPACE_Z[1]


@dataclass(frozen=True)
class PhaseThresholds:
    contact_epsilon: float = 0.002  # m
    liftoff_force: float = 20.0  # N, upward
    min_phase_dwell: float = 0.050  # s

    def __post_init__(self):
        if not self.contact_epsilon > 0:
            raise ValueError("contact_epsilon must be > 0")
        if not self.liftoff_force > 0:
            raise ValueError("liftoff_force must be > 0")
        if not self.min_phase_dwell >= 0:
            raise ValueError("min_phase_dwell must be >= 0")


@dataclass(frozen=True)
class ContactEvent:
    kind: EventKind
    foot: int
    timestamp: float
    position: tuple[float, float]


@njit(cache=True)
def classify(phase, z, ground_z, f_z, contact_epsilon, liftoff_force, min_dwell, time_in_phase):
    """Integer-coded phase transition shared by the tick kernel and :func:`classify_phase`."""
    if time_in_phase < min_dwell:
        return phase
    if phase == SWING:
        if z <= ground_z + contact_epsilon:
            return STANCE
    elif f_z >= liftoff_force:
        return SWING
    return phase


def classify_phase(
    foot: FootState, ground_z: float, thresholds: PhaseThresholds, time_in_phase: float
) -> GaitPhase:
    if not math.isfinite(ground_z):
        raise ValueError("ground_z must be finite")
    if time_in_phase < 0:
        raise ValueError("time_in_phase must be >= 0")
    out = classify(
        int(foot.phase), float(foot.position[1]), float(ground_z),
        float(foot.measured_force[1]), thresholds.contact_epsilon,
        thresholds.liftoff_force, thresholds.min_phase_dwell, float(time_in_phase),
    )
    return GaitPhase(out)


def detect_event(
    prev: GaitPhase, next: GaitPhase, foot: FootState, t: float, foot_id: int = 0
) -> ContactEvent | None:
    if prev == next:
        return None
    kind = EventKind.HEEL_STRIKE if next == GaitPhase.STANCE else EventKind.TOE_OFF
    return ContactEvent(kind, foot_id, t, tuple(foot.position))


class PhaseTracker:
    """Incremental classifier for one foot that keeps its own dwell clock."""

    def __init__(self, thresholds: PhaseThresholds, phase: GaitPhase = GaitPhase.SWING,
                 foot_id: int = 0, t0: float = 0.0, dwell_satisfied: bool = True):
        self.thresholds = thresholds
        self.phase = phase
        self.foot_id = foot_id
        self._entered = -math.inf if dwell_satisfied else t0
        self.events: list[ContactEvent] = []

    def update(self, t: float, position, force, ground_z: float) -> ContactEvent | None:
        foot = FootState(position=tuple(position), measured_force=tuple(force), phase=self.phase)
        nxt = classify_phase(foot, ground_z, self.thresholds, max(t - self._entered, 0.0))
        event = detect_event(self.phase, nxt, foot, t, self.foot_id)
        if event is not None:
            self._entered = t
            self.events.append(event)
        self.phase = nxt
        return event
