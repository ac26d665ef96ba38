"""Per-axis admittance controller.

Maps a measured interaction force into a desired platform velocity through
the reference model ``m_v * dv/dt + c_v * v = f``, discretised with forward
Euler at the control period. Each platform axis owns an independent state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from numba import njit

# Tuned defaults: the lowest admittance that stayed free of perceivable oscillation.
DEFAULT_VIRTUAL_MASS = 8.0
DEFAULT_VIRTUAL_DAMPING = 4.0
DEFAULT_SATURATION = 1.0  # m/s, actuator safety clamp


class AdmittanceFault(ValueError):
    """Raised when the controller is fed a non-finite force."""


@dataclass(frozen=True)
class AdmittanceParams:
    virtual_mass: float = DEFAULT_VIRTUAL_MASS  # kg
    virtual_damping: float = DEFAULT_VIRTUAL_DAMPING  # N*s/m

    def __post_init__(self):
        if not self.virtual_mass > 0:
            raise ValueError(f"virtual_mass must be > 0, got {self.virtual_mass}")
        if not self.virtual_damping >= 0:
            raise ValueError(f"virtual_damping must be >= 0, got {self.virtual_damping}")

    @property
    def time_constant(self) -> float:
        """``m_v / c_v`` in seconds (infinite for a pure virtual mass)."""
        if self.virtual_damping == 0:
            return math.inf
        return self.virtual_mass / self.virtual_damping

    def check_stability(self, dt: float) -> None:
        """Forward Euler on the first-order model needs ``dt < 2 m_v / c_v``."""
        if not dt > 0:
            raise ValueError(f"dt must be > 0, got {dt}")
        if self.virtual_damping > 0 and dt >= 2.0 * self.virtual_mass / self.virtual_damping:
            raise ValueError(
                f"unstable discretisation: dt={dt} >= 2*m_v/c_v="
                f"{2.0 * self.virtual_mass / self.virtual_damping}"
            )


@dataclass(frozen=True)
class AxisAdmittanceState:
    desired_velocity: float = 0.0  # m/s
    saturation_limit: float | None = DEFAULT_SATURATION  # None disables the clamp
    fault: bool = False

    def __post_init__(self):
        if not math.isfinite(self.desired_velocity):
            raise ValueError("desired_velocity must be finite")
        if self.saturation_limit is not None:
            if not self.saturation_limit > 0:
                raise ValueError("saturation_limit must be > 0")
            if abs(self.desired_velocity) > self.saturation_limit:
                raise ValueError("desired_velocity exceeds saturation_limit")


@njit(cache=True)
def admittance_update(v_prev, force, virtual_mass, virtual_damping, dt, limit):
    """One Euler step of the reference model; ``limit`` <= 0 disables the clamp.

    The clamp is applied to the stored state so the integrator never winds up
    past the actuator limit.
    """
    v = (force - virtual_damping * v_prev) / virtual_mass * dt + v_prev
    if limit > 0.0:
        if v > limit:
            v = limit
        elif v < -limit:
            v = -limit
    return v


def step_admittance(
    params: AdmittanceParams, state: AxisAdmittanceState, f_mea: float, dt: float
) -> AxisAdmittanceState:
    """Advance one control period.

    A non-finite force leaves the velocity untouched and returns a state with
    ``fault=True``; use :func:`step_admittance_strict` to raise instead.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if not math.isfinite(f_mea):
        return replace(state, fault=True)
    limit = state.saturation_limit if state.saturation_limit is not None else 0.0
    v = admittance_update(
        state.desired_velocity, float(f_mea), params.virtual_mass,
        params.virtual_damping, float(dt), float(limit),
    )
    return replace(state, desired_velocity=v, fault=False)


def step_admittance_strict(params, state, f_mea, dt):
    out = step_admittance(params, state, f_mea, dt)
    if out.fault:
        raise AdmittanceFault(f"non-finite interaction force: {f_mea!r}")
    return out


def analytic_step_response(params: AdmittanceParams, f_const: float, t: float) -> float:
    """Closed-form velocity of the continuous model for a force step at t=0."""
    if t < 0:
        raise ValueError("t must be >= 0")
    m, c = params.virtual_mass, params.virtual_damping
    if c == 0:
        return f_const * t / m
    return f_const / c * -math.expm1(-c * t / m)


def reset(state: AxisAdmittanceState) -> AxisAdmittanceState:
    return replace(state, desired_velocity=0.0, fault=False)
