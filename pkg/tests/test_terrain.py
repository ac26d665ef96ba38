import math

import pytest
from hypothesis import given, strategies as st

from gaitforge.terrain import (
    DegenerateFootstep,
    Dynamic,
    External,
    FixedSpeed,
    Flat,
    FootstepRecord,
    Stair,
    Uneven,
    WalkState,
    apply_footstep,
    estimate_walk_velocity,
    ground_height,
    integrate_travel,
    stance_platform_command,
    update_slope,
)

DT = 0.001


def test_ground_examples():
    assert ground_height(Flat(0.0), 0.37) == 0.0
    assert ground_height(Stair(0.4), 0.5) == pytest.approx(0.2)
    assert ground_height(Uneven((0.0, 0.05, 0.10)), 0.0, step_index=1) == 0.05
    assert ground_height(Uneven((0.0, 0.05, 0.10)), 0.0, step_index=4) == 0.05


def test_external_fallback_then_received():
    ext = External()
    assert ground_height(ext, 0.1, foot=1) == 0.0 and ext.fallback_used
    ext.receive(1, 0.07)
    assert ground_height(ext, 0.1, foot=1) == 0.07
    with pytest.raises(ValueError):
        ext.receive(0, math.nan)


def test_invalid_profiles():
    with pytest.raises(ValueError):
        Uneven(())
    with pytest.raises(ValueError):
        Stair(math.inf)
    with pytest.raises(ValueError):
        ground_height(Flat(), math.nan)


def test_velocity_estimator_examples():
    s = WalkState(user_mass=80.0)
    for _ in range(100):
        s = estimate_walk_velocity(s, 80.0, DT)
    assert s.walk_velocity == pytest.approx(0.1, abs=1e-12)
    assert estimate_walk_velocity(s, 0.0, DT).walk_velocity == s.walk_velocity
    s = estimate_walk_velocity(WalkState(walk_velocity=0.2), -40.0, DT)
    assert s.walk_velocity == pytest.approx(0.1995, abs=1e-12)


def test_velocity_estimator_fault_and_fixed_mode():
    s = estimate_walk_velocity(WalkState(walk_velocity=0.2), math.nan, DT)
    assert s.fault and s.walk_velocity == 0.2
    s = estimate_walk_velocity(WalkState(mode=FixedSpeed(0.4)), 1e6, DT)
    assert s.walk_velocity == 0.4


def test_estimator_clamps():
    s = WalkState(user_mass=80.0, mode=Dynamic())
    for _ in range(1000):
        s = estimate_walk_velocity(s, 80.0, DT)
    assert s.walk_velocity == 0.5
    s = WalkState(user_mass=80.0)
    s = estimate_walk_velocity(s, -8000.0, DT)
    assert s.walk_velocity == 0.0
    s = estimate_walk_velocity(WalkState(user_mass=80.0, allow_reverse=True), -8000.0, DT)
    assert s.walk_velocity == -0.1


def test_stance_command_examples():
    assert stance_platform_command(WalkState(walk_velocity=0.4)) == (-0.4, 0.0)
    vx, vz = stance_platform_command(WalkState(walk_velocity=0.4, current_slope=0.4))
    assert (vx, vz) == (-0.4, pytest.approx(-0.16))
    assert stance_platform_command(WalkState()) == (0.0, 0.0)


def test_slope_examples():
    assert update_slope(FootstepRecord((1.0, 0.2), (0.5, 0.0))) == pytest.approx(0.4)
    assert update_slope(FootstepRecord((1.0, 0.1), (0.5, 0.1))) == 0.0
    with pytest.raises(DegenerateFootstep):
        update_slope(FootstepRecord((0.5, 0.1), (0.5, 0.0)))


def test_degenerate_footstep_keeps_previous_slope():
    s, degenerate = apply_footstep(WalkState(current_slope=0.3),
                                   FootstepRecord((0.5, 0.1), (0.5005, 0.0)))
    assert degenerate and s.current_slope == 0.3


def test_travel_examples():
    s = WalkState()
    for _ in range(1000):
        s = integrate_travel(s, -0.4, 0.0, DT)
    assert s.travel[0] == pytest.approx(-0.4, abs=1e-12)
    assert integrate_travel(s, 0.0, 0.0, DT).travel == s.travel


@given(st.floats(-0.5, 0.5), st.floats(-1e3, 1e3))
def test_estimator_stays_in_band(v0, f):
    v0 = max(v0, 0.0)
    s = estimate_walk_velocity(WalkState(walk_velocity=v0), f, DT)
    assert 0.0 <= s.walk_velocity <= 0.5


@given(st.floats(-2, 2), st.floats(-0.5, 0.5), st.floats(0.01, 1.0))
def test_stair_slope_recovered_from_any_footstep_pair(s, x_r, run):
    prof = Stair(s)
    x_f = x_r + run
    m = update_slope(FootstepRecord((x_f, ground_height(prof, x_f)), (x_r, ground_height(prof, x_r))))
    assert m == pytest.approx(s, abs=1e-9)


@given(st.floats(0, 0.5), st.floats(-1, 1))
def test_stance_command_lies_on_slope(v, m):
    vx, vz = stance_platform_command(WalkState(walk_velocity=v, current_slope=m))
    assert vx == -v and vz == pytest.approx(m * vx)
