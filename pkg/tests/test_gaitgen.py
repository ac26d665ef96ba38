import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gaitforge.gaitgen import (
    ActuationRequirement,
    GaitParams,
    actuator_forces,
    check_spec,
    generate_gait,
    load_motor_catalog,
    load_trajectory_csv,
    required_actuation,
    save_trajectory_csv,
    swing_overshoot_ratio,
    table1_motor,
)

DT = 0.001
P = GaitParams()


@pytest.fixture(scope="module")
def traj():
    return generate_gait(P, 4.0, DT)


def test_clearance_and_span():
    # Fine grid so the sampled extremes sit on the analytic ones.
    traj = generate_gait(P, 4.0, 1e-4)
    assert traj.z.max() == pytest.approx(0.14, abs=1e-6)
    assert traj.x.max() - traj.x.min() == pytest.approx(0.67, abs=1e-6)


def test_stance_velocity_is_walk_speed():
    tr = generate_gait(GaitParams(walk_speed=1.2, duty_factor=0.65), 4.0, DT)
    assert np.all(tr.vx[tr.stance] == -1.2)
    assert np.all(tr.z[tr.stance] == 0.0)


def test_feet_half_cycle_apart(traj):
    shift = int(round(P.cycle_time / 2 / DT))
    assert np.allclose(traj.x[shift:, 1], traj.x[:-shift, 0], atol=2e-3)


def test_peak_swing_speed_finite_difference(traj):
    fd = np.abs(np.diff(traj.x, axis=0) / DT).max()
    assert fd > P.walk_speed
    assert fd <= 1.5 * P.peak_swing_speed


def test_c1_continuity(traj):
    for pos, vel in ((traj.x, traj.vx), (traj.z, traj.vz)):
        assert np.abs(np.diff(pos, axis=0)).max() < 5.0 * DT
        assert np.abs(np.diff(vel, axis=0)).max() < 0.1


def test_velocity_channels_match_central_differences(traj):
    for pos, vel in ((traj.x, traj.vx), (traj.z, traj.vz)):
        fd = (pos[2:] - pos[:-2]) / (2 * DT)
        assert np.abs(fd - vel[1:-1]).max() <= 1e-6


def test_central_difference_error_is_second_order():
    errs = []
    for dt in (1e-3, 1e-4):
        tr = generate_gait(P, 4.0, dt)
        fd = (tr.x[2:] - tr.x[:-2]) / (2 * dt)
        errs.append(np.abs(fd - tr.vx[1:-1]).max())
    assert errs[1] < errs[0] / 50


def test_rejections():
    with pytest.raises(ValueError, match="two cycles"):
        generate_gait(P, 1.0, DT)
    with pytest.raises(ValueError, match="cap"):
        generate_gait(P, 4.0, DT, max_swing_speed=2.0)
    with pytest.raises(ValueError):
        GaitParams(duty_factor=0.4)
    with pytest.raises(ValueError, match="inconsistent"):
        GaitParams(cadence=1.0)
    GaitParams(cadence=P.derived_cadence)


def test_overshoot_ratio_zero_velocity_point():
    d = 0.6
    tau = math.acos(d) / (2 * math.pi)
    assert math.cos(2 * math.pi * tau) == pytest.approx(d)
    assert swing_overshoot_ratio(d) > 0


def test_zero_masses_zero_force(traj):
    fx, fz = actuator_forces(traj, 0.0, 0.0)
    assert not fx.any() and not fz.any()


def test_static_standing_weight(traj):
    static = generate_gait(P, 4.0, DT)
    static.ax[:] = 0.0
    static.az[:] = 0.0
    static.stance[:] = True
    fx, fz = actuator_forces(static, 90.0, 0.0)
    assert np.all(fx == 0.0)
    assert np.allclose(fz, 882.9)


def test_missing_acceleration_rejected(traj):
    tr = generate_gait(P, 4.0, DT)
    tr.ax = None
    with pytest.raises(ValueError, match="acceleration"):
        required_actuation(tr, 90.0, 10.0, table1_motor())


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 50.0))
def test_inertial_force_scales_with_carried_mass(m):
    tr = generate_gait(P, 4.0, 0.002)
    fx1, fz1 = actuator_forces(tr, 0.0, m)
    fx2, fz2 = actuator_forces(tr, 0.0, 2 * m)
    assert np.array_equal(fx2, 2 * fx1)
    assert np.allclose(fz2, 2 * fz1, rtol=1e-15, atol=0)


def test_transmission_factors_from_catalog():
    spec = table1_motor()
    assert spec["x"].transmission_factor == pytest.approx(932.2 / 19.11)
    assert spec["x"].transmission_factor == pytest.approx(48.8, abs=0.05)
    assert spec["z"].transmission_factor == pytest.approx(26.3, abs=0.05)


@pytest.mark.parametrize("k", [1.5, 2.0, 3.0])
def test_gear_ratio_scales_output(k):
    base = table1_motor()["x"]
    geared = base.with_gear_ratio(base.gear_ratio * k)
    assert geared.momentary_force == pytest.approx(k * base.momentary_force)
    assert geared.max_speed_after_gear == pytest.approx(base.max_speed_after_gear / k)


def _req(tx, tz, sx, sz):
    return ActuationRequirement({"x": 0.0, "z": 0.0}, {"x": tx, "z": tz}, {"x": sx, "z": sz})


def test_check_spec_examples():
    rep = check_spec(_req(24.1, 40.3, 1351.0, 403.0), table1_motor())
    assert rep.passed
    assert rep.axes["x"].torque_margin == pytest.approx(2.38, abs=0.005)
    assert rep.axes["x"].speed_ok
    rep = check_spec(_req(24.1, 40.3, 1351.0, 600.0), table1_motor())
    assert not rep.passed and not rep.axes["z"].speed_ok and rep.axes["x"].passed


def test_catalog_file(tmp_path):
    path = tmp_path / "m.yaml"
    path.write_text("mine:\n  x: {gear_ratio: 5, rated_torque_after_gear: 10, momentary_max_torque: 30,"
                    " max_speed_after_gear: 900, transmission_factor: 40}\n")
    assert load_motor_catalog(path)["mine"]["x"].momentary_force == 1200.0
    path.write_text("mine:\n  y: {gear_ratio: 5}\n")
    with pytest.raises(ValueError, match="axis"):
        load_motor_catalog(path)


def test_trajectory_csv_round_trip(tmp_path, traj):
    path = tmp_path / "traj.csv"
    save_trajectory_csv(traj, path)
    back = load_trajectory_csv(path)
    for name in ("t", "x", "z", "vx", "vz", "ax", "az", "stance"):
        assert np.array_equal(getattr(back, name), getattr(traj, name))
