"""Acceptance suite: one PASS/FAIL line per criterion, also listed in the terminal summary."""

import time

import numpy as np
import pytest

from gaitforge.admittance import AdmittanceParams, AxisAdmittanceState, analytic_step_response, step_admittance
from gaitforge.bridge import decode, encode
from gaitforge.export import footstep_heights
from gaitforge.gait import STANCE, SWING
from gaitforge.gaitgen import GaitParams, check_spec, generate_gait, required_actuation, table1_motor
from gaitforge.runtime import command_step_response, measure_loop_delay, rise_times, simulate
from gaitforge.terrain import estimate_step

import conftest
from conftest import scenario
from test_bridge import random_message
from test_gait import check_events, oracle_phases, random_trace, run_tracker


def report(n, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} C{n:<2} {title}: {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def swing_segments(phase):
    """Boolean mask of samples at least 100 ms away from any phase change."""
    near = np.zeros(phase.size, dtype=bool)
    for k in np.flatnonzero(np.diff(phase) != 0) + 1:
        near[max(0, k - 100):k + 100] = True
    return (phase == SWING) & ~near


def stance_runs(phase):
    edges = np.flatnonzero(np.diff(np.concatenate(([0], (phase == STANCE).astype(int), [0]))))
    return list(zip(edges[::2], edges[1::2]))


def test_c01_admittance_oracle():
    p, dt = AdmittanceParams(8.0, 4.0), 0.001
    n = int(round(5 * p.time_constant / dt))
    t0 = time.perf_counter()
    worst = 0.0
    for f in (1.0, 4.0, 40.0):
        s = AxisAdmittanceState(saturation_limit=None)
        for k in range(1, n + 1):
            s = step_admittance(p, s, f, dt)
            exact = analytic_step_response(p, f, k * dt)
            worst = max(worst, abs(s.desired_velocity - exact) / exact)
    elapsed = time.perf_counter() - t0
    report(1, "admittance oracle", worst <= 1e-3 and elapsed < 1.0,
           f"max rel err {worst:.2e} (<= 1e-3), {elapsed:.2f} s (< 1 s)")


def test_c02_steady_state_gain():
    p, s = AdmittanceParams(8.0, 4.0), AxisAdmittanceState(saturation_limit=None)
    for _ in range(100_000):
        s = step_admittance(p, s, 4.0, 0.001)
    err = abs(s.desired_velocity - 1.0)
    report(2, "steady-state magnitude", err <= 1e-6, f"v = {s.desired_velocity:.9f} m/s (|err| {err:.1e})")


def test_c03_gait_state_machine():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    mismatches = 0
    for i in range(10_000):
        trace = random_trace(rng, 30)
        phases, events = run_tracker(*trace, i % 2)
        mismatches += phases != oracle_phases(*trace, i % 2)
        check_events(events, i % 2)
    elapsed = time.perf_counter() - t0
    report(3, "gait state machine", mismatches == 0 and elapsed < 10.0,
           f"10000 traces, {mismatches} mismatches, alternation and dwell held, {elapsed:.1f} s (< 10 s)")


def test_c04_slope_conservation():
    worst = 0.0
    segments = 0
    for s in (-0.4, 0.0, 0.4):
        log = simulate(scenario(terrain={"kind": "stair", "slope": s}, loop={"duration": 20}))
        for f in range(2):
            for a, b in stance_runs(log.foot(f, "phase")):
                ddx = log["d_x"][b - 1] - log["d_x"][a]
                if abs(ddx) < 1e-3:
                    continue
                ddz = log["d_z"][b - 1] - log["d_z"][a]
                worst = max(worst, abs(ddz / ddx - s))
                segments += 1
    report(4, "slope conservation", worst <= 1e-6 and segments > 30,
           f"{segments} stance segments, max |dz/dx - s| {worst:.1e} (<= 1e-6)")


def test_c05_velocity_estimator():
    v = 0.0
    for _ in range(1000):
        v = estimate_step(v, 80.0, 80.0, 0.001, 1e9, False)
    w = 0.0
    for _ in range(1000):
        w = estimate_step(w, 80.0, 80.0, 0.001, 0.5, False)
    ok = abs(v - 1.0) <= 1e-12 and w == 0.5
    report(5, "velocity estimator", ok, f"pre-clamp v = {v:.15f} m/s, clamped v = {w} m/s")


@pytest.fixture(scope="module")
def flat_walk():
    return simulate(scenario(loop={"duration": 60}))


def test_c06_flat_walk_tracking(flat_walk):
    inside = total = 0
    for f in range(2):
        keep = swing_segments(flat_walk.foot(f, "phase"))
        ex = flat_walk.foot(f, "vdx") - flat_walk.foot(f, "vx")
        ez = flat_walk.foot(f, "vdz") - flat_walk.foot(f, "vz")
        err = np.maximum(np.abs(ex), np.abs(ez))[keep]
        inside += int(np.sum(err <= 0.1))
        total += err.size
    frac = inside / total
    report(6, "flat-ground tracking", frac >= 0.9 and total > 10_000,
           f"{frac:.1%} of {total} swing samples within 100 mm/s (>= 90%)")


def test_c07_delay():
    cfg = scenario(loop={"duration": 2})
    d = measure_loop_delay(simulate(cfg))
    r10, _ = rise_times(command_step_response(cfg), cfg.loop.dt, 1.0)
    ok = abs(d.min - 0.003) < 1e-12 and abs(d.max - 0.003) < 1e-12 and 0.003 <= r10 <= 0.008
    report(7, "delay reproduction", ok,
           f"sense-to-motion {d.mean * 1e3:.3f} ms, 10% rise {r10 * 1e3:.1f} ms (3..8 ms)")


def test_c08_force_envelope(flat_walk):
    force = np.concatenate([
        np.hypot(flat_walk.foot(f, "fx"), flat_walk.foot(f, "fz"))[flat_walk.foot(f, "phase") == SWING]
        for f in range(2)])
    peak, frac = force.max(), np.mean(force <= 40.0)
    report(8, "force envelope", peak <= 60.0 and frac >= 0.8,
           f"peak {peak:.1f} N (<= 60), {frac:.1%} <= 40 N (>= 80%)")


def test_c09_sizing():
    spec = table1_motor()
    traj = generate_gait(GaitParams(step_length=0.67, walk_speed=1.2), 4.0, 0.001, max_swing_speed=None)
    req = required_actuation(traj, 90.0, 10.0, spec)
    rep = check_spec(req, spec)
    t, s = req.peak_motor_torque, req.peak_motor_speed
    order = t["z"] > t["x"] and s["x"] > s["z"]
    failed = [f"{a} {q}" for a, c in rep.axes.items()
              for q, ok in (("torque", c.torque_ok), ("speed", c.speed_ok)) if not ok]
    report(9, "sizing orderings", order and rep.passed,
           f"torque z {t['z']:.1f} > x {t['x']:.1f} N*m, speed x {s['x']:.0f} > z {s['z']:.0f} RPM "
           f"({'orderings hold' if order else 'ordering broken'}); check_spec "
           f"{'passes' if rep.passed else 'fails on ' + ', '.join(failed)}")


def test_c10_bridge_equivalence():
    from test_runtime import _equivalent

    base = {"loop": {"duration": 20}}
    a = simulate(scenario(terrain={"kind": "stair", "slope": 0.3}, **base))
    b = simulate(scenario(terrain={"kind": "external", "source": "stair", "slope": 0.3},
                          bridge={"decimation": 1}, **base))
    shift = 0 if _equivalent(a, b, 0) else 1 if _equivalent(b, a, 1) else None
    rng = np.random.default_rng(99)
    bad = sum(decode(encode(m)) != m for m in (random_message(rng) for _ in range(10_000)))
    report(10, "bridge equivalence", shift is not None and bad == 0,
           f"external run matches stair with shift {shift}; 10000 round trips, {bad} mismatches")


def test_c11_determinism_throughput():
    cfg = scenario(loop={"duration": 60}, seed=5)
    simulate(scenario(loop={"duration": 1}))  # compile outside the timed run
    t0 = time.perf_counter()
    a = simulate(cfg)
    elapsed = time.perf_counter() - t0
    b = simulate(cfg)
    same = a.data.tobytes() == b.data.tobytes()
    report(11, "determinism and throughput", same and elapsed <= 0.6,
           f"bit-identical {same}, 60 s simulated in {elapsed:.3f} s (<= 0.6 s)")


def test_c12_vr_trial_shapes():
    dyn = simulate(scenario(walk={"mode": "dynamic"}, loop={"duration": 14}))
    forward = -dyn["d_x"]
    v = dyn["v_x"]
    started = v.max() >= 0.3
    stopped = v[-1] <= 0.05 and v[-1] < 0.25 * v.max()
    monotone = bool(np.all(np.diff(forward) >= 0))
    s = 0.3
    up = simulate(scenario(terrain={"kind": "stair", "slope": s}, loop={"duration": 20}))
    _, h = footstep_heights(up)
    # World height of every footstep: the stair under the strike point, shifted by the travel.
    strikes = sorted((k, f) for f in range(2) for k in np.flatnonzero(
        (up.foot(f, "phase")[1:] == STANCE) & (up.foot(f, "phase")[:-1] != STANCE)) + 1)
    truth = [s * (up.foot(f, "x")[k] - up["d_x"][k]) for k, f in strikes]
    err = np.abs(h - np.array(truth)).max()
    stepwise = bool(np.all(np.diff(h) > 0))
    ok = started and stopped and monotone and stepwise and err <= 0.005
    report(12, "VR trial shapes", ok,
           f"walk start peak {v.max():.2f} m/s, stop {v[-1]:.3f} m/s, travel monotone {monotone}; "
           f"{len(h)} uphill steps increasing {stepwise}, max height error {err * 1e3:.2f} mm (<= 5)")
