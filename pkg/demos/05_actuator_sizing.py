"""Actuator sizing from a synthetic gait.

Generates a cycloid gait, turns it into axis forces for a 90 kg user, and
checks the catalogue motors. Also shows how the gear ratio trades speed
headroom for force.
"""

from gaitforge.gaitgen import GaitParams, check_spec, generate_gait, required_actuation, table1_motor

spec = table1_motor()
for speed in (0.8, 1.0, 1.2):
    params = GaitParams(step_length=0.67, foot_clearance=0.14, walk_speed=speed)
    traj = generate_gait(params, 4.0, 0.001, max_swing_speed=None)
    req = required_actuation(traj, user_mass=90.0, carried_mass=10.0, spec=spec)
    report = check_spec(req, spec)
    print(f"walk {speed} m/s: swing peak {params.peak_swing_speed:.2f} m/s -> "
          f"{'PASS' if report.passed else 'FAIL'}")
    for line in report.lines():
        print("   ", line)

x = spec["x"]
for gear in (2, 3, 4):
    g = x.with_gear_ratio(gear)
    print(f"x gear {gear}: momentary force {g.momentary_force:6.0f} N, max speed {g.max_speed_after_gear:6.0f} RPM")
