"""Command-line entry point: ``gaitforge simulate|sweep|size|export|serve``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import threading
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .config import ConfigError, ScenarioConfig

log = logging.getLogger("gaitforge")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_scenario_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("scenario")
    g.add_argument("--config", type=Path, help="YAML scenario file")
    g.add_argument("--terrain", choices=cfgmod.TERRAIN_KINDS)
    g.add_argument("--source", choices=("flat", "stair", "uneven"),
                   help="world rendered by the terrain service when --terrain external")
    g.add_argument("--height", type=float, help="flat ground height [m]")
    g.add_argument("--slope", type=float, help="stair slope (rise/run)")
    g.add_argument("--step-heights", type=_floats, help="uneven footstep heights, comma-separated")
    g.add_argument("--speed", type=float, help="fixed walking speed [m/s]")
    g.add_argument("--dynamic", action="store_true", help="estimate walking speed from forces")
    g.add_argument("--virtual-mass", type=float)
    g.add_argument("--virtual-damping", type=float)
    g.add_argument("--duration", type=float, help="simulated seconds")
    g.add_argument("--rate", type=float, help="control rate [Hz]")
    g.add_argument("--mode", choices=("deterministic", "wallclock"))
    g.add_argument("--delay-cycles", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--decimation", type=int, help="ticks per outbound bridge message")
    g.add_argument("--connect", metavar="HOST:PORT", help="use a TCP terrain service")


def _overrides(args) -> dict:
    o: dict = {}

    def put(path, value):
        if value is None:
            return
        node = o
        *head, last = path.split(".")
        for key in head:
            node = node.setdefault(key, {})
        node[last] = value

    put("terrain.kind", args.terrain)
    put("terrain.source", args.source)
    put("terrain.height", args.height)
    put("terrain.slope", args.slope)
    put("terrain.step_heights", args.step_heights)
    if args.speed is not None:
        put("walk.mode", "fixed")
        put("walk.speed", args.speed)
    if args.dynamic:
        put("walk.mode", "dynamic")
    put("admittance.virtual_mass", args.virtual_mass)
    put("admittance.virtual_damping", args.virtual_damping)
    put("loop.duration", args.duration)
    put("loop.rate", args.rate)
    put("loop.mode", args.mode)
    put("loop.delay_cycles", args.delay_cycles)
    put("seed", args.seed)
    put("bridge.decimation", args.decimation)
    if args.connect:
        host, _, port = args.connect.rpartition(":")
        put("bridge.loopback", False)
        put("bridge.host", host or "127.0.0.1")
        put("bridge.port", int(port))
    return o


def parse_and_validate(args) -> ScenarioConfig:
    """Merge the config file (if any) with flag overrides and validate the result."""
    base: dict = {}
    if getattr(args, "config", None) is not None:
        import yaml

        try:
            base = yaml.safe_load(Path(args.config).read_text()) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError("<file>", str(exc)) from None
        if not isinstance(base, dict):
            raise ConfigError("<root>", "config file must contain a mapping")
    return cfgmod.from_dict(cfgmod.merge(base, _overrides(args)))


def _summary(tlog) -> list[str]:
    from .runtime import jitter_stats, measure_loop_delay

    lines = [f"frames            {len(tlog)}"]
    d = measure_loop_delay(tlog)
    j = jitter_stats(tlog)
    lines.append(f"sense->motion     {d.mean * 1e3:.3f} ms (min {d.min * 1e3:.3f}, max {d.max * 1e3:.3f})")
    lines.append(f"jitter            mean {j.mean * 1e6:.1f} us, p99 {j.p99 * 1e6:.1f} us, max {j.max * 1e6:.1f} us")
    for f in range(2):
        sw = tlog.foot(f, "phase") == 0
        force = np.hypot(tlog.foot(f, "fx"), tlog.foot(f, "fz"))[sw]
        if force.size:
            lines.append(f"foot {f} swing     peak {force.max():.1f} N, <=40 N {np.mean(force <= 40):.1%}, "
                         f"events {len(tlog.events(f))}")
    lines.append(f"travel            forward {-tlog['d_x'][-1]:.3f} m, height {-tlog['d_z'][-1]:.3f} m, "
                 f"steps {int(tlog['step'][-1])}")
    flags = int(np.bitwise_or.reduce(tlog["flags"].astype(int)))
    lines.append(f"flags             {flags}")
    return lines


def cmd_simulate(args) -> int:
    from .runtime import simulate

    scenario = parse_and_validate(args)
    tlog = simulate(scenario)
    if args.out:
        tlog.to_csv(args.out)
        print(f"telemetry written to {args.out}")
    if args.dump_config:
        Path(args.dump_config).write_text(scenario.dump())
    print("\n".join(_summary(tlog)))
    return 0


def cmd_sweep(args) -> int:
    from .sweep import cells_to_rows, run_sweep

    base = parse_and_validate(args)
    cells = run_sweep(base, args.masses, args.dampings, jobs=args.jobs, threshold=args.threshold)
    rows = cells_to_rows(cells)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
    print(f"{'m_v':>6} {'c_v':>6} {'status':>8} {'peak N':>8} {'rms m/s':>8} {'osc':>8}")
    for c in cells:
        if c.status == "ok":
            print(f"{c.virtual_mass:6g} {c.virtual_damping:6g} {'ok':>8} {c.peak_swing_force:8.1f} "
                  f"{c.tracking_rms:8.4f} {c.oscillation_ratio:8.1f}{'  oscillatory' if c.oscillatory else ''}")
        else:
            print(f"{c.virtual_mass:6g} {c.virtual_damping:6g} {'skipped':>8}  {c.reason}")
    return 0


def cmd_size(args) -> int:
    from .gaitgen import (GaitParams, check_spec, generate_gait, load_motor_catalog,
                          required_actuation, save_trajectory_csv)

    params = GaitParams(args.step_length, args.clearance, args.speed, args.duty)
    catalog = load_motor_catalog(args.catalog)
    if args.motor not in catalog:
        raise ConfigError("motor", f"unknown motor {args.motor!r}; catalog has {sorted(catalog)}")
    spec = catalog[args.motor]
    traj = generate_gait(params, max(args.duration, 2 * params.cycle_time), args.dt,
                         max_swing_speed=None)
    if args.export_traj:
        save_trajectory_csv(traj, args.export_traj)
    req = required_actuation(traj, args.user_mass, args.carried_mass, spec)
    report = check_spec(req, spec)
    print(f"gait: stance {params.stance_time:.3f} s, swing {params.swing_time:.3f} s, "
          f"cadence {params.derived_cadence:.3f} steps/s, swing peak {params.peak_swing_speed:.3f} m/s")
    for a in ("x", "z"):
        print(f"{a}: force {req.peak_force[a]:8.1f} N, torque {req.peak_motor_torque[a]:7.2f} N*m, "
              f"speed {req.peak_motor_speed[a]:7.1f} RPM")
    print("\n".join(report.lines()))
    print("PASS" if report.passed else "FAIL")
    return 0 if report.passed else 1


def cmd_export(args) -> int:
    from .export import export
    from .runtime import TelemetryLog, simulate

    if args.log:
        tlog = TelemetryLog.from_csv(args.log)
    else:
        tlog = simulate(parse_and_validate(args))
    for kind in args.kind:
        for path in export(tlog, kind, args.out_dir, foot=args.foot):
            print(path)
    return 0


def cmd_serve(args) -> int:
    from .bridge import serve_terrain

    scenario = parse_and_validate(args)
    server = serve_terrain(scenario.terrain.world(), args.host, args.port)
    host, port = server.address
    print(f"terrain service on {host}:{port}", flush=True)
    if args.serve_seconds:
        threading.Timer(args.serve_seconds, server.shutdown).start()
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gaitforge", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one scenario")
    _add_scenario_flags(p)
    p.add_argument("--out", type=Path, help="telemetry CSV path")
    p.add_argument("--dump-config", type=Path, help="write the merged scenario as YAML")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="grid over virtual mass and damping")
    _add_scenario_flags(p)
    p.add_argument("--masses", type=_floats, default=[4.0, 8.0, 16.0])
    p.add_argument("--dampings", type=_floats, default=[2.0, 4.0, 8.0])
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--threshold", type=float, default=30.0, help="oscillation ratio threshold")
    p.add_argument("--out", type=Path, help="report CSV path")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("size", help="actuator sizing from a synthetic gait")
    p.add_argument("--step-length", type=float, default=0.67)
    p.add_argument("--clearance", type=float, default=0.14)
    p.add_argument("--speed", type=float, default=1.2)
    p.add_argument("--duty", type=float, default=0.6)
    p.add_argument("--user-mass", type=float, default=90.0)
    p.add_argument("--carried-mass", type=float, default=10.0)
    p.add_argument("--duration", type=float, default=4.0)
    p.add_argument("--dt", type=float, default=0.001)
    p.add_argument("--catalog", type=Path, help="motor catalog YAML (default: bundled)")
    p.add_argument("--motor", default="table1")
    p.add_argument("--export-traj", type=Path, help="write the trajectory CSV")
    p.set_defaults(func=cmd_size)

    p = sub.add_parser("export", help="CSV and plot exports")
    _add_scenario_flags(p)
    p.add_argument("--log", type=Path, help="telemetry CSV; runs the scenario when omitted")
    p.add_argument("--kind", action="append", choices=("trajectory-force", "velocity-tracking", "travel"),
                   required=True)
    p.add_argument("--foot", type=int, default=0, choices=(0, 1))
    p.add_argument("--out-dir", type=Path, default=Path("."))
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("serve", help="TCP terrain service")
    _add_scenario_flags(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--serve-seconds", type=float, help="stop after this many seconds")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
