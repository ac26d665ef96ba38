import csv

import pytest
from hypothesis import given, settings, strategies as st

from gaitforge import cli
from gaitforge import config as cfgmod
from gaitforge.config import ConfigError, ScenarioConfig
from gaitforge.terrain import FixedSpeed, Flat


def parse(argv):
    return cli.parse_and_validate(cli.build_parser().parse_args(argv))


def test_flags_map_to_profiles():
    cfg = parse(["simulate", "--terrain", "flat", "--speed", "0.4"])
    assert cfg.walk.walk_mode() == FixedSpeed(0.4)
    assert cfg.terrain.profile() == Flat(0.0)


def test_no_flags_gives_tuned_defaults():
    cfg = parse(["simulate"])
    assert (cfg.admittance.virtual_mass, cfg.admittance.virtual_damping) == (8.0, 4.0)


def test_zero_virtual_mass_rejected(capsys):
    with pytest.raises(ConfigError, match="virtual_mass"):
        parse(["simulate", "--virtual-mass", "0"])
    assert cli.main(["simulate", "--virtual-mass", "0"]) == 2
    assert "virtual_mass" in capsys.readouterr().err


def test_file_merged_with_flags(tmp_path):
    path = tmp_path / "s.yaml"
    path.write_text("terrain:\n  kind: stair\n  slope: 0.2\nloop:\n  duration: 3\n")
    cfg = parse(["simulate", "--config", str(path), "--slope", "0.3"])
    assert cfg.terrain.kind == "stair" and cfg.terrain.slope == 0.3 and cfg.loop.duration == 3


def test_unknown_key_reports_path():
    with pytest.raises(ConfigError) as exc:
        cfgmod.from_dict({"terrain": {"kindd": "flat"}})
    assert exc.value.path == "terrain.kindd"


def test_type_error_reports_path():
    with pytest.raises(ConfigError) as exc:
        cfgmod.from_dict({"loop": {"rate": "fast"}})
    assert exc.value.path == "loop.rate"


def test_stability_is_cross_validated():
    with pytest.raises(ConfigError, match="unstable"):
        cfgmod.from_dict({"admittance": {"virtual_mass": 0.001, "virtual_damping": 4.0}})


def test_user_mass_envelope():
    with pytest.raises(ConfigError):
        cfgmod.from_dict({"human": {"user_mass": 100.0}})


def test_round_trip_defaults():
    cfg = ScenarioConfig()
    assert cfgmod.loads(cfg.dump()) == cfg


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["flat", "stair", "uneven", "external"]), st.floats(-0.4, 0.4),
       st.floats(0.5, 20.0), st.floats(0.0, 20.0), st.sampled_from(["fixed", "dynamic"]),
       st.integers(0, 2**31))
def test_round_trip_property(kind, slope, m_v, c_v, mode, seed):
    cfg = cfgmod.from_dict({"terrain": {"kind": kind, "slope": slope, "step_heights": [0.0, 0.05]},
                            "walk": {"mode": mode},
                            "admittance": {"virtual_mass": m_v, "virtual_damping": c_v},
                            "seed": seed})
    assert cfgmod.loads(cfg.dump()) == cfg


def test_simulate_command(tmp_path, capsys):
    out = tmp_path / "log.csv"
    assert cli.main(["simulate", "--duration", "2", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "sense->motion     3.000 ms" in text
    assert out.read_text().startswith("gaitforge-telemetry-v1\n")


def test_size_command_exit_code(capsys):
    # The synthetic gait's x speed exceeds the catalogue motor, so the check fails.
    assert cli.main(["size"]) == 1
    assert "FAIL" in capsys.readouterr().out
    assert cli.main(["size", "--speed", "0.8"]) == 0


def test_size_unknown_motor():
    assert cli.main(["size", "--motor", "nope"]) == 2


def test_export_command(tmp_path):
    assert cli.main(["export", "--kind", "travel", "--duration", "2", "--out-dir", str(tmp_path)]) == 0
    assert (tmp_path / "travel.csv").exists() and (tmp_path / "travel.png").exists()


def test_sweep_command(tmp_path):
    out = tmp_path / "sweep.csv"
    assert cli.main(["sweep", "--masses", "8", "--dampings", "4", "--duration", "2",
                     "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 1 and rows[0]["status"] == "ok"


def test_serve_command_stops(capsys):
    assert cli.main(["serve", "--port", "0", "--serve-seconds", "0.2"]) == 0
    assert "terrain service on 127.0.0.1:" in capsys.readouterr().out
