import numpy as np
import pytest

from gaitforge.export import KINDS, export, footstep_heights
from gaitforge.runtime import TelemetryLog, simulate
from gaitforge.sweep import oscillation_ratio, run_sweep, swing_metrics
from conftest import scenario

SHORT = {"loop": {"duration": 6}}


def test_single_cell_matches_simulate():
    base = scenario(**SHORT)
    (cell,) = run_sweep(base, [8.0], [4.0])
    log = simulate(base)
    assert cell.status == "ok"
    assert (cell.peak_swing_force, cell.tracking_rms) == swing_metrics(log)
    assert cell.oscillation_ratio == oscillation_ratio(log)


def test_velocity_per_force_nonincreasing_in_damping():
    cells = run_sweep(scenario(**SHORT), [8.0], [1.0, 2.0, 4.0, 8.0])
    vpf = [c.velocity_per_force for c in cells]
    assert all(b <= a for a, b in zip(vpf, vpf[1:]))


def test_unstable_cell_skipped():
    cells = run_sweep(scenario(**SHORT), [0.001, 8.0], [4.0])
    assert cells[0].status == "skipped" and "unstable" in cells[0].reason
    assert cells[1].status == "ok"


def test_order_and_parallel_independence():
    base = scenario(**SHORT)
    a = run_sweep(base, [4.0, 8.0], [2.0, 4.0])
    b = run_sweep(base, [8.0, 4.0], [4.0, 2.0], jobs=2)
    key = lambda c: (c.virtual_mass, c.virtual_damping)
    assert sorted(a, key=key) == sorted(b, key=key)


def test_oscillation_metric_separates_tuned_from_light():
    base = scenario(loop={"duration": 10})
    (tuned,) = run_sweep(base, [8.0], [4.0])
    (light,) = run_sweep(base, [0.3], [0.0])
    assert not tuned.oscillatory
    assert light.oscillatory


def test_empty_grid():
    with pytest.raises(ValueError):
        run_sweep(scenario(**SHORT), [], [4.0])


@pytest.fixture(scope="module")
def uphill():
    return simulate(scenario(terrain={"kind": "stair", "slope": 0.3}, loop={"duration": 10}))


def test_trajectory_force_schema(tmp_path):
    log = simulate(scenario(loop={"duration": 3}))
    csv_path, png = export(log, "trajectory-force", tmp_path)
    header = csv_path.read_text().splitlines()[0]
    assert header == "x,z,f_x,f_z"
    rows = np.loadtxt(csv_path, delimiter=",", skiprows=1)
    assert rows.shape == (300, 4)
    assert png.stat().st_size > 0


def test_velocity_tracking_export(tmp_path, uphill):
    csv_path, _ = export(uphill, "velocity-tracking", tmp_path, foot=1)
    rows = np.loadtxt(csv_path, delimiter=",", skiprows=1)
    assert np.allclose(rows[:, 4], rows[:, 2] - rows[:, 3])


def test_travel_d_z_monotone_in_stance(tmp_path, uphill):
    csv_path, _ = export(uphill, "travel", tmp_path)
    rows = np.genfromtxt(csv_path, delimiter=",", names=True)
    height = rows["height"]
    assert np.all(np.diff(height) >= -1e-12)
    assert height[-1] > 0.5


def test_footstep_heights_climb(uphill):
    t, h = footstep_heights(uphill)
    assert len(t) >= 6 and np.all(np.diff(h) > 0)


def test_export_errors(tmp_path, uphill):
    with pytest.raises(ValueError, match="trajectory-force"):
        export(uphill, "spectrum", tmp_path)
    empty = TelemetryLog(np.zeros((0, uphill.data.shape[1])), 1000.0, 3)
    with pytest.raises(ValueError, match="empty"):
        export(empty, KINDS[0], tmp_path)
