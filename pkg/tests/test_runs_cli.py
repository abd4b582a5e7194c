import csv
import json

import numpy as np
import pytest

from hjavoid.cli import EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_NUMERIC, EXIT_OK, main
from hjavoid.runs import (count_components, format_table, level_resolution, rasterize_levelset,
                          run_convergence, run_reconstruct, run_solve)
from hjavoid.scenarios import builtin_scenario, dump_yaml, with_resolution


def small(name="scenario1", horizon=0.5):
    cfg = with_resolution(builtin_scenario(name), 24, 6)
    cfg.horizon = horizon
    cfg.output.snapshot_times = (0.25,)
    return cfg


@pytest.fixture
def small_yaml(tmp_path):
    path = tmp_path / "small.yaml"
    path.write_text(dump_yaml(small(horizon=2.0)))
    return path


# -- runs ---------------------------------------------------------------------------------


def test_components():
    m = np.zeros((6, 6), dtype=bool)
    m[0:2, 0:2] = True
    m[4:, 4:] = True
    assert count_components(m) == 2
    m[2, 2] = True  # diagonal contact does not join components
    assert count_components(m) == 3
    assert count_components(np.zeros((3, 3), dtype=bool)) == 0


def test_solve_exports(tmp_path):
    res = run_solve(small(), tmp_path)
    names = {p.name for p in tmp_path.iterdir()}
    assert {"manifest.json", "min_time.npz", "value_t0.0000.npz", "value_t0.5000.npz", "mask_t0.2500.npy"} <= names
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["n_steps"] == res.evolution.n_steps and man["snapshot_times"][-1] == 0.5
    rows = list(csv.reader(open(tmp_path / "slice_t0.5000.csv")))
    assert rows[0] == ["x", "y", "value", "reachable"] and len(rows) == 24 * 6 + 1


def test_moving_scene_has_no_min_time_on_physical_slice():
    res = run_solve(small("scenario2b"), None, snapshot_times=())
    assert res.min_time is None


def test_reconstruct_writes_trajectory(tmp_path):
    res = run_reconstruct(builtin_scenario("scenario1"), tmp_path)
    assert res.trajectory.reason == "target-reached"
    info = json.loads((tmp_path / "trajectory.json").read_text())
    assert info["reason"] == "target-reached" and info["dt_max"] == pytest.approx(res.bound.dt_max)
    assert (tmp_path / "trajectory.csv").exists()
    assert all(s.certified in ("yes", "margin") for s in res.trajectory.steps)


def test_convergence_table_is_deterministic(tmp_path):
    cfg = small(horizon=0.25)
    a = run_convergence(cfg, [0, 1], 2, tmp_path)
    b = run_convergence(cfg, [0, 1], 2)
    assert [r.errors for r in a] == [r.errors for r in b]
    assert a[0].orders == (None, None, None)
    assert all(o is not None for o in a[1].orders)
    assert (a[0].nx, a[0].ny) == level_resolution(0) == (35, 4)
    assert (tmp_path / "convergence.csv").exists()
    assert format_table(a).count("\n") == 4


def test_convergence_against_itself_is_zero():
    rows = run_convergence(small(horizon=0.25), [1], 1)
    assert rows[0].errors == (0.0, 0.0, 0.0)


def test_raster(tmp_path):
    cfg = builtin_scenario("scenario1")
    xs, ys, vals = rasterize_levelset(cfg, "road", path=tmp_path / "r.csv")
    np.testing.assert_allclose(vals, np.maximum(-3.5 - ys, ys - 3.5)[None, :] + 0 * xs[:, None])
    assert sum(1 for _ in open(tmp_path / "r.csv")) == 70 * 8 + 1
    _, _, obs = rasterize_levelset(cfg, "obstacle")
    assert obs.min() < 0 < obs.max()


# -- CLI --------------------------------------------------------------------------------


def test_cli_scenario_commands(capsys):
    assert main(["scenario", "list"]) == EXIT_OK
    assert "scenario2b" in capsys.readouterr().out
    assert main(["scenario", "show", "scenario1"]) == EXIT_OK
    assert "horizon" in capsys.readouterr().out
    assert main(["scenario", "show", "nope"]) == EXIT_CONFIG


def test_cli_solve_and_reconstruct(small_yaml, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["solve", str(small_yaml), "-o", str(out), "--snapshots", "0.5"]) == EXIT_OK
    # snapshots land on the nearest step
    assert len(list(out.glob("value_t*.npz"))) == 3
    assert main(["reconstruct", str(small_yaml), "-o", str(out)]) == EXIT_OK
    assert "target-reached" in capsys.readouterr().out


def test_cli_exit_codes(small_yaml, tmp_path):
    assert main(["solve", str(tmp_path / "missing.yaml")]) == EXIT_CONFIG
    assert main(["solve", str(small_yaml), "--cfl", "2", "-o", str(tmp_path)]) == EXIT_NUMERIC
    # far upstream the target cannot be reached within the horizon
    assert main(["reconstruct", str(small_yaml), "--start=-49,-1.5,0,5", "-o", str(tmp_path)]) == EXIT_INFEASIBLE
    assert main(["reconstruct", str(small_yaml), "--start=-90,0,0,5", "-o", str(tmp_path)]) == EXIT_CONFIG
    assert main(["convergence", str(small_yaml), "--levels", "1..3", "--reference", "2"]) == EXIT_CONFIG
    assert main(["raster", "scenario1", "--expr", "obstacle", "-o", str(tmp_path / "o.csv")]) == EXIT_OK


def test_cli_rejects_malformed_arguments():
    with pytest.raises(SystemExit):
        main(["reconstruct", "scenario1", "--start", "1,2,3"])
    with pytest.raises(SystemExit):
        main(["convergence", "scenario1", "--levels", "a..b"])
