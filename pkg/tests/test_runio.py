import numpy as np
import pytest

from latticejump.errors import ConfigError
from latticejump.runio import (
    aggregate_observables,
    ensure_dir,
    read_aggregate,
    read_csv_columns,
    read_jumps,
    read_manifest,
    write_aggregate_csv,
    write_jumps_csv,
    write_manifest,
    write_series_csv,
    write_trajectories,
)


def test_series_roundtrip_full_precision(tmp_path):
    times = np.array([0.0, 0.1, 0.2])
    cols = {"x": np.array([1 / 3, 2 / 3, 1e-17]), "y": np.array([-1.5, 0.0, 3.25])}
    path = tmp_path / "s.csv"
    write_series_csv(path, times, 0, cols)
    back = read_csv_columns(path)
    assert list(back) == ["time", "traj_id", "x", "y"]
    assert np.array_equal(back["time"], times)
    assert np.array_equal(back["x"], cols["x"])  # bitwise, not approximate
    assert np.array_equal(back["y"], cols["y"])
    assert all(back["traj_id"] == "0")


def test_complex_columns_split_into_pairs(tmp_path):
    times = np.array([0.0, 1.0])
    cols = {"c": np.array([1 + 2j, -0.5j])}
    path = tmp_path / "c.csv"
    write_series_csv(path, times, "master", cols)
    back = read_csv_columns(path)
    assert "c_re" in back and "c_im" in back and "c" not in back
    assert np.array_equal(back["c_re"], [1.0, 0.0])
    assert np.array_equal(back["c_im"], [2.0, -0.5])


def test_trajectory_files_one_per_id(tmp_path):
    times = np.array([0.0, 0.5])
    series = {"n": np.array([[1.0, 2.0], [3.0, 4.0]])}
    write_trajectories(tmp_path, times, series, range(2))
    a = read_csv_columns(tmp_path / "traj_00000.csv")
    b = read_csv_columns(tmp_path / "traj_00001.csv")
    assert np.array_equal(a["n"], [1.0, 2.0])
    assert np.array_equal(b["n"], [3.0, 4.0])
    assert all(b["traj_id"] == "1")


def test_jumps_csv_layout(tmp_path):
    log = [[(0.25, "d")], [], [(0.5, "d"), (0.75, "b")]]
    write_jumps_csv(tmp_path, log)
    back = read_jumps(tmp_path)
    assert list(back["traj_id"]) == ["0", "2", "2"]
    assert np.array_equal(back["time"], [0.25, 0.5, 0.75])
    assert list(back["channel"]) == ["d", "d", "b"]


def test_aggregate_roundtrip_and_names(tmp_path):
    times = np.array([0.0, 1.0])
    means = {"n_1": np.array([0.5, 0.25]), "var_d": np.array([1.0, 2.0])}
    sems = {"n_1": np.array([0.01, 0.02]), "var_d": np.array([0.0, 0.0])}
    write_aggregate_csv(tmp_path, times, means, sems)
    agg = read_aggregate(tmp_path)
    assert aggregate_observables(agg) == ["n_1", "var_d"]
    assert np.array_equal(agg["mean_n_1"], means["n_1"])
    assert np.array_equal(agg["sem_var_d"], sems["var_d"])


def test_manifest_required_keys(tmp_path):
    write_manifest(tmp_path, "ab" * 32, seed=7, n_traj=3,
                   jump_counts={"d": 5}, wall_seconds=1.25)
    m = read_manifest(tmp_path)
    assert m["config_hash"] == "ab" * 32
    assert m["seed"] == 7 and m["n_traj"] == 3
    assert m["schema_version"] == 1
    assert m["jump_counts"] == {"d": 5}
    with pytest.raises(ConfigError, match="not an artifact directory"):
        read_manifest(tmp_path / "nothing_here")


def test_manifest_missing_keys_rejected(tmp_path):
    (tmp_path / "manifest.json").write_text('{"config_hash": "x"}')
    with pytest.raises(ConfigError, match="missing manifest keys"):
        read_manifest(tmp_path)


def test_ragged_and_empty_csv_rejected(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("time,traj_id,x\n0.0,0\n")
    with pytest.raises(ConfigError, match="ragged"):
        read_csv_columns(path)
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(ConfigError, match="empty"):
        read_csv_columns(empty)
    with pytest.raises(ConfigError, match="cannot read"):
        read_csv_columns(tmp_path / "absent.csv")


def test_ensure_dir_idempotent(tmp_path):
    target = tmp_path / "a" / "b"
    ensure_dir(target)
    ensure_dir(target)
    assert target.is_dir()
