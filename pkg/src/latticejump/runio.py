"""Artifact directories: CSV series, jump logs, aggregates, manifests.

Layout of one artifact directory:

    config.json          canonical config (the hash input, pretty-printed)
    manifest.json        config_hash, seed, n_traj, schema_version,
                         jump_counts, wall_seconds
    traj_00000.csv ...   per-trajectory series, columns time, traj_id, <cols>
    master.csv           master-equation series (traj_id column = "master")
    jumps.csv            traj_id, time, channel for every detection event
    aggregate.csv        time, mean_<col>, sem_<col> for every column
    rho.npz              optional density-matrix stack (times, rho)

Numbers are written as full-precision scientific notation so identical runs
produce identical bytes and comparisons can round-trip losslessly.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import ConfigError

SCHEMA_VERSION = 1

MANIFEST_KEYS = ("config_hash", "seed", "n_traj", "schema_version",
                 "jump_counts", "wall_seconds")


def _fmt(x: float) -> str:
    return format(float(x), ".16e")


def _series_rows(times, traj_label, columns: dict) -> list[str]:
    names = list(columns)
    header = "time,traj_id," + ",".join(names)
    rows = [header]
    for k, t in enumerate(times):
        vals = ",".join(_fmt(columns[n][k]) for n in names)
        rows.append(f"{_fmt(t)},{traj_label},{vals}")
    return rows


def _split_complex(columns: dict) -> dict:
    """Complex-valued series become paired _re/_im columns."""
    out = {}
    for name, arr in columns.items():
        arr = np.asarray(arr)
        if np.iscomplexobj(arr):
            out[f"{name}_re"] = arr.real
            out[f"{name}_im"] = arr.imag
        else:
            out[name] = arr
    return out


def write_series_csv(path, times, traj_label, columns: dict) -> None:
    rows = _series_rows(times, traj_label, _split_complex(columns))
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(rows) + "\n")


def write_trajectories(out_dir, times, series: dict, traj_ids) -> None:
    """One CSV per trajectory from stacked (n_traj, n_samples) series."""
    for row, traj_id in enumerate(traj_ids):
        columns = {name: vals[row] for name, vals in series.items()}
        write_series_csv(
            os.path.join(out_dir, f"traj_{traj_id:05d}.csv"), times, traj_id, columns
        )


def write_jumps_csv(out_dir, jump_log) -> None:
    rows = ["traj_id,time,channel"]
    for traj_id, events in enumerate(jump_log):
        for t, label in events:
            rows.append(f"{traj_id},{_fmt(t)},{label}")
    with open(os.path.join(out_dir, "jumps.csv"), "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(rows) + "\n")


def write_aggregate_csv(out_dir, times, means: dict, sems: dict) -> None:
    means = _split_complex(means)
    sems = _split_complex(sems)
    names = list(means)
    header = "time," + ",".join(f"mean_{n},sem_{n}" for n in names)
    rows = [header]
    for k, t in enumerate(times):
        vals = ",".join(f"{_fmt(means[n][k])},{_fmt(sems[n][k])}" for n in names)
        rows.append(f"{_fmt(t)},{vals}")
    with open(os.path.join(out_dir, "aggregate.csv"), "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(rows) + "\n")


def write_manifest(out_dir, config_hash: str, seed: int, n_traj: int,
                   jump_counts: dict, wall_seconds: float) -> None:
    manifest = {
        "config_hash": config_hash,
        "seed": seed,
        "n_traj": n_traj,
        "schema_version": SCHEMA_VERSION,
        "jump_counts": {k: jump_counts[k] for k in sorted(jump_counts)},
        "wall_seconds": wall_seconds,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


def write_config_json(out_dir, canonical: dict) -> None:
    with open(os.path.join(out_dir, "config.json"), "w", encoding="utf-8") as f:
        json.dump(canonical, f, indent=2, sort_keys=True)
        f.write("\n")


def write_density_npz(out_dir, times, rho: np.ndarray) -> None:
    np.savez_compressed(os.path.join(out_dir, "rho.npz"), times=np.asarray(times), rho=rho)


# -- reading ---------------------------------------------------------------------


def read_manifest(artifact_dir) -> dict:
    path = os.path.join(artifact_dir, "manifest.json")
    try:
        with open(path, encoding="utf-8") as f:
            manifest = json.load(f)
    except OSError as exc:
        raise ConfigError(f"{artifact_dir} is not an artifact directory: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    missing = [k for k in MANIFEST_KEYS if k not in manifest]
    if missing:
        raise ConfigError(f"{path}: missing manifest keys {missing}")
    return manifest


def read_csv_columns(path) -> dict:
    """A CSV as {column name: array}; traj_id stays as strings."""
    try:
        with open(path, encoding="utf-8") as f:
            lines = [ln.strip() for ln in f if ln.strip()]
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if not lines:
        raise ConfigError(f"{path} is empty")
    names = lines[0].split(",")
    raw = [ln.split(",") for ln in lines[1:]]
    if any(len(row) != len(names) for row in raw):
        raise ConfigError(f"{path}: ragged rows do not match header {names}")
    out: dict = {}
    for col, name in enumerate(names):
        vals = [row[col] for row in raw]
        if name == "traj_id" or name == "channel":
            out[name] = np.array(vals)
        else:
            out[name] = np.array([float(v) for v in vals])
    return out


def read_aggregate(artifact_dir) -> dict:
    return read_csv_columns(os.path.join(artifact_dir, "aggregate.csv"))


def read_jumps(artifact_dir) -> dict:
    return read_csv_columns(os.path.join(artifact_dir, "jumps.csv"))


def aggregate_observables(aggregate: dict) -> list[str]:
    """Observable names present in an aggregate table (mean_ prefix stripped)."""
    return [name[5:] for name in aggregate if name.startswith("mean_")]


def ensure_dir(path) -> None:
    os.makedirs(path, exist_ok=True)
