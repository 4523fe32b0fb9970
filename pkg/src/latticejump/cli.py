"""Command-line surface: simulate, master, compare, analyze.

Exit codes: 0 success, 1 comparison outside tolerance, 2 configuration
error, 3 dimension cap exceeded, 4 numerical failure. Worker count for
trajectory fan-out comes from the config or the LATTICEJUMP_WORKERS
environment variable.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from .config import (
    DENSITY_MATRIX_CAP,
    RunConfig,
    build_operators,
    compile_columns,
    initial_state,
    load_config,
)
from .errors import ConfigError, DimensionCapError, NumericalFailure
from .runio import (
    aggregate_observables,
    ensure_dir,
    read_aggregate,
    write_aggregate_csv,
    write_config_json,
    write_density_npz,
    write_jumps_csv,
    write_manifest,
    write_series_csv,
    write_trajectories,
)
from .trajectory import lindblad_evolve, run_ensemble


def _prepare(cfg: RunConfig):
    basis, h0, chans = build_operators(cfg)
    psi0 = initial_state(cfg, basis, h0)
    cols = compile_columns(cfg, basis)
    if cfg.write_density and basis.dim > DENSITY_MATRIX_CAP:
        raise ConfigError(
            f"output.density_matrix needs dimension <= {DENSITY_MATRIX_CAP}, "
            f"got {basis.dim}"
        )
    return basis, h0, chans, psi0, cols


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    basis, h0, chans, psi0, cols = _prepare(cfg)
    observables = {c.name: c.from_state for c in cols}
    result = run_ensemble(
        h0, chans, psi0, cfg.engine, observables=observables,
        keep_states=False, accumulate_density=cfg.write_density,
    )
    series = dict(result.series)
    if cfg.engine.postselect_no_jump:
        series["log_weight"] = np.stack([tr.log_weight for tr in result.trajectories])

    ensure_dir(cfg.out_dir)
    write_config_json(cfg.out_dir, cfg.canonical)
    write_trajectories(cfg.out_dir, result.times, series, range(cfg.engine.n_traj))
    write_jumps_csv(cfg.out_dir, result.jump_log)
    means = {name: vals.mean(axis=0) for name, vals in series.items()}
    sems = {name: result.sem(name) if name in result.series
            else np.zeros(result.times.size) for name in series}
    write_aggregate_csv(cfg.out_dir, result.times, means, sems)
    counts = result.jump_counts()
    write_manifest(cfg.out_dir, cfg.config_hash(), cfg.engine.seed,
                   cfg.engine.n_traj, counts, result.wall_seconds)
    if cfg.write_density and result.density is not None:
        write_density_npz(cfg.out_dir, result.times, result.density)
    total = sum(counts.values())
    print(f"wrote {cfg.engine.n_traj} trajectories to {cfg.out_dir} "
          f"({result.wall_seconds:.2f}s, {total} jumps)")
    return 0


def cmd_master(args) -> int:
    cfg = load_config(args.config)
    basis, h0, chans, psi0, cols = _prepare(cfg)
    times = cfg.engine.sample_times()
    start = time.perf_counter()
    rhos = lindblad_evolve(h0, chans, psi0, times,
                           rtol=cfg.engine.rtol, atol=cfg.engine.atol)
    wall = time.perf_counter() - start
    columns = {c.name: np.array([c.from_density(r) for r in rhos]) for c in cols}

    ensure_dir(cfg.out_dir)
    write_config_json(cfg.out_dir, cfg.canonical)
    write_series_csv(f"{cfg.out_dir}/master.csv", times, "master", columns)
    zeros = {name: np.zeros(times.size) for name in columns}
    write_aggregate_csv(cfg.out_dir, times, columns, zeros)
    write_manifest(cfg.out_dir, cfg.config_hash(), cfg.engine.seed, 0, {}, wall)
    if cfg.write_density:
        write_density_npz(cfg.out_dir, times, rhos)
    print(f"wrote master-equation series to {cfg.out_dir} ({wall:.2f}s)")
    return 0


def _parse_tol(text: str) -> dict:
    """'default=0.05,var_d=0.1' -> {'default': 0.05, 'var_d': 0.1}"""
    out = {}
    for piece in text.split(","):
        piece = piece.strip()
        if not piece:
            continue
        if "=" not in piece:
            raise ConfigError(f"--tol entry {piece!r} is not name=value")
        name, _, value = piece.partition("=")
        try:
            out[name.strip()] = float(value)
        except ValueError as exc:
            raise ConfigError(f"--tol {piece!r}: {value!r} is not a number") from exc
    return out


def cmd_compare(args) -> int:
    tol = _parse_tol(args.tol) if args.tol else {}
    default_tol = tol.pop("default", 1e-12)
    agg_a = read_aggregate(args.dir_a)
    agg_b = read_aggregate(args.dir_b)
    if not np.array_equal(agg_a["time"], agg_b["time"]):
        raise ConfigError(
            f"time grids differ: {args.dir_a} has {agg_a['time'].size} points "
            f"over [{agg_a['time'][0]:g}, {agg_a['time'][-1]:g}], {args.dir_b} "
            f"has {agg_b['time'].size} over [{agg_b['time'][0]:g}, {agg_b['time'][-1]:g}]"
        )
    names_a = set(aggregate_observables(agg_a))
    names_b = set(aggregate_observables(agg_b))
    if names_a != names_b:
        raise ConfigError(
            f"column sets differ: only in {args.dir_a}: {sorted(names_a - names_b)}; "
            f"only in {args.dir_b}: {sorted(names_b - names_a)}"
        )
    unknown = sorted(set(tol) - names_a)
    if unknown:
        raise ConfigError(f"--tol names not in the data: {unknown}; "
                          f"columns are {sorted(names_a)}")

    report: dict = {
        "dir_a": args.dir_a, "dir_b": args.dir_b,
        "n_times": int(agg_a["time"].size), "columns": {}, "pass": True,
    }
    for name in sorted(names_a):
        dev = np.abs(agg_a[f"mean_{name}"] - agg_b[f"mean_{name}"])
        bound = tol.get(name, default_tol)
        ok = bool(dev.max() <= bound)
        report["columns"][name] = {
            "max_dev": float(dev.max()),
            "mean_dev": float(dev.mean()),
            "tol": bound,
            "pass": ok,
        }
        report["pass"] = report["pass"] and ok
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    return 0 if report["pass"] else 1


def cmd_analyze(args) -> int:
    agg = read_aggregate(args.dir)
    names = aggregate_observables(agg)
    if args.observable not in names:
        raise ConfigError(
            f"observable {args.observable!r} not in {args.dir}; "
            f"available: {', '.join(sorted(names))}"
        )
    t = agg["time"]
    mean = agg[f"mean_{args.observable}"]
    sem = agg[f"sem_{args.observable}"]
    imin, imax = int(np.argmin(mean)), int(np.argmax(mean))
    print(f"{args.observable}: {t.size} samples over t = [{t[0]:g}, {t[-1]:g}]")
    print(f"  initial  {mean[0]:.6g} +- {sem[0]:.2g}")
    print(f"  final    {mean[-1]:.6g} +- {sem[-1]:.2g}")
    print(f"  min      {mean[imin]:.6g} at t = {t[imin]:g}")
    print(f"  max      {mean[imax]:.6g} at t = {t[imax]:g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latticejump",
        description="Quantum-trajectory simulator for monitored Hubbard chains",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run trajectories from a JSON config")
    p_sim.add_argument("config", help="path to the run configuration")
    p_sim.set_defaults(fn=cmd_simulate)

    p_master = sub.add_parser("master", help="integrate the master equation instead")
    p_master.add_argument("config", help="path to the run configuration")
    p_master.set_defaults(fn=cmd_master)

    p_cmp = sub.add_parser("compare", help="compare two artifact directories")
    p_cmp.add_argument("dir_a")
    p_cmp.add_argument("dir_b")
    p_cmp.add_argument("--tol", default="",
                       help="comma list name=value; 'default' sets the fallback")
    p_cmp.add_argument("--out", default="", help="also write the JSON report here")
    p_cmp.set_defaults(fn=cmd_compare)

    p_an = sub.add_parser("analyze", help="summarize one observable of an artifact")
    p_an.add_argument("dir")
    p_an.add_argument("--observable", required=True)
    p_an.set_defaults(fn=cmd_analyze)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DimensionCapError as exc:
        print(f"dimension cap exceeded: {exc}", file=sys.stderr)
        return 3
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
