"""Time the pure-numpy propagation kernel against the compiled one.

Runs the same adaptive integration workloads through both backends and
reports per-workload wall time, speedup, and the largest state deviation
between the two results. A full trajectory-engine comparison (backend
chosen by LATTICEJUMP_PURE at import time) is run in subprocesses so both
paths go through the public entry point.

Usage: python benchmarks/bench_kernels.py [--repeat N] [--skip-engine]
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from latticejump._kernels import available_backends, get_backend
from latticejump.model import LatticeSpec, effective_hamiltonian, hamiltonian
from latticejump.probe import ProbeGeometry, build_channels


def workloads():
    cases = [
        ("boson L=4 N=2", LatticeSpec("boson", 4, 2, J=1.0, U=1.0), 20.0),
        ("boson L=6 N=6", LatticeSpec("boson", 6, 6, J=1.0, U=1.0), 5.0),
        ("fermion L=6 N=(3,3)", LatticeSpec("fermion", 6, (3, 3), J=1.0, U=4.0), 5.0),
    ]
    rng = np.random.default_rng(2024)
    for label, spec, t_target in cases:
        basis = spec.build_basis()
        h0 = hamiltonian(basis, spec)
        which = ["d"] if spec.species == "boson" else ["dx"]
        geom = (ProbeGeometry.odd_sites() if spec.species == "boson"
                else ProbeGeometry.fermion_dual([1, 0, 1, 0, 1, 0]))
        channels = build_channels(basis, geom, which, gamma=1.0)
        g = (-1j * effective_hamiltonian(h0, channels).matrix).tocsr()
        psi = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
        psi /= np.linalg.norm(psi)
        yield f"{label} (dim {basis.dim})", g, psi, t_target


def run_backend(backend, g, psi0, t_target):
    psi = psi0.copy()
    t = 0.0
    dt = 1e-3
    crossings = 0
    rng = np.random.default_rng(7)
    threshold = float(rng.uniform(0.1, 0.9))
    steps = 0
    while t < t_target:
        t, crossed, dt, n_steps, _, status, _ = backend.propagate(
            g, psi, t, t_target, threshold, dt, 0.5, 1e-8, 1e-10, 1e-10, 80
        )
        steps += n_steps
        if status != 0:
            raise RuntimeError(f"kernel status {status}")
        if crossed:
            crossings += 1
            psi /= np.linalg.norm(psi)
            threshold = float(rng.uniform(0.1, 0.9))
    return psi, steps, crossings


def bench_kernels(repeat):
    names = available_backends()
    print(f"backends: {', '.join(names)}")
    if "compiled" not in names:
        print("compiled extension not importable; timing the fallback only")
    header = f"{'workload':28s} " + "".join(f"{n:>12s}" for n in names)
    print(header + f"{'speedup':>10s}{'max |dpsi|':>12s}")
    for label, g, psi0, t_target in workloads():
        times = {}
        states = {}
        for name in names:
            backend = get_backend(name)
            best = np.inf
            for _ in range(repeat):
                start = time.perf_counter()
                psi, steps, crossings = run_backend(backend, g, psi0, t_target)
                best = min(best, time.perf_counter() - start)
            times[name] = best
            states[name] = psi
        cols = "".join(f"{times[n] * 1e3:10.2f} ms" for n in names)
        if len(names) == 2:
            speedup = times["pure"] / times["compiled"]
            dev = float(np.abs(states["pure"] - states["compiled"]).max())
            print(f"{label:28s} {cols}{speedup:10.2f}{dev:12.2e}")
        else:
            print(f"{label:28s} {cols}")


ENGINE_SNIPPET = """
import json, time
from latticejump import (EngineConfig, LatticeSpec, ProbeGeometry,
                         build_channels, ground_state, hamiltonian, run_ensemble)
from latticejump._kernels import backend_name

spec = LatticeSpec("boson", 6, 6, J=1.0, U=1.0)
basis = spec.build_basis()
h0 = hamiltonian(basis, spec)
channels = build_channels(basis, ProbeGeometry.odd_sites(), ["d"], gamma=1.0)
_, psi0 = ground_state(h0)
eng = EngineConfig(seed=11, n_traj=8, t_final=10.0, sample_interval=0.5)
start = time.perf_counter()
result = run_ensemble(h0, channels, psi0, eng)
elapsed = time.perf_counter() - start
jumps = sorted(result.jump_counts().items())
print(json.dumps({"backend": backend_name(), "seconds": elapsed, "jumps": jumps}))
"""


def bench_engine():
    print("\ntrajectory engine, boson L=6 N=6, 8 trajectories to t=10:")
    rows = []
    for pure in ("0", "1"):
        env = dict(os.environ, LATTICEJUMP_PURE=pure)
        out = subprocess.run(
            [sys.executable, "-c", ENGINE_SNIPPET],
            capture_output=True, text=True, env=env, check=True,
        )
        rows.append(json.loads(out.stdout.strip().splitlines()[-1]))
    for row in rows:
        print(f"  {row['backend']:>8s}: {row['seconds']:.2f} s")
    if rows[0]["jumps"] != rows[1]["jumps"]:
        raise SystemExit("backends disagree on the jump record")
    print(f"  jump records identical: {dict(map(tuple, rows[0]['jumps']))}")
    print(f"  speedup: {rows[1]['seconds'] / rows[0]['seconds']:.2f}x")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3,
                        help="timing repetitions per workload (best is kept)")
    parser.add_argument("--skip-engine", action="store_true",
                        help="skip the subprocess engine comparison")
    args = parser.parse_args()
    bench_kernels(args.repeat)
    if not args.skip_engine:
        bench_engine()


if __name__ == "__main__":
    main()
