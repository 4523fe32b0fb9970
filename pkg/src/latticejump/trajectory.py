"""Stochastic wave-function evolution under continuous photodetection.

Between detection events the state follows dpsi/dt = -i H_eff psi with
H_eff = H0 - (i/2) sum_k c_k^dag c_k, so its squared norm decays. A jump
fires when the norm reaches a uniform variate r; the channel is drawn with
probability proportional to ||c_k psi||^2, c_k is applied, the state is
renormalized and r is redrawn. Averaging projectors over trajectories
recovers the master-equation density matrix.

Each trajectory owns a counter-based random stream keyed on
(seed, trajectory index), so ensembles are reproducible regardless of
worker count or execution order.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from . import _kernels
from .errors import ConfigError, DimensionCapError, NumericalFailure
from .fock import SparseOperator
from .model import effective_hamiltonian

MASTER_DIMENSION_CAP = 2000

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class EngineConfig:
    """Integration and sampling controls for one run."""

    seed: int
    n_traj: int = 1
    t_final: float = 1.0
    sample_interval: float = 0.1
    dt_initial: float = 1e-3
    dt_max: float = 0.05
    rtol: float = 1e-8
    atol: float = 1e-10
    jump_tol: float = 1e-9
    max_bisect: int = 60
    postselect_no_jump: bool = False
    workers: int | None = None

    def __post_init__(self):
        if not isinstance(self.seed, (int, np.integer)) or isinstance(self.seed, bool):
            raise ConfigError(f"seed must be an integer, got {self.seed!r}")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")
        if self.n_traj < 1:
            raise ConfigError(f"n_traj must be >= 1, got {self.n_traj}")
        if self.t_final <= 0:
            raise ConfigError(f"t_final must be positive, got {self.t_final}")
        if not 0 < self.sample_interval <= self.t_final:
            raise ConfigError("sample_interval must lie in (0, t_final]")
        n = round(self.t_final / self.sample_interval)
        if not np.isclose(n * self.sample_interval, self.t_final, rtol=1e-9, atol=0.0):
            raise ConfigError("t_final must be an integer multiple of sample_interval")
        for name in ("dt_initial", "dt_max", "rtol", "atol", "jump_tol"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.max_bisect < 8:
            raise ConfigError(f"max_bisect must be >= 8, got {self.max_bisect}")
        if self.workers is not None and self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")

    def sample_times(self) -> np.ndarray:
        n = round(self.t_final / self.sample_interval)
        return np.linspace(0.0, self.t_final, n + 1)


@dataclass
class Trajectory:
    """One realization: sampled states, observable series, detection record."""

    traj_id: int
    times: np.ndarray
    states: np.ndarray | None
    series: dict
    jumps: list
    log_weight: np.ndarray | None
    n_steps: int
    n_rejected: int
    max_jump_gap: float


@dataclass
class EnsembleResult:
    times: np.ndarray
    series: dict  # name -> (n_traj, n_samples) per-trajectory values
    jump_log: list  # per trajectory, list of (time, channel label)
    trajectories: list
    density: np.ndarray | None
    engine: EngineConfig
    wall_seconds: float

    def mean(self, name: str) -> np.ndarray:
        return self.series[name].mean(axis=0)

    def sem(self, name: str) -> np.ndarray:
        vals = self.series[name]
        if vals.shape[0] < 2:
            return np.zeros(vals.shape[1])
        return vals.std(axis=0, ddof=1) / np.sqrt(vals.shape[0])

    def jump_counts(self) -> dict:
        counts: dict[str, int] = {}
        for events in self.jump_log:
            for _, label in events:
                counts[label] = counts.get(label, 0) + 1
        return counts


def trajectory_rng(seed: int, traj_id: int) -> np.random.Generator:
    key = np.array([seed & _MASK64, traj_id & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _norm2(y: np.ndarray) -> float:
    return float(np.real(np.vdot(y, y)))


def _operator_matrix(obj):
    if isinstance(obj, SparseOperator):
        return obj.matrix
    if hasattr(obj, "op"):
        return obj.op.matrix
    if hasattr(obj, "matrix"):
        return obj.matrix
    raise ConfigError(f"expected an operator or jump channel, got {type(obj).__name__}")


def _generator(h0, channels):
    h_eff = effective_hamiltonian(h0, channels)
    g = (-1j * h_eff.matrix).tocsr()
    mats = [_operator_matrix(ch).tocsr() for ch in channels]
    labels = [getattr(ch, "label", f"c{k}") for k, ch in enumerate(channels)]
    return g, mats, labels


def _compile_observables(observables) -> dict:
    compiled = {}
    for name, ob in (observables or {}).items():
        if isinstance(ob, SparseOperator):
            m = ob.matrix.tocsr()

            def expect(phi, m=m):
                return float(np.vdot(phi, m @ phi).real)

            compiled[name] = expect
        elif callable(ob):
            compiled[name] = ob
        else:
            raise ConfigError(f"observable {name!r} must be an operator or a callable")
    return compiled


def _normalize_initial(psi0, dim) -> np.ndarray:
    psi = np.ascontiguousarray(psi0, dtype=np.complex128).ravel()
    if psi.size != dim:
        raise ConfigError(f"initial state has {psi.size} entries, basis has {dim}")
    nrm = np.linalg.norm(psi)
    if nrm == 0 or not np.isfinite(nrm):
        raise ConfigError("initial state must be a nonzero finite vector")
    return psi / nrm


def _evolve_single(g, jump_mats, labels, psi0, engine, traj_id, observables, want_states):
    rng = trajectory_rng(engine.seed, traj_id)
    times = engine.sample_times()
    dim = g.shape[0]
    psi = _normalize_initial(psi0, dim)

    states = np.empty((times.size, dim), dtype=np.complex128) if want_states else None
    series = {name: np.empty(times.size) for name in observables}
    postselect = engine.postselect_no_jump
    log_weight = np.zeros(times.size) if postselect else None

    jumps: list[tuple[float, str]] = []
    dt = engine.dt_initial
    n_steps = n_rejected = 0
    max_gap = 0.0
    log_w = 0.0
    r = -1.0 if postselect else float(rng.random())
    t = 0.0

    def record(i):
        nrm = np.sqrt(_norm2(psi))
        phi = psi / nrm
        if want_states:
            states[i] = phi
        for name, fn in observables.items():
            series[name][i] = fn(phi)

    record(0)
    for i in range(1, times.size):
        target = float(times[i])
        while True:
            t, crossed, dt, st, rej, status, gap = _kernels.propagate(
                g, psi, t, target, r, dt, engine.dt_max,
                engine.rtol, engine.atol, engine.jump_tol, engine.max_bisect,
            )
            n_steps += st
            n_rejected += rej
            if status == 1:
                raise NumericalFailure(
                    f"step size underflow at t={t:.6g} in trajectory {traj_id}"
                )
            if status == 2:
                raise NumericalFailure(
                    f"squared norm increased at t={t:.6g}; generator is not dissipative"
                )
            if not crossed:
                break
            max_gap = max(max_gap, gap)
            weights = np.array([_norm2(m @ psi) for m in jump_mats])
            total = weights.sum()
            if not np.isfinite(total) or total <= 0.0:
                raise NumericalFailure(
                    f"detection fired at t={t:.6g} but every channel has zero weight"
                )
            u = rng.random() * total
            k = min(int(np.searchsorted(np.cumsum(weights), u, side="right")),
                    len(jump_mats) - 1)
            phi = jump_mats[k] @ psi
            psi = np.ascontiguousarray(phi / np.linalg.norm(phi))
            jumps.append((t, labels[k]))
            r = float(rng.random())
        if postselect:
            nrm2 = _norm2(psi)
            log_w += float(np.log(nrm2))
            log_weight[i] = log_w
            psi /= np.sqrt(nrm2)
        record(i)

    return Trajectory(
        traj_id=traj_id,
        times=times,
        states=states,
        series=series,
        jumps=jumps,
        log_weight=log_weight,
        n_steps=n_steps,
        n_rejected=n_rejected,
        max_jump_gap=max_gap,
    )


def run_trajectory(h0, channels, psi0, engine: EngineConfig, traj_id: int = 0,
                   observables=None) -> Trajectory:
    """Evolve a single realization, keeping the sampled states."""
    g, mats, labels = _generator(h0, channels)
    obs = _compile_observables(observables)
    return _evolve_single(g, mats, labels, psi0, engine, traj_id, obs, want_states=True)


def _resolve_workers(engine: EngineConfig) -> int:
    if engine.workers is not None:
        return engine.workers
    env = os.environ.get("LATTICEJUMP_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"LATTICEJUMP_WORKERS must be an integer, got {env!r}") from exc
    if _kernels.backend_name() == "compiled":
        # compiled kernel drops the GIL, so threads scale
        return min(os.cpu_count() or 1, 8)
    return 1


def run_ensemble(h0, channels, psi0, engine: EngineConfig, observables=None,
                 keep_states: bool = False, accumulate_density: bool = False) -> EnsembleResult:
    """Run engine.n_traj independent trajectories and collect their records.

    accumulate_density sums |psi><psi| at each sample time into the ensemble
    density matrix (normalized by trajectory count). States are kept on the
    returned trajectories only when keep_states is set.
    """
    g, mats, labels = _generator(h0, channels)
    obs = _compile_observables(observables)
    want_states = keep_states or accumulate_density
    times = engine.sample_times()
    dim = g.shape[0]

    def one(i):
        return _evolve_single(g, mats, labels, psi0, engine, i, obs, want_states)

    started = time.perf_counter()
    workers = min(_resolve_workers(engine), engine.n_traj)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = pool.map(one, range(engine.n_traj))
            trajectories = []
            density = np.zeros((times.size, dim, dim), dtype=np.complex128) \
                if accumulate_density else None
            for traj in runs:
                if accumulate_density:
                    density += np.einsum("sd,se->sde", traj.states, traj.states.conj())
                if not keep_states:
                    traj.states = None
                trajectories.append(traj)
    else:
        trajectories = []
        density = np.zeros((times.size, dim, dim), dtype=np.complex128) \
            if accumulate_density else None
        for i in range(engine.n_traj):
            traj = one(i)
            if accumulate_density:
                density += np.einsum("sd,se->sde", traj.states, traj.states.conj())
            if not keep_states:
                traj.states = None
            trajectories.append(traj)
    wall = time.perf_counter() - started

    if density is not None:
        density /= engine.n_traj
    series = {
        name: np.stack([traj.series[name] for traj in trajectories])
        for name in obs
    }
    return EnsembleResult(
        times=times,
        series=series,
        jump_log=[traj.jumps for traj in trajectories],
        trajectories=trajectories,
        density=density,
        engine=engine,
        wall_seconds=wall,
    )


def evolve_nonhermitian(h_eff, psi0, t_final: float, *, t0: float = 0.0,
                        rtol: float = 1e-8, atol: float = 1e-10,
                        dt_max: float = 0.05, dt_initial: float = 1e-3) -> np.ndarray:
    """Integrate dpsi/dt = -i H_eff psi without detection; the returned state
    is unnormalized, so its squared norm is the no-jump survival probability."""
    if t_final < t0:
        raise ConfigError("t_final must be >= t0")
    mat = _operator_matrix(h_eff)
    g = (-1j * mat).tocsr()
    psi = _normalize_initial(psi0, g.shape[0]) * np.linalg.norm(np.ravel(psi0))
    if t_final == t0:
        return psi
    t, _, _, _, _, status, _ = _kernels.propagate(
        g, psi, t0, t_final, -1.0, dt_initial, dt_max, rtol, atol, 1e-9, 60
    )
    if status == 1:
        raise NumericalFailure(f"step size underflow at t={t:.6g}")
    if status == 2:
        raise NumericalFailure(f"squared norm increased at t={t:.6g}; "
                               "evolution is not dissipative")
    return psi


def lindblad_evolve(h0, channels, state0, times, *, rtol: float = 1e-8,
                    atol: float = 1e-10, dim_cap: int = MASTER_DIMENSION_CAP) -> np.ndarray:
    """Master-equation reference: integrate the density matrix over the given
    times (the first entry is the initial time). state0 may be a pure-state
    vector or a density matrix. Returns an array of shape (len(times), dim, dim)."""
    h = _operator_matrix(h0)
    dim = h.shape[0]
    if dim > dim_cap:
        raise DimensionCapError(
            f"master equation needs a {dim}x{dim} density matrix; cap is {dim_cap}"
        )
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2:
        raise ConfigError("need at least two time points")
    if np.any(np.diff(times) <= 0):
        raise ConfigError("times must be strictly increasing")

    state0 = np.asarray(state0, dtype=complex)
    if state0.ndim == 1:
        if state0.size != dim:
            raise ConfigError(f"state has {state0.size} entries, basis has {dim}")
        nrm = np.linalg.norm(state0)
        if nrm == 0:
            raise ConfigError("initial state must be nonzero")
        v = state0 / nrm
        rho0 = np.outer(v, v.conj())
    elif state0.shape == (dim, dim):
        rho0 = state0
    else:
        raise ConfigError(f"initial state shape {state0.shape} does not match dim {dim}")

    hm = h.toarray() if hasattr(h, "toarray") else np.asarray(h)
    cs = [_operator_matrix(ch).toarray() for ch in channels]
    cds = [c.conj().T for c in cs]
    cdc = sum((cd @ c for c, cd in zip(cs, cds)), np.zeros((dim, dim), dtype=complex))

    def rhs(_t, y):
        rho = y.reshape(dim, dim)
        out = -1j * (hm @ rho - rho @ hm) - 0.5 * (cdc @ rho + rho @ cdc)
        for c, cd in zip(cs, cds):
            out += c @ rho @ cd
        return out.ravel()

    sol = solve_ivp(rhs, (times[0], times[-1]), rho0.ravel(), t_eval=times,
                    method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise NumericalFailure(f"master-equation integration failed: {sol.message}")
    return np.ascontiguousarray(sol.y.T).reshape(times.size, dim, dim)
