"""Measurement-side quantities: mode populations, correlations, entropies.

Sites are grouped into spatial modes (odd/even, every R-th site, or custom
assignments); the detection signal resolves mode populations, so most
quantities here are functions of the group number operators. Entanglement
entropy is computed from the Schmidt decomposition of a site bipartition;
for fermions the amplitude signs from reordering creation operators across
the cut are included, since dropping them changes the singular values of
any state that is not a single Slater determinant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import svdvals

from .errors import ConfigError
from .fock import FockBasis, SparseOperator, zone_number_diagonal

_EIG_FLOOR = 1e-14


@dataclass(frozen=True)
class ModePartition:
    """Assignment of each site (1-based) to a mode group (0-based)."""

    L: int
    assignments: tuple

    def __post_init__(self):
        if len(self.assignments) != self.L:
            raise ConfigError(
                f"{len(self.assignments)} assignments for a chain of {self.L} sites"
            )
        groups = set(self.assignments)
        if min(groups) != 0 or groups != set(range(len(groups))):
            raise ConfigError("group labels must be 0..n_groups-1 with no gaps")

    @classmethod
    def odd_even(cls, L: int) -> "ModePartition":
        return cls(L, tuple(0 if j % 2 == 1 else 1 for j in range(1, L + 1)))

    @classmethod
    def rmode(cls, L: int, R: int) -> "ModePartition":
        if R < 2:
            raise ConfigError(f"mode count R must be >= 2, got {R}")
        return cls(L, tuple((j - 1) % R for j in range(1, L + 1)))

    @classmethod
    def custom(cls, assignments) -> "ModePartition":
        return cls(len(assignments), tuple(int(a) for a in assignments))

    @property
    def n_groups(self) -> int:
        return max(self.assignments) + 1

    def group_sites(self, group: int) -> tuple:
        if not 0 <= group < self.n_groups:
            raise ConfigError(f"group {group} outside 0..{self.n_groups - 1}")
        return tuple(j for j in range(1, self.L + 1) if self.assignments[j - 1] == group)


def _site_totals(basis: FockBasis) -> np.ndarray:
    """Per-state site occupations, spin-summed for fermions. Shape (dim, L)."""
    occ = basis.occupations()
    if basis.species == "fermion":
        return occ[:, : basis.L] + occ[:, basis.L :]
    return occ


def group_number_values(basis: FockBasis, partition: ModePartition, group: int) -> np.ndarray:
    """Diagonal of the group number operator, one integer per basis state."""
    if partition.L != basis.L:
        raise ConfigError(f"partition is for {partition.L} sites, basis has {basis.L}")
    sites = partition.group_sites(group)
    totals = _site_totals(basis)
    return totals[:, [j - 1 for j in sites]].sum(axis=1)


def mode_number_distribution(
    psi: np.ndarray, basis: FockBasis, partition: ModePartition, group: int
) -> np.ndarray:
    """P(N_group = n) for n = 0..N_total."""
    values = group_number_values(basis, partition, group)
    probs = np.abs(np.asarray(psi, dtype=complex)) ** 2
    if probs.size != basis.dim:
        raise ConfigError(f"state has {probs.size} entries, basis has {basis.dim}")
    total = probs.sum()
    if total <= 0:
        raise ConfigError("state has zero norm")
    return np.bincount(values, weights=probs, minlength=basis.n_total + 1) / total


def distribution_series(
    states: np.ndarray, basis: FockBasis, partition: ModePartition, group: int
) -> np.ndarray:
    """Stack of mode_number_distribution rows, one per sampled state."""
    return np.stack(
        [mode_number_distribution(s, basis, partition, group) for s in states]
    )


def imbalance_op(basis: FockBasis) -> SparseOperator:
    """(N_odd - N_even) / N as a diagonal operator."""
    part = ModePartition.odd_even(basis.L)
    diff = group_number_values(basis, part, 0) - group_number_values(basis, part, 1)
    return SparseOperator(basis, sp.diags(diff / basis.n_total, format="csr"))


def imbalance(psi: np.ndarray, basis: FockBasis) -> float:
    return imbalance_op(basis).expectation(np.asarray(psi, dtype=complex)).real


def doublon_number_op(basis: FockBasis) -> SparseOperator:
    """Number of doubly occupied sites, sum_j n_j_up n_j_down."""
    if basis.species != "fermion":
        raise ConfigError("doublon count is fermionic")
    occ = basis.occupations()
    diag = (occ[:, : basis.L] * occ[:, basis.L :]).sum(axis=1).astype(float)
    return SparseOperator(basis, sp.diags(diag, format="csr"))


def variance_of(op: SparseOperator):
    """Callable phi -> <op^2> - <op>^2 for a Hermitian operator, suitable as
    an engine observable."""
    if not op.is_hermitian():
        raise ConfigError("variance needs a Hermitian operator")
    m = op.matrix.tocsr()

    def fn(phi: np.ndarray) -> float:
        mp = m @ phi
        ex = np.vdot(phi, mp).real
        ex2 = np.vdot(mp, mp).real
        return ex2 - ex * ex

    return fn


def number_correlations(
    psi: np.ndarray,
    basis: FockBasis,
    zone_a,
    zone_b,
    weights_a=None,
    weights_b=None,
) -> float:
    """Covariance <N_A N_B> - <N_A><N_B> of two disjoint zone number operators,
    optionally with per-site weights."""
    zone_a, zone_b = tuple(zone_a), tuple(zone_b)
    if set(zone_a) & set(zone_b):
        raise ConfigError("zones must be disjoint")
    va = np.asarray(zone_number_diagonal(basis, zone_a, weights_a))
    vb = np.asarray(zone_number_diagonal(basis, zone_b, weights_b))
    probs = np.abs(np.asarray(psi, dtype=complex)) ** 2
    probs = probs / probs.sum()
    val = (probs * va * vb).sum() - (probs * va).sum() * (probs * vb).sum()
    if np.iscomplexobj(va) or np.iscomplexobj(vb):
        return complex(val)
    return float(val)


# -- bipartite entanglement ----------------------------------------------------


def _bipartition_maps(basis: FockBasis, sites_a):
    """Index maps for reshaping a sector state into an (A, B) matrix.

    Returns (rows, cols, signs, n_a, n_b): basis state i contributes
    signs[i] * psi[i] at matrix entry (rows[i], cols[i]).
    """
    sites_a = tuple(sorted(set(sites_a)))
    if not sites_a or any(not 1 <= s <= basis.L for s in sites_a):
        raise ConfigError(f"subsystem sites must lie in 1..{basis.L}")
    if len(sites_a) == basis.L:
        raise ConfigError("subsystem must be a proper subset of the chain")

    if basis.species == "fermion":
        modes_a = [s - 1 for s in sites_a] + [basis.L + s - 1 for s in sites_a]
        modes_a = sorted(modes_a)
    else:
        modes_a = [s - 1 for s in sites_a]
    n_modes = len(basis.states[0])
    modes_b = [m for m in range(n_modes) if m not in set(modes_a)]

    a_index: dict[tuple, int] = {}
    b_index: dict[tuple, int] = {}
    rows = np.empty(basis.dim, dtype=np.intp)
    cols = np.empty(basis.dim, dtype=np.intp)
    signs = np.ones(basis.dim)
    fermion = basis.species == "fermion"
    for i, occ in enumerate(basis.states):
        key_a = tuple(occ[m] for m in modes_a)
        key_b = tuple(occ[m] for m in modes_b)
        rows[i] = a_index.setdefault(key_a, len(a_index))
        cols[i] = b_index.setdefault(key_b, len(b_index))
        if fermion:
            # parity of moving every occupied A mode left past the occupied
            # B modes that precede it in the global mode order
            occ_a = [m for m in modes_a if occ[m]]
            occ_b = [m for m in modes_b if occ[m]]
            inversions = sum(sum(1 for b in occ_b if b < a) for a in occ_a)
            signs[i] = -1.0 if inversions % 2 else 1.0
    return rows, cols, signs, len(a_index), len(b_index)


def _schmidt_entropy(psi, rows, cols, signs, n_a, n_b) -> float:
    psi = np.asarray(psi, dtype=complex)
    m = np.zeros((n_a, n_b), dtype=complex)
    m[rows, cols] = signs * psi
    p = svdvals(m) ** 2
    p = p[p > _EIG_FLOOR]
    p = p / p.sum()
    return float(-(p * np.log(p)).sum())


def entanglement_entropy(psi: np.ndarray, basis: FockBasis, sites_a) -> float:
    """Von Neumann entropy of the reduced state on the given sites (nats)."""
    maps = _bipartition_maps(basis, sites_a)
    return _schmidt_entropy(psi, *maps)


def entropy_series(states: np.ndarray, basis: FockBasis, sites_a) -> np.ndarray:
    maps = _bipartition_maps(basis, sites_a)
    return np.array([_schmidt_entropy(s, *maps) for s in states])


def entropy_observable(basis: FockBasis, sites_a):
    """Engine observable: phi -> bipartite entropy."""
    maps = _bipartition_maps(basis, sites_a)

    def fn(phi: np.ndarray) -> float:
        return _schmidt_entropy(phi, *maps)

    return fn


def subsystem_entropy_from_density(rho: np.ndarray, basis: FockBasis, sites_a) -> float:
    """Von Neumann entropy of the reduced state on the given sites, computed
    from a full (possibly mixed) density matrix."""
    rows, cols, signs, n_a, _ = _bipartition_maps(basis, sites_a)
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (basis.dim, basis.dim):
        raise ConfigError(f"density matrix shape {rho.shape} does not match dim {basis.dim}")
    rho_a = np.zeros((n_a, n_a), dtype=complex)
    order = np.argsort(cols, kind="stable")
    bounds = np.searchsorted(cols[order], np.arange(cols.max() + 2))
    for b in range(bounds.size - 1):
        idx = order[bounds[b]:bounds[b + 1]]
        if idx.size == 0:
            continue
        sgn = signs[idx]
        block = (sgn[:, None] * sgn[None, :]) * rho[np.ix_(idx, idx)]
        np.add.at(rho_a, (rows[idx][:, None], rows[idx][None, :]), block)
    rho_a = 0.5 * (rho_a + rho_a.conj().T)
    p = np.linalg.eigvalsh(rho_a)
    p = p[p > _EIG_FLOOR]
    p = p / p.sum()
    return float(-(p * np.log(p)).sum())


# -- ensemble reductions -------------------------------------------------------


def traj_avg_variance(trajectories, op: SparseOperator):
    """Trajectory average of the in-state variance of op: (mean, sem) arrays
    over the common sample grid. Needs trajectories stored with states."""
    fn = variance_of(op)
    rows = []
    for tr in trajectories:
        if tr.states is None:
            raise ConfigError("trajectory was run without keep_states")
        rows.append([fn(s) for s in tr.states])
    vals = np.asarray(rows, dtype=float)
    mean = vals.mean(axis=0)
    if vals.shape[0] < 2:
        return mean, np.zeros_like(mean)
    return mean, vals.std(axis=0, ddof=1) / np.sqrt(vals.shape[0])


def ensemble_density_matrices(trajectories) -> np.ndarray:
    """Average |psi><psi| over trajectories at each sample time."""
    if not trajectories:
        raise ConfigError("no trajectories given")
    acc = None
    for tr in trajectories:
        if tr.states is None:
            raise ConfigError("trajectory was run without keep_states")
        term = np.einsum("sd,se->sde", tr.states, tr.states.conj())
        acc = term if acc is None else acc + term
    return acc / len(trajectories)


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """(1/2) tr |rho - sigma| for Hermitian matrices."""
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != sigma.shape or rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ConfigError(f"need equal square matrices, got {rho.shape} and {sigma.shape}")
    diff = rho - sigma
    diff = 0.5 * (diff + diff.conj().T)
    return float(0.5 * np.abs(np.linalg.eigvalsh(diff)).sum())
