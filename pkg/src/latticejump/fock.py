"""Fixed-number Fock bases and sparse second-quantized operators.

Bosonic bases enumerate site occupations at fixed total atom number N;
fermionic bases enumerate spin-1/2 occupations (0/1 per site and spin) at
fixed (N_up, N_down). States are ordered lexicographically over the
occupation vector, fermions with the full spin-up block before the
spin-down block, sites ascending within each block. Fermionic operators
carry the sign of the occupied modes crossed in that ordering.

Sites are 1-indexed in every public signature.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np
import scipy.sparse as sp

from .errors import DimensionCapError

DEFAULT_DIMENSION_CAP = 200_000

_SPINS = ("up", "down")


def _boson_states(L: int, N: int) -> list[tuple[int, ...]]:
    # lexicographic by construction: first site count ascending, recurse
    out: list[tuple[int, ...]] = []

    def rec(prefix: tuple[int, ...], remaining_sites: int, remaining: int):
        if remaining_sites == 1:
            out.append(prefix + (remaining,))
            return
        for n in range(remaining + 1):
            rec(prefix + (n,), remaining_sites - 1, remaining - n)

    rec((), L, N)
    return out


def _fermion_states(L: int, n_up: int, n_down: int) -> list[tuple[int, ...]]:
    def block(n_occ: int) -> list[tuple[int, ...]]:
        states = []
        for occ_sites in combinations(range(L), n_occ):
            v = [0] * L
            for s in occ_sites:
                v[s] = 1
            states.append(tuple(v))
        return sorted(states)

    return sorted(u + d for u in block(n_up) for d in block(n_down))


@dataclass(frozen=True)
class FockBasis:
    """Enumerated occupation basis of one symmetry sector.

    states holds one occupation tuple per basis vector: length L for bosons,
    length 2L for fermions (up block then down block).
    """

    species: str
    L: int
    filling: tuple[int, ...]  # (N,) bosons, (N_up, N_down) fermions
    states: tuple[tuple[int, ...], ...]
    index: dict[tuple[int, ...], int] = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.states)

    @property
    def n_total(self) -> int:
        return sum(self.filling)

    def occupations(self) -> np.ndarray:
        """(dim, L) or (dim, 2L) integer array of occupations."""
        return np.array(self.states, dtype=np.int64)

    def site_numbers(self, site: int, spin: str | None = None) -> np.ndarray:
        """Diagonal of the chosen number operator, as a vector."""
        occ = self.occupations()
        col = _mode_index(self, site, spin)
        if self.species == "fermion" and spin is None:
            return occ[:, col] + occ[:, col + self.L]
        return occ[:, col].copy()


def _mode_index(basis: FockBasis, site: int, spin: str | None) -> int:
    if not 1 <= site <= basis.L:
        raise ValueError(f"site {site} outside 1..{basis.L}")
    if basis.species == "boson":
        if spin is not None:
            raise ValueError("bosonic basis has no spin label")
        return site - 1
    if spin is None:
        return site - 1  # caller handles the up+down sum
    if spin not in _SPINS:
        raise ValueError(f"spin must be 'up'|'down', got {spin!r}")
    return site - 1 + (basis.L if spin == "down" else 0)


def build_basis(
    species: str,
    L: int,
    filling,
    cap: int = DEFAULT_DIMENSION_CAP,
) -> FockBasis:
    """Enumerate one fixed-number sector.

    filling: total N for bosons, (N_up, N_down) for fermions. Raises
    DimensionCapError when the sector dimension exceeds ``cap``.
    """
    if L < 1:
        raise ValueError(f"need at least one site, got L={L}")
    if species == "boson":
        N = int(filling if np.isscalar(filling) else filling[0])
        if N < 0:
            raise ValueError(f"negative atom number N={N}")
        dim = comb(N + L - 1, N)
        if dim > cap:
            raise DimensionCapError(f"dimension {dim} exceeds cap {cap}")
        states = _boson_states(L, N)
        filling_t = (N,)
    elif species == "fermion":
        n_up, n_down = (int(filling[0]), int(filling[1]))
        if not (0 <= n_up <= L and 0 <= n_down <= L):
            raise ValueError(f"fermion numbers ({n_up},{n_down}) must lie in 0..L={L}")
        dim = comb(L, n_up) * comb(L, n_down)
        if dim > cap:
            raise DimensionCapError(f"dimension {dim} exceeds cap {cap}")
        states = _fermion_states(L, n_up, n_down)
        filling_t = (n_up, n_down)
    else:
        raise ValueError(f"species must be 'boson'|'fermion', got {species!r}")
    index = {s: k for k, s in enumerate(states)}
    return FockBasis(species, L, filling_t, tuple(states), index)


class SparseOperator:
    """Sparse matrix in one FockBasis, in canonical compressed-row layout.

    Thin wrapper so operators remember their basis, compose with +, -, @ and
    scalar multiplication, and expose adjoint/expectation/apply.
    """

    def __init__(self, basis: FockBasis, matrix: sp.spmatrix):
        m = sp.csr_matrix(matrix, dtype=np.complex128, copy=True)
        if m.shape != (basis.dim, basis.dim):
            raise ValueError(f"matrix shape {m.shape} does not match dim {basis.dim}")
        m.sum_duplicates()
        m.sort_indices()
        self.basis = basis
        self.matrix = m

    # -- algebra ---------------------------------------------------------

    def _check(self, other: "SparseOperator"):
        if other.basis is not self.basis and other.basis != self.basis:
            raise ValueError("operators live in different bases")

    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        self._check(other)
        return SparseOperator(self.basis, self.matrix + other.matrix)

    def __sub__(self, other: "SparseOperator") -> "SparseOperator":
        self._check(other)
        return SparseOperator(self.basis, self.matrix - other.matrix)

    def __mul__(self, scalar) -> "SparseOperator":
        return SparseOperator(self.basis, self.matrix * scalar)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, SparseOperator):
            self._check(other)
            return SparseOperator(self.basis, self.matrix @ other.matrix)
        return self.matrix @ other

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseOperator):
            return NotImplemented
        a, b = self.matrix, other.matrix
        return (
            a.shape == b.shape
            and np.array_equal(a.indptr, b.indptr)
            and np.array_equal(a.indices, b.indices)
            and np.array_equal(a.data, b.data)
        )

    # -- queries ---------------------------------------------------------

    def adjoint(self) -> "SparseOperator":
        return SparseOperator(self.basis, self.matrix.conj().T)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        d = self.matrix - self.matrix.conj().T
        return abs(d).max() <= tol if d.nnz else True

    def apply(self, psi: np.ndarray) -> np.ndarray:
        return self.matrix @ psi

    def expectation(self, psi: np.ndarray) -> complex:
        """<psi|A|psi> for a (not necessarily normalized) vector."""
        return complex(np.vdot(psi, self.matrix @ psi))

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    @property
    def nnz(self) -> int:
        return self.matrix.nnz


def _diagonal_operator(basis: FockBasis, diag: np.ndarray) -> SparseOperator:
    return SparseOperator(basis, sp.diags(diag.astype(np.complex128), format="csr"))


def number_op(basis: FockBasis, site: int, spin: str | None = None) -> SparseOperator:
    """n_site (bosons), or n_{site,spin} / total rho_site (fermions, spin=None)."""
    return _diagonal_operator(basis, basis.site_numbers(site, spin).astype(float))


def _fermion_sign(occ: list[int], below: int) -> int:
    # parity of occupied modes strictly below `below` in the canonical order
    return -1 if sum(occ[:below]) % 2 else 1


def hop_op(basis: FockBasis, i: int, j: int, spin: str | None = None) -> SparseOperator:
    """Creation at site i, annihilation at site j (b_i^dag b_j / f_i^dag f_j).

    Fermions require an explicit spin; amplitudes carry the crossing sign of
    the canonical mode ordering. i == j reduces to the number operator.
    """
    if basis.species == "fermion" and spin is None:
        raise ValueError("fermionic hop needs spin 'up'|'down'")
    if i == j:
        return number_op(basis, i, spin)
    mi = _mode_index(basis, i, spin)
    mj = _mode_index(basis, j, spin)
    rows, cols, vals = [], [], []
    for k, state in enumerate(basis.states):
        nj = state[mj]
        if nj == 0:
            continue
        if basis.species == "boson":
            ni = state[mi]
            new = list(state)
            new[mj] -= 1
            new[mi] += 1
            amp = np.sqrt(nj * (ni + 1.0))
        else:
            if state[mi] == 1:
                continue  # Pauli blocked
            new = list(state)
            sign = _fermion_sign(new, mj)
            new[mj] = 0
            sign *= _fermion_sign(new, mi)
            new[mi] = 1
            amp = float(sign)
        rows.append(basis.index[tuple(new)])
        cols.append(k)
        vals.append(amp)
    m = sp.csr_matrix((vals, (rows, cols)), shape=(basis.dim, basis.dim), dtype=np.complex128)
    return SparseOperator(basis, m)


def zone_number_diagonal(basis: FockBasis, sites, weights=None) -> np.ndarray:
    """Diagonal of sum_{j in sites} w_j n_j (total over spins for fermions).

    Unweighted zones stay integer counts; weights switch to float/complex."""
    sites = list(sites)
    if len(set(sites)) != len(sites):
        raise ValueError("duplicate sites in zone")
    if weights is None:
        total = np.zeros(basis.dim, dtype=np.int64)
        for s in sites:
            total += basis.site_numbers(s)
        return total
    weights = np.asarray(weights)
    if weights.shape != (len(sites),):
        raise ValueError(f"{weights.size} weights for {len(sites)} sites")
    total = np.zeros(basis.dim, dtype=np.result_type(weights.dtype, np.float64))
    for w, s in zip(weights, sites):
        total = total + w * basis.site_numbers(s)
    return total
