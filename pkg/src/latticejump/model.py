"""Hubbard Hamiltonians on 1D chains and the non-Hermitian effective form.

Units: hbar = 1, energies in units of the tunneling amplitude J unless the
caller chooses otherwise. The fermionic interaction is written
``-U * sum_i n_up n_down`` so positive U attracts (pairs), negative U
repels; the bosonic one is the usual ``+U/2 * sum_i n(n-1)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConfigError
from .fock import FockBasis, SparseOperator, build_basis, hop_op, number_op

BOUNDARIES = ("open", "periodic")


@dataclass(frozen=True)
class LatticeSpec:
    """Chain geometry and couplings for one symmetry sector."""

    species: str
    L: int
    filling: tuple[int, ...]
    J: float = 1.0
    U: float = 0.0
    boundary: str = "open"

    def __post_init__(self):
        if self.boundary not in BOUNDARIES:
            raise ConfigError(f"boundary must be one of {BOUNDARIES}, got {self.boundary!r}")

    def build_basis(self, cap: int | None = None) -> FockBasis:
        kwargs = {} if cap is None else {"cap": cap}
        return build_basis(self.species, self.L, self.filling, **kwargs)


def neighbor_pairs(L: int, boundary: str) -> list[tuple[int, int]]:
    """Unordered nearest-neighbor pairs (1-indexed)."""
    pairs = [(i, i + 1) for i in range(1, L)]
    if boundary == "periodic" and L > 2:
        pairs.append((L, 1))
    return pairs


def bose_hubbard(basis: FockBasis, spec: LatticeSpec) -> SparseOperator:
    """-J sum_<i,j> (b_i^dag b_j + b_j^dag b_i) + U/2 sum_i n_i(n_i - 1)."""
    if basis.species != "boson":
        raise ConfigError("bose_hubbard needs a bosonic basis")
    occ = basis.occupations().astype(float)
    diag = 0.5 * spec.U * (occ * (occ - 1.0)).sum(axis=1)
    h = sp.diags(diag.astype(complex), format="csr")
    for i, j in neighbor_pairs(spec.L, spec.boundary):
        hop = hop_op(basis, i, j)
        h = h - spec.J * (hop.matrix + hop.matrix.conj().T)
    return SparseOperator(basis, h)


def fermi_hubbard(basis: FockBasis, spec: LatticeSpec) -> SparseOperator:
    """-J sum_sigma sum_<i,j> (f_i^dag f_j + h.c.) - U sum_i n_up n_down."""
    if basis.species != "fermion":
        raise ConfigError("fermi_hubbard needs a fermionic basis")
    occ = basis.occupations()
    L = basis.L
    diag = -(spec.U) * (occ[:, :L] * occ[:, L:]).sum(axis=1).astype(float)
    h = sp.diags(diag.astype(complex), format="csr")
    for spin in ("up", "down"):
        for i, j in neighbor_pairs(spec.L, spec.boundary):
            hop = hop_op(basis, i, j, spin)
            h = h - spec.J * (hop.matrix + hop.matrix.conj().T)
    return SparseOperator(basis, h)


def hamiltonian(basis: FockBasis, spec: LatticeSpec) -> SparseOperator:
    if spec.species != basis.species or spec.L != basis.L:
        raise ConfigError("basis and lattice spec disagree")
    return bose_hubbard(basis, spec) if spec.species == "boson" else fermi_hubbard(basis, spec)


def effective_hamiltonian(h0: SparseOperator, channels) -> SparseOperator:
    """H0 - (i/2) sum_k c_k^dag c_k for the given jump operators."""
    h = h0.matrix.copy()
    for ch in channels:
        c = ch.op.matrix if hasattr(ch, "op") else ch.matrix
        h = h - 0.5j * (c.conj().T @ c)
    return SparseOperator(h0.basis, h)


def ground_state(h: SparseOperator, tol: float = 1e-10) -> tuple[float, np.ndarray]:
    """Lowest eigenpair of a Hermitian operator.

    Restarted iterative solver on large sectors, dense diagonalization on
    small ones (and as the fallback when the iteration stagnates). For a
    degenerate ground manifold the returned vector is one member of it.
    """
    if not h.is_hermitian(tol=1e-10):
        raise ConfigError("ground_state needs a Hermitian operator")
    dim = h.basis.dim
    if dim <= 64:
        w, v = np.linalg.eigh(h.to_dense())
        return float(w[0]), v[:, 0]
    try:
        w, v = spla.eigsh(h.matrix, k=1, which="SA", tol=tol, maxiter=5000)
        return float(w[0]), v[:, 0]
    except (spla.ArpackNoConvergence, RuntimeError):
        w, v = np.linalg.eigh(h.to_dense())
        return float(w[0]), v[:, 0]
