"""Closed-form laws and constructed reference states for validation.

These are the analytic limits the simulator is checked against: two-mode
imbalance dynamics between and across detections, the interaction-dressed
Mott state a strongly interacting chain settles into under monitoring, the
stationary imbalance variance it implies, the Zeno-regime effective
Hamiltonian of a strongly monitored lattice, and the pair-correlation
growth law of a two-site zone measurement.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError
from .fock import FockBasis, SparseOperator, hop_op
from .model import LatticeSpec, neighbor_pairs


# -- two-mode imbalance laws ---------------------------------------------------


def imbalance_between_jumps(t, z00: float, c0: float, J: float, gamma: float,
                            n_atoms: int):
    """Damped oscillation of z = (N_1 - N_2)/N under no-jump evolution:
    z(t) = (1/2) exp(-N gamma t / 2) [c0 sin(2Jt) + 2 z00 cos(2Jt)]."""
    t = np.asarray(t, dtype=float)
    return 0.5 * np.exp(-n_atoms * gamma * t / 2.0) * (
        c0 * np.sin(2.0 * J * t) + 2.0 * z00 * np.cos(2.0 * J * t)
    )


def imbalance_envelope(t, z00: float, gamma: float, n_atoms: int):
    """Growth envelope of the oscillation amplitude across detections:
    z_env(t) = -1 + (1 + z00) exp(N gamma t)."""
    t = np.asarray(t, dtype=float)
    return -1.0 + (1.0 + z00) * np.exp(n_atoms * gamma * t)


# -- dressed Mott state --------------------------------------------------------


def dressed_mott_state(basis: FockBasis, spec: LatticeSpec, gamma: float) -> np.ndarray:
    """First-order conditional steady state of a Mott insulator under a
    staggered probe (adjacent sites read with opposite sign, so the filled
    state is signal-dark and every hop costs U - 4 i gamma): proportional to
    [1 + J/(U - 4 i gamma) sum_<ij> b_i^dag b_j] |nu, nu, ...>, summed over
    ordered nearest-neighbor pairs."""
    if basis.species != "boson" or spec.species != "boson":
        raise ConfigError("dressed Mott state is bosonic")
    if spec.U == 0 and gamma == 0:
        raise ConfigError("need U or gamma nonzero")
    nu, rem = divmod(basis.n_total, basis.L)
    if rem != 0 or nu < 1:
        raise ConfigError(
            f"commensurate filling required, got {basis.n_total} atoms on {basis.L} sites"
        )
    mott = np.zeros(basis.dim, dtype=complex)
    mott[basis.index[(nu,) * basis.L]] = 1.0
    psi = mott.copy()
    coupling = spec.J / (spec.U - 4j * gamma)
    for i, j in neighbor_pairs(basis.L, spec.boundary):
        psi += coupling * (hop_op(basis, i, j).apply(mott) + hop_op(basis, j, i).apply(mott))
    return psi / np.linalg.norm(psi)


def stationary_number_variance(J: float, U: float, gamma: float, L: int,
                               nu: int) -> float:
    """Long-time variance of N_odd - N_even for the dressed Mott state on a
    ring: 8 J^2 L nu (nu + 1) / (U^2 + 16 gamma^2)."""
    if U == 0 and gamma == 0:
        raise ConfigError("need U or gamma nonzero")
    return 8.0 * J**2 * L * nu * (nu + 1) / (U**2 + 16.0 * gamma**2)


# -- Zeno-regime effective Hamiltonian -------------------------------------------


def _two_zone_coefficients(coeffs: np.ndarray):
    if np.abs(coeffs.imag).max() > 1e-12:
        raise ConfigError("zone coefficients must be real")
    vals = np.unique(np.round(coeffs.real, 12))
    if vals.size != 2:
        raise ConfigError(f"need exactly two distinct site coefficients, got {vals.size}")
    return float(vals[0]), float(vals[1])


def zeno_hamiltonian(basis: FockBasis, geometry, J: float, gamma: float,
                     reference_occ, boundary: str = "open") -> SparseOperator:
    """Effective generator of the strongly monitored lattice, valid deep in
    the Zeno regime (gamma >> J): the detection signal pins the zone
    populations, and dynamics inside that eigenspace is

        H_Z = P0 [ -J B - i (J^2 / (A gamma)) (X X^dag + X^dag X) ] P0,

    with B the full hopping sum, X the zone-crossing part of it,
    A = (J_1 - J_2)^2 the squared coefficient contrast, and P0 the projector
    onto the detection eigenspace of the reference configuration. The result
    is non-Hermitian; its anti-Hermitian part is negative semidefinite and
    encodes the residual leakage rate out of the eigenspace."""
    if basis.species != "boson":
        raise ConfigError("zone-pinned effective dynamics is implemented for bosons")
    if gamma <= 0:
        raise ConfigError(f"gamma must be positive, got {gamma}")
    coeffs = geometry.site_coefficients(basis.L)
    v1, v2 = _two_zone_coefficients(coeffs)
    contrast = (v1 - v2) ** 2

    values = basis.occupations().astype(float) @ coeffs.real
    reference_occ = tuple(int(n) for n in reference_occ)
    if reference_occ not in basis.index:
        raise ConfigError(f"reference occupation {reference_occ} is not in the basis")
    d_ref = values[basis.index[reference_occ]]
    mask = np.abs(values - d_ref) < 1e-9
    p0 = SparseOperator(basis, sp.diags(mask.astype(float), format="csr"))

    zone1_sites = {j for j in range(1, basis.L + 1)
                   if abs(coeffs.real[j - 1] - v1) < 1e-9}
    b_full = None
    x_cross = None
    for i, j in neighbor_pairs(basis.L, boundary):
        for a, b in ((i, j), (j, i)):
            term = hop_op(basis, a, b)
            b_full = term if b_full is None else b_full + term
            if (a in zone1_sites) != (b in zone1_sites) and a in zone1_sites:
                # moves an atom into zone 1 from zone 2
                x_cross = term if x_cross is None else x_cross + term
    if b_full is None:
        raise ConfigError("chain has no bonds")

    inner = (-J) * b_full
    if x_cross is not None:
        xd = x_cross.adjoint()
        quartic = x_cross @ xd + xd @ x_cross
        inner = inner + (-1j * J * J / (contrast * gamma)) * quartic
    return p0 @ inner @ p0


# -- zone-pair correlation growth -------------------------------------------------


def pair_correlation_growth(t, J: float, gamma: float):
    """Cross-zone number covariance of a strongly monitored two-zone system,
    starting uncorrelated: [1 - sech^2(4 J^2 t / gamma)] / 4."""
    if gamma <= 0:
        raise ConfigError(f"gamma must be positive, got {gamma}")
    t = np.asarray(t, dtype=float)
    return np.tanh(4.0 * J**2 * t / gamma) ** 2 / 4.0


def excitation_cascade_prefactor(m: int, J: float, K: float, U: float) -> float:
    """Amplitude of an m-fold repeated excitation relative to the base
    process: 2^m J / (K U)."""
    if m < 0:
        raise ConfigError(f"m must be >= 0, got {m}")
    if U == 0 or K == 0:
        raise ConfigError("need K and U nonzero")
    return (2.0**m) * J / (K * U)
