"""Probe-beam geometry and the photodetection jump channels it induces.

The scattered-light operator is set by site coefficients J_jj (diagonal
geometries, atom-number measurement) or bond coefficients J_ij (inter-site
geometry, tunneling measurement). A detection applies the jump operator

    c = sqrt(2 kappa) * C * M,   gamma = |C|^2 kappa,

with M the measurement operator: D (bosons), B (bonds), or the fermionic
pair D_x (density) and D_y (magnetization). Callers usually specify gamma
directly, in which case c = sqrt(2 gamma) * M.

Site index j is 1-based: site 1 is odd.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError
from .fock import FockBasis, SparseOperator, hop_op
from .model import neighbor_pairs

DIAGONAL_KINDS = ("odd_sites", "alternating", "rmode", "custom_diagonal", "fermion_dual")
GEOMETRY_KINDS = DIAGONAL_KINDS + ("intersite",)


@dataclass(frozen=True)
class ProbeGeometry:
    """One illumination pattern.

    kind selects the coefficient rule; rmode carries R, custom kinds carry
    explicit coefficients (site coefficients, or a row-major bond matrix
    flattened to tuples for the intersite kind).
    """

    kind: str
    R: int | None = None
    coefficients: tuple[complex, ...] | None = None
    bonds: tuple[tuple[complex, ...], ...] | None = None

    def __post_init__(self):
        if self.kind not in GEOMETRY_KINDS:
            raise ConfigError(f"geometry kind must be one of {GEOMETRY_KINDS}, got {self.kind!r}")
        if self.kind == "rmode" and (self.R is None or int(self.R) < 2):
            raise ConfigError("rmode geometry needs integer R >= 2")
        if self.kind == "custom_diagonal" and not self.coefficients:
            raise ConfigError("custom_diagonal geometry needs coefficients")
        if self.kind == "fermion_dual" and not self.coefficients:
            raise ConfigError("fermion_dual geometry needs site coefficients")
        if self.kind == "intersite" and self.bonds is None:
            raise ConfigError("intersite geometry needs a bond matrix")

    # -- factories ---------------------------------------------------------

    @classmethod
    def odd_sites(cls) -> "ProbeGeometry":
        return cls("odd_sites")

    @classmethod
    def alternating(cls) -> "ProbeGeometry":
        return cls("alternating")

    @classmethod
    def rmode(cls, R: int) -> "ProbeGeometry":
        return cls("rmode", R=int(R))

    @classmethod
    def custom_diagonal(cls, coefficients) -> "ProbeGeometry":
        return cls("custom_diagonal", coefficients=tuple(complex(c) for c in coefficients))

    @classmethod
    def fermion_dual(cls, coefficients) -> "ProbeGeometry":
        return cls("fermion_dual", coefficients=tuple(complex(c) for c in coefficients))

    @classmethod
    def intersite(cls, matrix) -> "ProbeGeometry":
        m = np.asarray(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ConfigError(f"bond matrix must be square, got shape {m.shape}")
        return cls("intersite", bonds=tuple(tuple(row) for row in m))

    # -- coefficient rules ---------------------------------------------------

    def site_coefficients(self, L: int) -> np.ndarray:
        """J_jj for j = 1..L."""
        if self.kind == "odd_sites":
            return np.array([1.0 + 0j if j % 2 == 1 else 0.0 for j in range(1, L + 1)])
        if self.kind == "alternating":
            return np.array([complex((-1) ** (j + 1)) for j in range(1, L + 1)])
        if self.kind == "rmode":
            return np.exp(2j * np.pi * np.arange(1, L + 1) / self.R)
        if self.kind in ("custom_diagonal", "fermion_dual"):
            if len(self.coefficients) != L:
                raise ConfigError(
                    f"{len(self.coefficients)} coefficients for a chain of {L} sites"
                )
            return np.array(self.coefficients, dtype=complex)
        raise ConfigError(f"{self.kind} geometry has no site coefficients")

    def bond_matrix(self, L: int) -> np.ndarray:
        if self.kind != "intersite":
            raise ConfigError(f"{self.kind} geometry has no bond matrix")
        m = np.array(self.bonds, dtype=complex)
        if m.shape != (L, L):
            raise ConfigError(f"bond matrix shape {m.shape} for a chain of {L} sites")
        return m


def uniform_intersite_matrix(L: int, boundary: str) -> np.ndarray:
    """J_ij = 1 on every ordered nearest-neighbor pair."""
    m = np.zeros((L, L), dtype=complex)
    for i, j in neighbor_pairs(L, boundary):
        m[i - 1, j - 1] = 1.0
        m[j - 1, i - 1] = 1.0
    return m


# -- cavity-free scattering amplitude ---------------------------------------


def rayleigh_coefficient(omega10: complex, a0: complex, delta_p: float, kappa: float) -> complex:
    """C = i omega10 a0 / (i delta_p - kappa)."""
    if kappa <= 0:
        raise ConfigError(f"cavity linewidth kappa must be positive, got {kappa}")
    return 1j * omega10 * a0 / (1j * delta_p - kappa)


def measurement_strength(c_coeff: complex, kappa: float) -> float:
    """gamma = |C|^2 kappa."""
    return abs(c_coeff) ** 2 * kappa


# -- measurement operators ----------------------------------------------------


def build_D(basis: FockBasis, geometry: ProbeGeometry) -> SparseOperator:
    """sum_j J_jj n_j (bosonic atom-number measurement)."""
    if basis.species != "boson":
        raise ConfigError("build_D is bosonic; fermions use build_fermion_channels")
    coeffs = geometry.site_coefficients(basis.L)
    occ = basis.occupations().astype(float)
    return SparseOperator(basis, sp.diags(occ @ coeffs, format="csr"))


def build_fermion_channels(
    basis: FockBasis, geometry: ProbeGeometry
) -> tuple[SparseOperator, SparseOperator]:
    """(D_x, D_y): sum_j J_jj rho_j and sum_j J_jj m_j with rho = n_up + n_down,
    m = n_up - n_down."""
    if basis.species != "fermion":
        raise ConfigError("build_fermion_channels needs a fermionic basis")
    coeffs = geometry.site_coefficients(basis.L)
    occ = basis.occupations().astype(float)
    L = basis.L
    rho = occ[:, :L] + occ[:, L:]
    mag = occ[:, :L] - occ[:, L:]
    dx = SparseOperator(basis, sp.diags(rho @ coeffs, format="csr"))
    dy = SparseOperator(basis, sp.diags(mag @ coeffs, format="csr"))
    return dx, dy


def build_B(basis: FockBasis, geometry: ProbeGeometry, boundary: str = "open") -> SparseOperator:
    """sum over bonds of J_ij b_i^dag b_j (tunneling measurement).

    Nonzero bond coefficients must sit on nearest-neighbor ordered pairs of
    the chosen boundary. A non-Hermitian coefficient pattern is legal but
    warned about, since the operator then has no real eigenbasis.
    """
    if basis.species != "boson":
        raise ConfigError("build_B is bosonic")
    m = geometry.bond_matrix(basis.L)
    allowed = set()
    for i, j in neighbor_pairs(basis.L, boundary):
        allowed.add((i, j))
        allowed.add((j, i))
    b = sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
    for i in range(1, basis.L + 1):
        for j in range(1, basis.L + 1):
            v = m[i - 1, j - 1]
            if v == 0:
                continue
            if (i, j) not in allowed:
                raise ConfigError(f"bond coefficient on non-neighbor pair ({i},{j})")
            b = b + v * hop_op(basis, i, j).matrix
    op = SparseOperator(basis, b)
    if not op.is_hermitian(tol=1e-12):
        warnings.warn("inter-site coefficient pattern is not Hermitian", stacklevel=2)
    return op


def component_multiplicity(R: int) -> int:
    """Number of symmetry partners sharing one |D|^2 detection class."""
    if int(R) != R or R < 2:
        raise ConfigError(f"mode count R must be an integer >= 2, got {R}")
    return 2 if R == 2 else 2 * R


# -- jump channels ------------------------------------------------------------


@dataclass(frozen=True)
class JumpChannel:
    """One photodetection channel: jump operator op = amplitude * base."""

    label: str
    base: SparseOperator
    amplitude: complex

    @property
    def op(self) -> SparseOperator:
        return self.base * self.amplitude


def jump_amplitude(
    gamma: float | None = None,
    c_coeff: complex | None = None,
    kappa: float | None = None,
) -> complex:
    """sqrt(2 gamma), or sqrt(2 kappa) C when the cavity parameters are given."""
    if gamma is not None:
        if gamma < 0:
            raise ConfigError(f"measurement strength gamma must be >= 0, got {gamma}")
        return complex(np.sqrt(2.0 * gamma))
    if c_coeff is None or kappa is None:
        raise ConfigError("need gamma, or the pair (c_coeff, kappa)")
    return np.sqrt(2.0 * kappa) * c_coeff


def build_channels(
    basis: FockBasis,
    geometry: ProbeGeometry,
    which,
    gamma: float | None = None,
    c_coeff: complex | None = None,
    kappa: float | None = None,
    boundary: str = "open",
) -> list[JumpChannel]:
    """Assemble the requested jump channels ('d', 'b', 'dx', 'dy')."""
    amp = jump_amplitude(gamma, c_coeff, kappa)
    out = []
    fermion_pair: tuple[SparseOperator, SparseOperator] | None = None
    for name in which:
        key = name.lower()
        if key == "d":
            out.append(JumpChannel("d", build_D(basis, geometry), amp))
        elif key == "b":
            out.append(JumpChannel("b", build_B(basis, geometry, boundary), amp))
        elif key in ("dx", "dy"):
            if fermion_pair is None:
                fermion_pair = build_fermion_channels(basis, geometry)
            out.append(JumpChannel(key, fermion_pair[0 if key == "dx" else 1], amp))
        else:
            raise ConfigError(f"unknown channel {name!r} (expected d, b, dx, dy)")
    if not out:
        raise ConfigError("no channels requested")
    return out


# -- coefficient files --------------------------------------------------------


def load_diagonal_profile(path) -> np.ndarray:
    """One coefficient per line as 're im'."""
    coeffs = []
    for ln, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ConfigError(f"{path}:{ln}: expected 're im', got {raw!r}")
        coeffs.append(complex(float(parts[0]), float(parts[1])))
    if not coeffs:
        raise ConfigError(f"{path}: no coefficients found")
    return np.array(coeffs, dtype=complex)


def load_intersite_profile(path, L: int) -> np.ndarray:
    """Row-major bond entries, one per line as 'i j re im' (1-indexed sites)."""
    m = np.zeros((L, L), dtype=complex)
    seen = set()
    for ln, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ConfigError(f"{path}:{ln}: expected 'i j re im', got {raw!r}")
        i, j = int(parts[0]), int(parts[1])
        if not (1 <= i <= L and 1 <= j <= L):
            raise ConfigError(f"{path}:{ln}: site pair ({i},{j}) outside 1..{L}")
        if (i, j) in seen:
            raise ConfigError(f"{path}:{ln}: duplicate bond ({i},{j})")
        seen.add((i, j))
        m[i - 1, j - 1] = complex(float(parts[2]), float(parts[3]))
    return m
