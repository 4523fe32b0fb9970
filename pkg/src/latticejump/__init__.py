"""Quantum-trajectory simulation of light-monitored Hubbard lattices.

Fixed-number Bose- and Fermi-Hubbard chains whose scattered probe light is
photodetected: between detection events the state evolves under a
non-Hermitian Hamiltonian, each detection applies the measurement operator
as a quantum jump. The package also integrates the matching master
equation as a cross-check, computes mode-resolved observables, and ships
the closed-form reference laws the dynamics can be tested against.
"""

__version__ = "0.1.0"

from .errors import ConfigError, DimensionCapError, NumericalFailure
from .fock import FockBasis, SparseOperator, build_basis, hop_op, number_op
from .model import (
    LatticeSpec,
    effective_hamiltonian,
    ground_state,
    hamiltonian,
    neighbor_pairs,
)
from .observables import (
    ModePartition,
    entanglement_entropy,
    group_number_values,
    mode_number_distribution,
    trace_distance,
    variance_of,
)
from .probe import (
    JumpChannel,
    ProbeGeometry,
    build_B,
    build_channels,
    build_D,
    build_fermion_channels,
    component_multiplicity,
)
from .reference import (
    dressed_mott_state,
    pair_correlation_growth,
    stationary_number_variance,
    zeno_hamiltonian,
)
from .trajectory import (
    EngineConfig,
    EnsembleResult,
    evolve_nonhermitian,
    lindblad_evolve,
    run_ensemble,
)

__all__ = [
    "ConfigError",
    "DimensionCapError",
    "NumericalFailure",
    "FockBasis",
    "SparseOperator",
    "build_basis",
    "hop_op",
    "number_op",
    "LatticeSpec",
    "hamiltonian",
    "effective_hamiltonian",
    "ground_state",
    "neighbor_pairs",
    "ModePartition",
    "group_number_values",
    "mode_number_distribution",
    "variance_of",
    "entanglement_entropy",
    "trace_distance",
    "ProbeGeometry",
    "JumpChannel",
    "build_D",
    "build_B",
    "build_channels",
    "build_fermion_channels",
    "component_multiplicity",
    "dressed_mott_state",
    "pair_correlation_growth",
    "stationary_number_variance",
    "zeno_hamiltonian",
    "EngineConfig",
    "EnsembleResult",
    "run_ensemble",
    "evolve_nonhermitian",
    "lindblad_evolve",
    "__version__",
]
