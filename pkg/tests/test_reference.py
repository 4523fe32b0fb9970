import numpy as np
import pytest
from scipy.special import comb

from latticejump.errors import ConfigError
from latticejump.fock import build_basis
from latticejump.model import LatticeSpec, hamiltonian
from latticejump.observables import imbalance_op, variance_of
from latticejump.probe import ProbeGeometry, build_channels, build_D
from latticejump.reference import (
    dressed_mott_state,
    excitation_cascade_prefactor,
    imbalance_between_jumps,
    imbalance_envelope,
    pair_correlation_growth,
    stationary_number_variance,
    zeno_hamiltonian,
)
from latticejump.trajectory import EngineConfig, run_trajectory


# -- two-mode laws -----------------------------------------------------------


def test_imbalance_law_initial_value_and_damping():
    z = imbalance_between_jumps(0.0, z00=-0.1, c0=0.7, J=1.0, gamma=0.01, n_atoms=10)
    assert np.isclose(z, -0.1)
    t = np.linspace(0, 5, 50)
    damped = imbalance_between_jumps(t, -0.1, 0.0, 1.0, 0.05, 10)
    undamped = imbalance_between_jumps(t, -0.1, 0.0, 1.0, 0.0, 10)
    assert np.all(np.abs(damped) <= np.abs(undamped) + 1e-15)


def test_envelope_values():
    assert np.isclose(imbalance_envelope(0.0, -0.9, 0.1, 5), -0.9)
    # at N gamma t = ln 2 the envelope sits at 1 + 2 z00
    t = np.log(2) / (5 * 0.1)
    assert np.isclose(imbalance_envelope(t, -0.9, 0.1, 5), 1 + 2 * (-0.9))
    t = np.linspace(0, 3, 30)
    env = imbalance_envelope(t, -0.5, 0.1, 4)
    assert np.all(np.diff(env) > 0)


def coherent_two_mode(basis, z00):
    """SU(2) coherent state with <n1 - n2>/N = z00."""
    n = basis.n_total
    a = np.sqrt((1 + z00) / 2)
    b = np.sqrt((1 - z00) / 2)
    psi = np.zeros(basis.dim, dtype=complex)
    for k in range(n + 1):
        psi[basis.index[(k, n - k)]] = np.sqrt(comb(n, k, exact=True)) * a**k * b ** (n - k)
    return psi / np.linalg.norm(psi)


def test_no_jump_imbalance_follows_damped_oscillation():
    # weakly monitored noninteracting double well, one free fit constant
    n_atoms, gamma = 20, 0.001
    basis = build_basis("boson", 2, n_atoms)
    h0 = hamiltonian(basis, LatticeSpec("boson", 2, n_atoms, J=1.0, U=0.0))
    chans = build_channels(basis, ProbeGeometry.odd_sites(), ["d"], gamma=gamma)
    z00 = -0.1
    psi0 = coherent_two_mode(basis, z00)
    engine = EngineConfig(seed=1, t_final=10.0, sample_interval=0.1,
                          postselect_no_jump=True)
    traj = run_trajectory(h0, chans, psi0, engine,
                          observables={"z": imbalance_op(basis)})
    t = traj.times
    z_num = traj.series["z"]
    # c0 is the one free constant of the law; fit it linearly
    design = 0.5 * np.exp(-n_atoms * gamma * t / 2) * np.sin(2 * t)
    fixed = imbalance_between_jumps(t, z00, 0.0, 1.0, gamma, n_atoms)
    c0 = float(np.linalg.lstsq(design[:, None], z_num - fixed, rcond=None)[0][0])
    z_law = imbalance_between_jumps(t, z00, c0, 1.0, gamma, n_atoms)
    assert np.max(np.abs(z_num - z_law)) < 0.1 * np.max(np.abs(z_num))


# -- dressed Mott state ----------------------------------------------------------


def test_dressed_mott_amplitudes():
    basis = build_basis("boson", 4, 4)
    spec = LatticeSpec("boson", 4, 4, J=1.0, U=8.0, boundary="periodic")
    gamma = 0.5
    psi = dressed_mott_state(basis, spec, gamma)
    want = np.zeros(basis.dim, dtype=complex)
    want[basis.index[(1, 1, 1, 1)]] = 1.0
    amp = (1.0 / (8.0 - 4j * gamma)) * np.sqrt(2.0)
    ring = [(1, 2), (2, 3), (3, 4), (4, 1)]
    for i, j in ring:
        for src, dst in ((j, i), (i, j)):
            occ = [1, 1, 1, 1]
            occ[dst - 1] += 1
            occ[src - 1] -= 1
            want[basis.index[tuple(occ)]] += amp
    want /= np.linalg.norm(want)
    assert np.allclose(psi, want, atol=1e-12)
    assert np.isclose(np.linalg.norm(psi), 1.0)


def test_dressed_mott_approaches_mott_for_large_u():
    basis = build_basis("boson", 3, 3)
    spec = LatticeSpec("boson", 3, 3, J=1.0, U=1e6)
    psi = dressed_mott_state(basis, spec, 0.0)
    assert abs(psi[basis.index[(1, 1, 1)]]) > 1 - 1e-9


def test_dressed_mott_validation():
    basis = build_basis("boson", 3, 2)  # incommensurate
    with pytest.raises(ConfigError):
        dressed_mott_state(basis, LatticeSpec("boson", 3, 2, J=1.0, U=5.0), 0.1)
    b2 = build_basis("boson", 2, 2)
    with pytest.raises(ConfigError):
        dressed_mott_state(b2, LatticeSpec("boson", 2, 2, J=1.0, U=0.0), 0.0)


def test_no_click_evolution_settles_into_dressed_state():
    # under a staggered probe the filled state is signal-dark; conditioned on
    # no detection, hop admixtures relax at ~8 gamma onto the slow eigenstate
    # of the non-Hermitian generator, which is the dressed state
    basis = build_basis("boson", 4, 4)
    spec = LatticeSpec("boson", 4, 4, J=1.0, U=10.0, boundary="periodic")
    gamma = 10.0
    h0 = hamiltonian(basis, spec)
    geom = ProbeGeometry.alternating()
    chans = build_channels(basis, geom, ["d"], gamma=gamma)
    psi0 = np.zeros(basis.dim, dtype=complex)
    psi0[basis.index[(1, 1, 1, 1)]] = 1.0
    engine = EngineConfig(seed=7, t_final=2.0, sample_interval=0.5,
                          postselect_no_jump=True)
    traj = run_trajectory(h0, chans, psi0, engine)
    target = dressed_mott_state(basis, spec, gamma)
    overlap = abs(np.vdot(target, traj.states[-1])) ** 2
    assert overlap > 0.99
    # the settled state reproduces the stationary signal variance law
    var = variance_of(build_D(basis, geom))(traj.states[-1])
    law = stationary_number_variance(1.0, 10.0, gamma, 4, 1)
    assert abs(var - law) < 0.05 * law


def test_stationary_variance_values():
    assert np.isclose(stationary_number_variance(1.0, 10.0, 0.0, 4, 1), 0.64)
    assert np.isclose(stationary_number_variance(1.0, 10.0, 2.5, 4, 1), 0.32)
    # tighter squeezing for stronger interaction or measurement
    assert stationary_number_variance(1, 20, 0, 4, 1) < stationary_number_variance(1, 10, 0, 4, 1)
    assert stationary_number_variance(1, 10, 5, 4, 1) < stationary_number_variance(1, 10, 0, 4, 1)
    with pytest.raises(ConfigError):
        stationary_number_variance(1.0, 0.0, 0.0, 4, 1)


# -- Zeno-regime effective Hamiltonian ----------------------------------------------


def zeno_setup():
    basis = build_basis("boson", 4, 2)
    geom = ProbeGeometry.alternating()
    hz = zeno_hamiltonian(basis, geom, J=1.0, gamma=50.0,
                          reference_occ=(1, 0, 1, 0), boundary="periodic")
    return basis, hz


def test_zeno_hamiltonian_confined_to_eigenspace():
    basis, hz = zeno_setup()
    coeffs = np.array([1, -1, 1, -1.0])
    values = basis.occupations() @ coeffs
    mask = np.isclose(values, 2.0)
    dense = hz.to_dense()
    outside = ~mask
    assert np.abs(dense[outside, :]).max() < 1e-12
    assert np.abs(dense[:, outside]).max() < 1e-12
    assert np.abs(dense[np.ix_(mask, mask)]).max() > 1e-12


def test_zeno_hamiltonian_alternating_has_no_single_hop_part():
    # every bond crosses the two zones, so the projected kinetic term dies
    basis, hz = zeno_setup()
    dense = hz.to_dense()
    herm = 0.5 * (dense + dense.conj().T)
    assert np.abs(herm).max() < 1e-12


def test_zeno_antihermitian_part_is_negative_semidefinite():
    basis, hz = zeno_setup()
    dense = hz.to_dense()
    # H_Z = Herm - i K with K Hermitian PSD
    k = (dense - dense.conj().T) / (-2j)
    assert np.allclose(k, k.conj().T)
    assert np.linalg.eigvalsh(k).min() > -1e-12


def test_zeno_pair_hopping_connects_doublon_positions():
    basis, hz = zeno_setup()
    dense = hz.to_dense()
    a = basis.index[(2, 0, 0, 0)]
    b = basis.index[(1, 0, 1, 0)]
    assert abs(dense[a, b]) > 1e-9


def test_zeno_scaling_with_gamma():
    basis = build_basis("boson", 4, 2)
    geom = ProbeGeometry.alternating()
    h1 = zeno_hamiltonian(basis, geom, 1.0, 50.0, (1, 0, 1, 0), "periodic")
    h2 = zeno_hamiltonian(basis, geom, 1.0, 100.0, (1, 0, 1, 0), "periodic")
    assert np.allclose(h1.to_dense(), 2.0 * h2.to_dense(), atol=1e-14)


def test_zeno_validation():
    basis = build_basis("boson", 4, 2)
    with pytest.raises(ConfigError):
        zeno_hamiltonian(basis, ProbeGeometry.rmode(4), 1.0, 50.0, (1, 0, 1, 0))
    with pytest.raises(ConfigError):
        zeno_hamiltonian(basis, ProbeGeometry.custom_diagonal([1, 2, 3, 1]),
                         1.0, 50.0, (1, 0, 1, 0))
    with pytest.raises(ConfigError):
        zeno_hamiltonian(basis, ProbeGeometry.alternating(), 1.0, 0.0, (1, 0, 1, 0))
    with pytest.raises(ConfigError):
        zeno_hamiltonian(basis, ProbeGeometry.alternating(), 1.0, 50.0, (9, 9, 9, 9))


# -- growth and cascade laws -----------------------------------------------------


def test_pair_correlation_growth_limits():
    assert pair_correlation_growth(0.0, 1.0, 1.0) == 0.0
    assert np.isclose(pair_correlation_growth(1e6, 1.0, 1.0), 0.25)
    x = pair_correlation_growth(0.25, 1.0, 1.0)  # 4 J^2 t / gamma = 1
    assert np.isclose(x, (1 - 1 / np.cosh(1.0) ** 2) / 4)
    t = np.linspace(0, 2, 40)  # rising region; the law saturates beyond
    growth = pair_correlation_growth(t, 1.0, 2.0)
    assert np.all(np.diff(growth) > 0)
    with pytest.raises(ConfigError):
        pair_correlation_growth(1.0, 1.0, 0.0)


def test_excitation_cascade_prefactor():
    assert np.isclose(excitation_cascade_prefactor(2, 0.5, 3.0, 10.0), 1 / 15)
    assert np.isclose(
        excitation_cascade_prefactor(3, 1.0, 1.0, 10.0)
        / excitation_cascade_prefactor(2, 1.0, 1.0, 10.0),
        2.0,
    )
    with pytest.raises(ConfigError):
        excitation_cascade_prefactor(-1, 1.0, 1.0, 1.0)
    with pytest.raises(ConfigError):
        excitation_cascade_prefactor(1, 1.0, 0.0, 1.0)
