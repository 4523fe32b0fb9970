"""Stepping-kernel checks, run against every available backend.

The analytic targets: unitary propagation against a dense matrix
exponential, and the exactly solvable norm decay ||psi(t)||^2 = exp(-2g t)
whose threshold crossing time is known in closed form.
"""

import numpy as np
import pytest
import scipy.linalg
import scipy.sparse as sp
from numpy.testing import assert_allclose

from latticejump import _kernels

BACKENDS = _kernels.available_backends()
RNG = np.random.default_rng(7)


def random_hermitian(dim: int) -> np.ndarray:
    a = RNG.normal(size=(dim, dim)) + 1j * RNG.normal(size=(dim, dim))
    return (a + a.conj().T) / 2


def run(backend, g, psi, t0, t1, threshold=-1.0, dt=1e-3, dt_max=1.0, rtol=1e-10, atol=1e-12,
        jump_tol=1e-10, max_bisect=60):
    impl = _kernels.get_backend(backend)
    y = np.array(psi, dtype=np.complex128)
    out = impl.propagate(sp.csr_matrix(g), y, t0, t1, threshold, dt, dt_max, rtol, atol,
                         jump_tol, max_bisect)
    return y, out


@pytest.mark.parametrize("backend", BACKENDS)
def test_matches_matrix_exponential(backend):
    dim = 40
    h = random_hermitian(dim)
    psi0 = RNG.normal(size=dim) + 1j * RNG.normal(size=dim)
    psi0 /= np.linalg.norm(psi0)
    t1 = 2.3
    want = scipy.linalg.expm(-1j * h * t1) @ psi0
    got, (t, crossed, dt_next, n_steps, n_rej, status, gap) = run(backend, -1j * h, psi0, 0.0, t1)
    assert status == 0 and crossed == 0
    assert t == pytest.approx(t1)
    assert n_steps > 10
    assert_allclose(got, want, atol=1e-7)


@pytest.mark.parametrize("backend", BACKENDS)
def test_norm_preserved_for_hermitian_generator(backend):
    dim = 25
    h = random_hermitian(dim)
    psi0 = RNG.normal(size=dim) + 1j * RNG.normal(size=dim)
    psi0 /= np.linalg.norm(psi0)
    got, (_, _, _, _, _, status, _) = run(backend, -1j * h, psi0, 0.0, 5.0)
    assert status == 0
    assert np.linalg.norm(got) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("backend", BACKENDS)
def test_threshold_crossing_matches_analytic_decay(backend):
    # H_eff = -(i/2) * 2g * |1><1| on a 2-dim space, psi fully on mode 1:
    # ||psi(t)||^2 = exp(-2 g t), crossing r at t = -ln(r)/(2 g)
    g = 0.7
    gen = np.diag([-g, -g])  # -i H_eff
    psi0 = np.array([1.0, 0.0], dtype=complex)
    r = 0.4123
    t_star = -np.log(r) / (2 * g)
    got, (t, crossed, _, _, _, status, gap) = run(backend, gen, psi0, 0.0, 10.0, threshold=r)
    assert status == 0
    assert crossed == 1
    assert t == pytest.approx(t_star, abs=1e-9)
    assert gap < 1e-10
    assert np.vdot(got, got).real == pytest.approx(r, abs=1e-9)


@pytest.mark.parametrize("backend", BACKENDS)
def test_no_crossing_when_threshold_below_final_norm(backend):
    g = 0.3
    gen = np.diag([-g])
    psi0 = np.array([1.0], dtype=complex)
    t1 = 1.0
    r = np.exp(-2 * g * t1) * 0.5  # final norm^2 still above r
    got, (t, crossed, *_rest) = run(backend, gen, psi0, 0.0, t1, threshold=r)
    assert crossed == 0
    assert t == pytest.approx(t1)


@pytest.mark.parametrize("backend", BACKENDS)
def test_growing_norm_is_flagged(backend):
    gen = np.diag([+0.5])  # unphysical: norm grows
    psi0 = np.array([1.0], dtype=complex)
    _, (_, _, _, _, _, status, _) = run(backend, gen, psi0, 0.0, 5.0)
    assert status == 2


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled kernel not built")
def test_backends_agree_on_jump_location():
    dim = 30
    h = random_hermitian(dim)
    decay = np.diag(RNG.uniform(0.1, 1.0, size=dim))
    gen = -1j * h - decay
    psi0 = RNG.normal(size=dim) + 1j * RNG.normal(size=dim)
    psi0 /= np.linalg.norm(psi0)
    r = 0.62
    got_a, (ta, ca, *_a) = run("pure", gen, psi0, 0.0, 10.0, threshold=r)
    got_b, (tb, cb, *_b) = run("compiled", gen, psi0, 0.0, 10.0, threshold=r)
    assert ca == cb == 1
    assert ta == pytest.approx(tb, rel=1e-9)
    assert_allclose(got_a, got_b, atol=1e-8)
