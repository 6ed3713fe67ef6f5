import math

import numpy as np
import pytest

from holstein_ec import LatticeSpec, SegmentSpec, build_segment_hamiltonian
from holstein_ec.hamiltonian import (chain_hamiltonian, coupling_lambda, g_for_lambda,
                                     strong_coupling_energy, tight_binding_ground)


def lowest(op):
    return np.linalg.eigvalsh(op.toarray())[0]


def test_bare_oscillator():
    lat = LatticeSpec(1, 6, 0.7, 0.0)
    h = build_segment_hamiltonian(lat, SegmentSpec(0, 1)).toarray()
    np.testing.assert_array_equal(h, np.diag(0.7 * np.arange(6)))


def test_dimer():
    lat = LatticeSpec(2, 1, 1.0, 0.0, hopping=1.3)
    h = build_segment_hamiltonian(lat, SegmentSpec(0, 2)).toarray()
    np.testing.assert_array_equal(h, [[0, -1.3], [-1.3, 0]])


def test_displaced_oscillator_limit():
    # dense diagonalization of the truncated displaced oscillator; exact limit -g^2/omega
    lat = LatticeSpec(1, 40, 1.0, 1.0)
    assert abs(lowest(build_segment_hamiltonian(lat, SegmentSpec(0, 1))) + 1.0) < 1e-6


def test_matrix_elements_follow_ladder_rules():
    lat = LatticeSpec(2, 3, 0.5, 0.8, onsite_energy=0.25)
    h = build_segment_hamiltonian(lat, SegmentSpec(0, 2)).toarray()
    # index = site*9 + n0*3 + n1
    assert h[0 * 9 + 1 * 3 + 2, 0 * 9 + 1 * 3 + 2] == pytest.approx(0.25 + 0.5 * 3)
    assert h[0 * 9 + 2 * 3 + 0, 0 * 9 + 1 * 3 + 0] == pytest.approx(0.8 * math.sqrt(2))
    assert h[1 * 9 + 0 * 3 + 1, 1 * 9 + 0 * 3 + 0] == pytest.approx(0.8)
    # coupling only acts on the occupied site
    assert h[0 * 9 + 0 * 3 + 1, 0 * 9 + 0 * 3 + 0] == 0.0
    assert h[1 * 9 + 4, 0 * 9 + 4] == -1.0
    # top level is capped: no element leaves the truncated space
    assert h.shape == (18, 18)


def test_segment_outside_lattice_rejected():
    with pytest.raises(ValueError):
        build_segment_hamiltonian(LatticeSpec(3, 2, 1.0, 0.0), SegmentSpec(2, 2))


@pytest.mark.parametrize("ns, np_", [(1, 4), (2, 3), (3, 3), (4, 2)])
def test_hermitian(ns, np_, rng):
    lat = LatticeSpec(ns, np_, rng.uniform(0.1, 1), rng.uniform(0, 2), onsite_energy=0.3)
    assert build_segment_hamiltonian(lat, SegmentSpec(0, ns)).is_symmetric()


@pytest.mark.parametrize("nk", [1, 2, 3, 4])
def test_zero_coupling_is_tight_binding(nk):
    op = chain_hamiltonian(nk, 3, 0.5, 0.0)
    assert lowest(op) == pytest.approx(tight_binding_ground(nk), abs=1e-10)
    # block diagonal in total phonon number
    from holstein_ec.basis import occupation_table
    total = np.tile(occupation_table(nk, 3).sum(axis=1), nk)
    rows, cols = op.matrix.nonzero()
    assert np.all(total[rows] == total[cols])


def test_coupling_sign_irrelevant():
    plus = chain_hamiltonian(3, 3, 0.5, 0.9)
    minus = chain_hamiltonian(3, 3, 0.5, -0.9)
    np.testing.assert_allclose(np.linalg.eigvalsh(plus.toarray()),
                               np.linalg.eigvalsh(minus.toarray()), atol=1e-10)


def test_truncation_monotonic():
    energies = [lowest(chain_hamiltonian(2, npl, 0.5, 1.2)) for npl in range(1, 9)]
    assert all(b <= a + 1e-12 for a, b in zip(energies, energies[1:]))


def test_coupling_lambda():
    assert coupling_lambda(2, 1, 0.5) == 4
    assert coupling_lambda(0, 3, 0.2) == 0
    assert coupling_lambda(1, 1, 0.1) == pytest.approx(5)
    with pytest.raises(ValueError):
        coupling_lambda(1, 0, 1)
    with pytest.raises(ValueError):
        coupling_lambda(1, 1, -1)


def test_g_for_lambda():
    assert g_for_lambda(4, 1, 0.5) == 2
    assert g_for_lambda(0, 1, 0.5) == 0
    for lam in (0.15, 1.0, 1.8):
        assert abs(coupling_lambda(g_for_lambda(lam, 1, 0.1), 1, 0.1) - lam) < 1e-14
    with pytest.raises(ValueError):
        g_for_lambda(-1, 1, 1)


def test_strong_coupling_energy():
    assert strong_coupling_energy(0, 1, 0.5, 4) == pytest.approx(-8.25000022507, abs=1e-10)
    assert strong_coupling_energy(0, 1, 0.1, 1) == pytest.approx(-3.0000000041223, abs=1e-12)
    big = strong_coupling_energy(0.3, 1, 0.5, 1e6)
    assert big - (0.3 - 2e6) == pytest.approx(0, abs=2e-6)
    with pytest.raises(ValueError):
        strong_coupling_energy(0, 1, 0.5, 0)
