"""Brute-force references on the full lattice Hilbert space (small lattices only)."""
from __future__ import annotations

import numpy as np

from .basis import basis_size
from .hamiltonian import LatticeSpec, SparseOperator, chain_hamiltonian
from .solver import DEFAULT_TOL, EigenResult, dense_lowest_eigenpair, lowest_eigenpair
from .stitching import EffectiveProblem, SegmentState

FULL_CAP = 1_000_000


def _check_cap(lattice: LatticeSpec, cap: int) -> int:
    dim = basis_size(lattice.num_sites, lattice.phonon_levels)
    if dim > cap:
        raise ValueError(f"full dimension {dim} exceeds oracle cap {cap}")
    return dim


def full_hamiltonian(lattice: LatticeSpec, cap: int = FULL_CAP) -> SparseOperator:
    _check_cap(lattice, cap)
    return chain_hamiltonian(lattice.num_sites, lattice.phonon_levels, lattice.phonon_frequency,
                             lattice.coupling, lattice.hopping, lattice.onsite_energy)


def exact_ground(lattice: LatticeSpec, tol: float = DEFAULT_TOL, seed: int = 0,
                 cap: int = FULL_CAP) -> EigenResult:
    op = full_hamiltonian(lattice, cap)
    if op.dimension <= 128:
        return dense_lowest_eigenpair(op)
    return lowest_eigenpair(op, tol=tol, max_iter=20_000, seed=seed)


def embed(state: SegmentState, lattice: LatticeSpec, cap: int = FULL_CAP) -> np.ndarray:
    """Full-lattice vector: segment amplitudes on the segment, vacuum on every other site."""
    _check_cap(lattice, cap)
    if state.phonon_levels != lattice.phonon_levels:
        raise ValueError("phonon level mismatch")
    seg = state.segment
    seg.check_within(lattice.num_sites)
    ns, levels = lattice.num_sites, lattice.phonon_levels
    full = np.zeros((ns,) + (levels,) * ns)
    index = [slice(seg.start, seg.stop)]
    index += [slice(None) if seg.start <= i < seg.stop else 0 for i in range(ns)]
    full[tuple(index)] = state.tensor
    return full.reshape(-1)


def dense_effective_problem(states: list[SegmentState], lattice: LatticeSpec,
                            cap: int = FULL_CAP) -> EffectiveProblem:
    """``H_eff`` and ``S`` from explicitly embedded vectors."""
    h = full_hamiltonian(lattice, cap)
    vecs = np.array([embed(s, lattice, cap) for s in states])
    hv = np.array([h.matvec(v) for v in vecs])
    s_mat = vecs @ vecs.T
    h_mat = vecs @ hv.T
    return EffectiveProblem(0.5 * (h_mat + h_mat.T), 0.5 * (s_mat + s_mat.T),
                            [s.segment for s in states])
