"""Holstein Hamiltonians on open 1D chains and the analytic benchmarks.

    H = eps * sum_i n_i - t * sum_<ij> (a_i^+ a_j + h.c.)
        + omega * sum_i b_i^+ b_i + g * sum_i n_i (b_i^+ + b_i)

Oscillators are truncated to ``phonon_levels`` states with a hard cap:
``b^+`` acting on the top level gives zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .basis import BasisConfig, basis_size, occupation_table


@dataclass(frozen=True)
class LatticeSpec:
    """Open nearest-neighbour chain of ``num_sites`` sites; energies in units of ``hopping``."""

    num_sites: int
    phonon_levels: int
    phonon_frequency: float
    coupling: float
    hopping: float = 1.0
    onsite_energy: float = 0.0

    def __post_init__(self) -> None:
        if self.num_sites < 1:
            raise ValueError(f"num_sites must be >= 1, got {self.num_sites}")
        if self.phonon_levels < 1:
            raise ValueError(f"phonon_levels must be >= 1, got {self.phonon_levels}")
        if not self.hopping > 0:
            raise ValueError(f"hopping must be > 0, got {self.hopping}")
        if not self.phonon_frequency > 0:
            raise ValueError(f"phonon_frequency must be > 0, got {self.phonon_frequency}")
        if self.coupling < 0:
            raise ValueError(f"coupling must be >= 0, got {self.coupling}")

    @classmethod
    def from_lambda(cls, num_sites: int, phonon_levels: int, phonon_frequency: float,
                    lam: float, hopping: float = 1.0, onsite_energy: float = 0.0) -> "LatticeSpec":
        g = g_for_lambda(lam, hopping, phonon_frequency)
        return cls(num_sites, phonon_levels, phonon_frequency, g, hopping, onsite_energy)

    @property
    def lam(self) -> float:
        return coupling_lambda(self.coupling, self.hopping, self.phonon_frequency)

    def same_model(self, other: "LatticeSpec") -> bool:
        """True when everything except ``num_sites`` agrees."""
        return (self.phonon_levels, self.phonon_frequency, self.coupling,
                self.hopping, self.onsite_energy) == (
            other.phonon_levels, other.phonon_frequency, other.coupling,
            other.hopping, other.onsite_energy)


@dataclass(frozen=True)
class SegmentSpec:
    """Contiguous run of global site indices ``start .. start+size-1``."""

    start: int
    size: int

    def __post_init__(self) -> None:
        if self.size < 1:
            raise ValueError("segment must contain at least one site")
        if self.start < 0:
            raise ValueError("segment start must be >= 0")

    @classmethod
    def from_sites(cls, sites: Sequence[int]) -> "SegmentSpec":
        sites = [int(s) for s in sites]
        if not sites:
            raise ValueError("segment must contain at least one site")
        if sites != list(range(sites[0], sites[0] + len(sites))):
            raise ValueError(f"segment sites must be consecutive, got {sites}")
        return cls(sites[0], len(sites))

    @property
    def sites(self) -> tuple[int, ...]:
        return tuple(range(self.start, self.start + self.size))

    @property
    def stop(self) -> int:
        return self.start + self.size

    def check_within(self, num_sites: int) -> None:
        if self.stop > num_sites:
            raise ValueError(f"segment {self.sites} exceeds lattice of {num_sites} sites")


class SparseOperator:
    """Real symmetric sparse matrix (CSR) with matvec."""

    def __init__(self, matrix):
        m = sp.csr_matrix(matrix, dtype=np.float64)
        if m.shape[0] != m.shape[1]:
            raise ValueError(f"operator must be square, got {m.shape}")
        m.sum_duplicates()
        m.sort_indices()
        if m.nnz and not np.all(np.isfinite(m.data)):
            raise ValueError("operator has non-finite entries")
        self.matrix = m

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x

    def __matmul__(self, x):
        return self.matrix @ x

    def element(self, i: int, j: int) -> float:
        return float(self.matrix[i, j])

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def is_symmetric(self) -> bool:
        diff = self.matrix - self.matrix.T
        return diff.nnz == 0 or not np.any(diff.data)

    def gershgorin_bounds(self) -> tuple[float, float]:
        m = self.matrix
        diag = m.diagonal()
        radius = np.asarray(abs(m).sum(axis=1)).ravel() - np.abs(diag)
        return float(np.min(diag - radius)), float(np.max(diag + radius))

    def __repr__(self) -> str:
        return f"SparseOperator(dimension={self.dimension}, nnz={self.nnz})"


def oscillator_ladder(levels: int) -> sp.csr_matrix:
    """Truncated ``b^+ + b`` on ``levels`` states."""
    off = np.sqrt(np.arange(1, levels, dtype=np.float64))
    return sp.diags([off, off], [-1, 1], shape=(levels, levels), format="csr")


def chain_hamiltonian(num_sites: int, phonon_levels: int, phonon_frequency: float,
                      coupling: float, hopping: float = 1.0, onsite_energy: float = 0.0,
                      ) -> SparseOperator:
    """Holstein Hamiltonian of an isolated open chain of ``num_sites`` sites."""
    basis_size(num_sites, phonon_levels)
    cfg = BasisConfig(num_sites, phonon_levels)
    ph_dim = cfg.phonon_dimension

    occ = occupation_table(num_sites, phonon_levels)
    phonon_energy = phonon_frequency * occ.sum(axis=1).astype(np.float64)
    diag = np.tile(phonon_energy + onsite_energy, num_sites)
    h = sp.diags(diag, 0, format="csr")

    if num_sites > 1:
        hop = sp.diags([-hopping * np.ones(num_sites - 1)] * 2, [-1, 1],
                       shape=(num_sites, num_sites), format="csr")
        h = h + sp.kron(hop, sp.identity(ph_dim, format="csr"), format="csr")

    if coupling != 0.0 and phonon_levels > 1:
        x = oscillator_ladder(phonon_levels)
        for i in range(num_sites):
            proj = sp.csr_matrix(([1.0], ([i], [i])), shape=(num_sites, num_sites))
            x_i = sp.kron(sp.kron(sp.identity(phonon_levels**i), x),
                          sp.identity(phonon_levels ** (num_sites - i - 1)), format="csr")
            h = h + coupling * sp.kron(proj, x_i, format="csr")
    return SparseOperator(h)


def build_segment_hamiltonian(lattice: LatticeSpec, segment: SegmentSpec) -> SparseOperator:
    """Restriction of the lattice Hamiltonian to ``segment``; hoppings leaving it are dropped."""
    segment.check_within(lattice.num_sites)
    return chain_hamiltonian(segment.size, lattice.phonon_levels, lattice.phonon_frequency,
                             lattice.coupling, lattice.hopping, lattice.onsite_energy)


def coupling_lambda(g: float, t: float, omega: float) -> float:
    """Dimensionless coupling ``g**2 / (2 t omega)``."""
    if not t > 0 or not omega > 0:
        raise ValueError(f"t and omega must be positive, got t={t}, omega={omega}")
    return g * g / (2.0 * t * omega)


def g_for_lambda(lam: float, t: float, omega: float) -> float:
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    if not t > 0 or not omega > 0:
        raise ValueError(f"t and omega must be positive, got t={t}, omega={omega}")
    return math.sqrt(2.0 * t * omega * lam)


def strong_coupling_energy(eps: float, t: float, omega: float, lam: float) -> float:
    """Third-order strong-coupling polaron energy ``eps - 2 lam t - t/lam - 2 t exp(-2 lam t/omega)``."""
    if not lam > 0:
        raise ValueError(f"lambda must be > 0, got {lam}")
    if not omega > 0:
        raise ValueError(f"omega must be > 0, got {omega}")
    return eps - 2.0 * lam * t - t / lam - 2.0 * t * math.exp(-2.0 * lam * t / omega)


def tight_binding_ground(num_sites: int, t: float = 1.0) -> float:
    """Lowest single-particle energy of an open chain, ``-2 t cos(pi/(N+1))``."""
    return -2.0 * t * math.cos(math.pi / (num_sites + 1))
