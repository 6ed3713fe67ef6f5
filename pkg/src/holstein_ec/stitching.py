"""Lattice stitching by eigenvector continuation.

Training vectors are segment ground states embedded with the phonon vacuum on
every site outside the segment.  Overlaps and matrix elements of the full
lattice Hamiltonian between two such vectors are evaluated by contracting the
segment amplitude tensors over the sites the segments share, so the full
Hilbert space is never built.
"""
from __future__ import annotations

import hashlib
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .hamiltonian import LatticeSpec, SegmentSpec, build_segment_hamiltonian, oscillator_ladder
from .solver import DEFAULT_TOL, EigenResult, dense_lowest_eigenpair, lowest_eigenpair

log = logging.getLogger(__name__)

DEFAULT_S_CUTOFF = 1e-10


class StitchingError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SegmentState:
    """Segment amplitudes, implicitly tensored with the vacuum on all other sites."""

    segment: SegmentSpec
    amplitudes: np.ndarray
    phonon_levels: int

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=np.float64).ravel()
        expected = self.segment.size * self.phonon_levels**self.segment.size
        if amps.size != expected:
            raise StitchingError(
                f"segment of {self.segment.size} sites x {self.phonon_levels} levels needs "
                f"{expected} amplitudes, got {amps.size}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > 1e-10:
            raise StitchingError(f"segment amplitudes must be unit norm, got {norm!r}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def translated(self, start: int) -> "SegmentState":
        return SegmentState(SegmentSpec(start, self.segment.size), self.amplitudes,
                            self.phonon_levels)

    @property
    def tensor(self) -> np.ndarray:
        n = self.segment.size
        return self.amplitudes.reshape((n,) + (self.phonon_levels,) * n)

    @property
    def fingerprint(self) -> str:
        return hashlib.sha1(self.amplitudes.tobytes()).hexdigest()


@dataclass(frozen=True)
class EffectiveProblem:
    h_eff: np.ndarray
    s: np.ndarray
    labels: list[SegmentSpec]

    @property
    def k(self) -> int:
        return self.h_eff.shape[0]


@dataclass(frozen=True)
class EcResult:
    energy: float
    coefficients: np.ndarray
    retained_modes: int


@dataclass
class SolverConfig:
    tol: float = DEFAULT_TOL
    max_iter: int = 5000
    krylov_dim: int = 64
    seed: int = 0
    s_cutoff: float = DEFAULT_S_CUTOFF


@dataclass
class EcRun:
    result: EcResult
    problem: EffectiveProblem
    segment_dimension: int
    segment_energies: dict[int, float]
    residuals: dict[int, float]
    s_cutoff: float
    s_min_eigenvalue: float
    extra: dict = field(default_factory=dict)

    @property
    def energy(self) -> float:
        return self.result.energy

    @property
    def k(self) -> int:
        return self.problem.k

    @property
    def retained_rank(self) -> int:
        return self.result.retained_modes


def generate_segments(num_sites: int, segment_size: int,
                      include_overlaps: bool) -> list[SegmentSpec]:
    """Disjoint tiles, plus every window straddling a tile boundary when ``include_overlaps``.

    The union of tiles and straddling windows is every contiguous window of
    ``segment_size`` sites, which is also what overlap mode returns when
    ``num_sites`` is not a multiple of ``segment_size``.
    """
    if not 1 <= segment_size <= num_sites:
        raise StitchingError(f"need 1 <= segment_size <= num_sites, got {segment_size}, {num_sites}")
    if include_overlaps:
        return [SegmentSpec(s, segment_size) for s in range(num_sites - segment_size + 1)]
    if num_sites % segment_size:
        raise StitchingError(
            f"{num_sites} sites cannot be tiled by segments of {segment_size}; "
            "use overlaps or a divisor segment size")
    return [SegmentSpec(s, segment_size) for s in range(0, num_sites, segment_size)]


def _shared(a: SegmentState, b: SegmentState):
    """Amplitude tensors of ``a`` and ``b`` restricted to zero occupation outside the shared sites.

    Returns ``(lo, hi, ta, tb)`` where ``[lo, hi)`` is the intersection and
    ``ta[p]`` is the phonon tensor over shared sites for the particle on global
    site ``a.start + p``.
    """
    lo = max(a.segment.start, b.segment.start)
    hi = min(a.segment.stop, b.segment.stop)
    hi = max(hi, lo)

    def restrict(state: SegmentState) -> np.ndarray:
        seg = state.segment
        index = [slice(None)]
        for site in seg.sites:
            index.append(slice(None) if lo <= site < hi else 0)
        return state.tensor[tuple(index)]

    return lo, hi, restrict(a), restrict(b)


def _check_pair(a: SegmentState, b: SegmentState) -> None:
    if a.phonon_levels != b.phonon_levels:
        raise StitchingError(
            f"phonon level mismatch: {a.phonon_levels} vs {b.phonon_levels}")


def _coupled(a: SegmentSpec, b: SegmentSpec) -> bool:
    return a.start <= b.stop and b.start <= a.stop


def overlap(a: SegmentState, b: SegmentState) -> float:
    _check_pair(a, b)
    lo, hi, ta, tb = _shared(a, b)
    if hi == lo:
        return 0.0
    pa = ta[lo - a.segment.start: hi - a.segment.start]
    pb = tb[lo - b.segment.start: hi - b.segment.start]
    return float(np.vdot(pa, pb))


def _apply_on_axis(op: np.ndarray, tensor: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(op, tensor, axes=([1], [axis])), 0, axis)


def cross_matrix_element(a: SegmentState, b: SegmentState, lattice: LatticeSpec) -> float:
    """``<a| H |b>`` for the full lattice Hamiltonian with every hopping present."""
    _check_pair(a, b)
    if a.phonon_levels != lattice.phonon_levels:
        raise StitchingError(
            f"state has {a.phonon_levels} phonon levels, lattice has {lattice.phonon_levels}")
    a.segment.check_within(lattice.num_sites)
    b.segment.check_within(lattice.num_sites)
    if not _coupled(a.segment, b.segment):
        return 0.0

    lo, hi, ta, tb = _shared(a, b)
    a0, b0 = a.segment.start, b.segment.start
    total = 0.0

    if hi > lo:
        pa = ta[lo - a0: hi - a0]
        pb = tb[lo - b0: hi - b0]
        nshared = hi - lo
        levels = lattice.phonon_levels
        # phonon number summed over shared sites; vacuum elsewhere
        quanta = np.zeros((levels,) * nshared)
        for axis in range(nshared):
            shape = [1] * nshared
            shape[axis] = levels
            quanta = quanta + np.arange(levels).reshape(shape)
        diag = lattice.onsite_energy + lattice.phonon_frequency * quanta
        total += float(np.sum(pa * pb * diag))

        if lattice.coupling != 0.0 and levels > 1:
            x = oscillator_ladder(levels).toarray()
            for p in range(nshared):
                # particle on shared site lo+p displaces that site's oscillator
                total += lattice.coupling * float(
                    np.vdot(pa[p], _apply_on_axis(x, pb[p], p)))

    for m in a.segment.sites:
        for n in (m - 1, m + 1):
            if b0 <= n < b.segment.stop:
                total -= lattice.hopping * float(np.vdot(ta[m - a0], tb[n - b0]))
    return total


def build_effective_problem(states: list[SegmentState], lattice: LatticeSpec) -> EffectiveProblem:
    if not states:
        raise StitchingError("need at least one training state")
    k = len(states)
    h = np.zeros((k, k))
    s = np.zeros((k, k))
    prints = [st.fingerprint for st in states]
    cache: dict[tuple, tuple[float, float]] = {}

    def pair(i: int, j: int) -> tuple[float, float]:
        a, b = states[i], states[j]
        if not _coupled(a.segment, b.segment):
            return 0.0, 0.0
        key = (prints[i], prints[j], a.segment.size, b.segment.size,
               b.segment.start - a.segment.start)
        if key not in cache:
            cache[key] = (overlap(a, b), cross_matrix_element(a, b, lattice))
        return cache[key]

    for i in range(k):
        for j in range(i, k):
            s_ij, h_ij = pair(i, j)
            if i != j:
                s_ji, h_ji = pair(j, i)
                s_ij, h_ij = 0.5 * (s_ij + s_ji), 0.5 * (h_ij + h_ji)
            s[i, j] = s[j, i] = s_ij
            h[i, j] = h[j, i] = h_ij

    dev = np.max(np.abs(np.diag(s) - 1.0))
    if dev > 1e-10:
        raise StitchingError(f"training vectors are not normalized (|S_ii - 1| = {dev:.2e})")
    np.fill_diagonal(s, 1.0)
    return EffectiveProblem(h, s, [st.segment for st in states])


def solve_generalized(problem: EffectiveProblem, s_cutoff: float = DEFAULT_S_CUTOFF) -> EcResult:
    """Lowest root of ``H c = E S c`` by canonical orthogonalization.

    Overlap modes with eigenvalue below ``s_cutoff * max_eigenvalue`` are discarded.
    """
    if not s_cutoff > 0:
        raise StitchingError("s_cutoff must be positive")
    s_vals, s_vecs = np.linalg.eigh(problem.s)
    keep = s_vals > s_cutoff * s_vals[-1]
    if s_vals[-1] <= 0 or not np.any(keep):
        raise StitchingError("overlap matrix has no modes above the cutoff")
    x = s_vecs[:, keep] / np.sqrt(s_vals[keep])
    h_ortho = x.T @ problem.h_eff @ x
    h_ortho = 0.5 * (h_ortho + h_ortho.T)
    energies, vecs = np.linalg.eigh(h_ortho)
    coeffs = x @ vecs[:, 0]
    return EcResult(float(energies[0]), coeffs, int(np.count_nonzero(keep)))


def solve_segment(lattice: LatticeSpec, size: int, config: SolverConfig) -> EigenResult:
    op = build_segment_hamiltonian(lattice, SegmentSpec(0, size))
    if op.dimension <= 2 * config.krylov_dim:
        return dense_lowest_eigenpair(op)
    return lowest_eigenpair(op, tol=config.tol, max_iter=config.max_iter,
                            seed=config.seed, krylov_dim=config.krylov_dim)


def stitch(lattice: LatticeSpec, segments: list[SegmentSpec],
           vectors: dict[int, np.ndarray], config: SolverConfig) -> tuple[EffectiveProblem, EcResult]:
    """Replicate one amplitude array per segment size across ``segments`` and solve."""
    states = [SegmentState(seg, vectors[seg.size], lattice.phonon_levels) for seg in segments]
    problem = build_effective_problem(states, lattice)
    return problem, solve_generalized(problem, config.s_cutoff)


def ec_ground_energy(lattice: LatticeSpec, segment_size: int, include_overlaps: bool,
                     config: SolverConfig | None = None) -> EcRun:
    config = config or SolverConfig()
    segments = generate_segments(lattice.num_sites, segment_size, include_overlaps)
    t0 = time.perf_counter()
    vectors, energies, residuals = {}, {}, {}
    # translational reuse: every segment of a given size has the same Hamiltonian
    for size in sorted({seg.size for seg in segments}):
        res = solve_segment(lattice, size, config)
        vectors[size], energies[size], residuals[size] = res.vector, res.energy, res.residual_norm
    t1 = time.perf_counter()
    problem, result = stitch(lattice, segments, vectors, config)
    log.debug("segments solved in %.3fs, stitched k=%d in %.3fs",
              t1 - t0, problem.k, time.perf_counter() - t1)
    return EcRun(result, problem,
                 segment_dimension=segment_size * lattice.phonon_levels**segment_size,
                 segment_energies=energies, residuals=residuals, s_cutoff=config.s_cutoff,
                 s_min_eigenvalue=float(np.linalg.eigvalsh(problem.s)[0]))
