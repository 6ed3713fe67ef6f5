"""Statevector simulation of the EC-VQE path.

Qubit ``q`` is the ``q``-th tensor factor, i.e. bit ``n-1-q`` of a basis index;
Pauli words are written in the same order (``"XI"`` acts with X on qubit 0).
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize

from .hamiltonian import LatticeSpec, SegmentSpec, SparseOperator, build_segment_hamiltonian
from .stitching import EcRun, SolverConfig, generate_segments, stitch

PAULI_CAP = 14
_LETTERS = "IXYZ"
# rows: I, X, Y, Z coefficient from the 2x2 block [M00, M01, M10, M11];
# the Y row omits the factor i, restored from the Y count afterwards
_FORWARD = 0.5 * np.array([[1, 0, 0, 1],
                           [0, 1, 1, 0],
                           [0, 1, -1, 0],
                           [1, 0, 0, -1]], dtype=np.float64)


class VqeError(ValueError):
    pass


def qubits_for_segment(segment_size: int, phonon_levels: int) -> int:
    """Qubits needed to hold one segment basis: ``ceil(log2(N_k * N_p**N_k))``."""
    if segment_size < 1 or phonon_levels < 1:
        raise VqeError("segment_size and phonon_levels must be >= 1")
    dim = segment_size * phonon_levels**segment_size
    if dim > 2**63 - 1:
        raise VqeError(f"segment dimension {dim} overflows the index type")
    return (dim - 1).bit_length()


def qubits_for_full(num_sites: int, phonon_levels: int) -> int:
    """``ceil(log2(N_s * N_p**N_s))`` evaluated in log space."""
    if num_sites < 1 or phonon_levels < 1:
        raise VqeError("num_sites and phonon_levels must be >= 1")
    bits = math.log2(num_sites) + num_sites * math.log2(phonon_levels)
    n = math.ceil(bits - 1e-12)
    # guard the rounding when the dimension is an exact power of two
    if abs(bits - round(bits)) < 1e-9:
        n = round(bits)
    return max(n, 0)


def pad_to_qubits(op: SparseOperator, n: int, penalty: float | None = None) -> SparseOperator:
    """Embed ``op`` in ``2**n`` dimensions with ``penalty`` on the padded diagonal.

    The default penalty sits one spectral width plus one above the Gershgorin
    upper bound, so no padded state can lower the energy.
    """
    dim = 2**n
    if op.dimension > dim:
        raise VqeError(f"dimension {op.dimension} does not fit in {n} qubits")
    if op.dimension == dim:
        return op
    if penalty is None:
        lo, hi = op.gershgorin_bounds()
        penalty = hi + (hi - lo) + 1.0
    pad = sp.identity(dim - op.dimension, format="csr") * penalty
    return SparseOperator(sp.block_diag([op.matrix, pad], format="csr"))


@dataclass(frozen=True)
class PauliExpansion:
    num_qubits: int
    terms: list[tuple[float, str]]

    def _masks(self, word: str) -> tuple[int, int, int]:
        flip = zmask = ny = 0
        for q, letter in enumerate(word):
            bit = 1 << (self.num_qubits - 1 - q)
            if letter in "XY":
                flip |= bit
            if letter in "YZ":
                zmask |= bit
            ny += letter == "Y"
        return flip, zmask, ny

    def _phases(self, zmask: int, ny: int) -> np.ndarray:
        idx = np.arange(2**self.num_qubits)
        parity = np.zeros(idx.size, dtype=np.int64)
        bits = idx & zmask
        while np.any(bits):
            parity ^= bits & 1
            bits >>= 1
        # Y|b> = i (-1)^b |1-b>; even Y count keeps the phase real
        return ((-1.0) ** (ny // 2)) * (1.0 - 2.0 * parity)

    def to_matrix(self) -> np.ndarray:
        """Dense reconstruction from the stored terms, string by string."""
        dim = 2**self.num_qubits
        out = np.zeros((dim, dim))
        cols = np.arange(dim)
        for coeff, word in self.terms:
            flip, zmask, ny = self._masks(word)
            out[cols ^ flip, cols] += coeff * self._phases(zmask, ny)
        return out

    def expectation(self, state: np.ndarray) -> float:
        state = np.asarray(state)
        if state.size != 2**self.num_qubits:
            raise VqeError(f"state length {state.size} != 2**{self.num_qubits}")
        cols = np.arange(state.size)
        total = 0.0
        for coeff, word in self.terms:
            flip, zmask, ny = self._masks(word)
            total += coeff * float(np.dot(state[cols ^ flip], self._phases(zmask, ny) * state))
        return total


def pauli_decompose(op: SparseOperator | np.ndarray, n: int, drop_tol: float = 1e-12,
                    cap: int = PAULI_CAP) -> PauliExpansion:
    """All ``4**n`` Pauli coefficients by a per-qubit 4x4 transform, O(n 4**n)."""
    if n > cap:
        raise VqeError(f"{n} qubits exceeds the Pauli decomposition cap {cap}")
    mat = op.toarray() if isinstance(op, SparseOperator) else np.asarray(op, dtype=np.float64)
    if mat.shape != (2**n, 2**n):
        raise VqeError(f"matrix shape {mat.shape} is not 2**{n} square")
    if not np.allclose(mat, mat.T, atol=1e-12, rtol=0):
        raise VqeError("Pauli decomposition requires a real symmetric matrix")
    t = mat.reshape((2,) * (2 * n))
    order = [ax for q in range(n) for ax in (q, n + q)]
    t = t.transpose(order).reshape((4,) * n) if n else t.reshape(())
    for q in range(n):
        t = np.moveaxis(np.tensordot(_FORWARD, t, axes=([1], [q])), 0, q)
    coeffs = t.reshape(-1)

    digits = np.indices((4,) * n).reshape(n, -1) if n else np.zeros((0, 1), dtype=int)
    ny = np.sum(digits == 2, axis=0)
    odd = ny % 2 == 1
    leak = np.max(np.abs(coeffs[odd])) if np.any(odd) else 0.0
    if leak > max(drop_tol, 1e-10):
        raise VqeError(f"odd-Y coefficient {leak:.2e} for a symmetric input")
    coeffs = np.where(odd, 0.0, coeffs * np.where(ny % 4 == 2, -1.0, 1.0))
    keep = np.flatnonzero(np.abs(coeffs) > drop_tol)
    terms = [(float(coeffs[i]), "".join(_LETTERS[d] for d in digits[:, i])) for i in keep]
    return PauliExpansion(n, terms)


def pauli_coefficient_naive(matrix: np.ndarray, word: str) -> float:
    """``Tr(P M) / 2**n`` from an explicit Kronecker product."""
    mats = {"I": np.eye(2), "X": np.array([[0, 1], [1, 0]]),
            "Y": np.array([[0, -1j], [1j, 0]]), "Z": np.diag([1.0, -1.0])}
    p = np.ones((1, 1))
    for letter in word:
        p = np.kron(p, mats[letter])
    value = np.trace(p @ matrix) / 2 ** len(word)
    return float(value.real)


@dataclass(frozen=True)
class AnsatzConfig:
    """Layered R_Y / CNOT-chain circuit.

    ``parameters`` has shape ``(layers, num_qubits)``.  Layer 0 rotates the
    initial ``|0...0>``; each following layer is preceded by the CNOT chain.
    With ``reduced`` the circuit ends on an entangler instead of a rotation
    layer, giving ``n*p`` angles instead of ``n*(p+1)``.
    """

    num_qubits: int
    depth: int
    parameters: np.ndarray
    reduced: bool = False

    def __post_init__(self) -> None:
        params = np.asarray(self.parameters, dtype=np.float64)
        expected = parameter_count(self.num_qubits, self.depth, self.reduced)
        if params.size != expected:
            raise VqeError(
                f"{self.num_qubits} qubits at depth {self.depth} need {expected} angles, "
                f"got {params.size}")
        object.__setattr__(self, "parameters", params.reshape(-1))


def parameter_count(n: int, p: int, reduced: bool = False) -> int:
    if n < 1 or p < 0:
        raise VqeError("need n >= 1 and p >= 0")
    if reduced and p < 1:
        raise VqeError("reduced ansatz needs depth >= 1")
    return n * p if reduced else n * (p + 1)


def _ry_layer(state: np.ndarray, angles: np.ndarray, n: int) -> np.ndarray:
    for q in range(n):
        c, s = math.cos(0.5 * angles[q]), math.sin(0.5 * angles[q])
        v = state.reshape(2**q, 2, -1)
        a0, a1 = v[:, 0, :].copy(), v[:, 1, :]
        v[:, 0, :] = c * a0 - s * a1
        v[:, 1, :] = s * a0 + c * a1
    return state


def _cnot_chain(state: np.ndarray, n: int) -> np.ndarray:
    for q in range(n - 1):
        v = state.reshape(2**q, 2, 2, -1)
        tmp = v[:, 1, 0, :].copy()
        v[:, 1, 0, :] = v[:, 1, 1, :]
        v[:, 1, 1, :] = tmp
    return state


def ansatz_state(config: AnsatzConfig) -> np.ndarray:
    n = config.num_qubits
    layers = config.parameters.reshape(-1, n)
    state = np.zeros(2**n)
    state[0] = 1.0
    if config.reduced:
        for angles in layers:
            _ry_layer(state, angles, n)
            _cnot_chain(state, n)
        return state
    _ry_layer(state, layers[0], n)
    for angles in layers[1:]:
        _cnot_chain(state, n)
        _ry_layer(state, angles, n)
    return state


def expectation(op: SparseOperator | PauliExpansion | np.ndarray, state: np.ndarray) -> float:
    state = np.asarray(state, dtype=np.float64)
    if isinstance(op, PauliExpansion):
        return op.expectation(state)
    dim = op.dimension if isinstance(op, SparseOperator) else op.shape[0]
    if state.size != dim:
        raise VqeError(f"state length {state.size} != operator dimension {dim}")
    return float(state @ (op @ state))


def parameter_shift_gradient(energy: Callable[[np.ndarray], float],
                             params: np.ndarray) -> np.ndarray:
    """Exact gradient for R_Y angles: ``(E(θ+π/2) - E(θ-π/2)) / 2``."""
    grad = np.empty_like(params)
    shifted = params.copy()
    for i in range(params.size):
        shifted[i] = params[i] + 0.5 * math.pi
        plus = energy(shifted)
        shifted[i] = params[i] - 0.5 * math.pi
        minus = energy(shifted)
        shifted[i] = params[i]
        grad[i] = 0.5 * (plus - minus)
    return grad


@dataclass
class OptimizerConfig:
    method: str = "nelder-mead"  # "parameter-shift", or "none" to evaluate the start only
    restarts: int = 8
    max_evaluations: int = 20_000
    xatol: float = 1e-8
    fatol: float = 1e-12
    gtol: float = 1e-10


@dataclass
class VqeOutcome:
    energy: float
    parameters: np.ndarray
    evaluations: int
    restarts_used: int
    state: np.ndarray = field(repr=False, default=None)
    restart_energies: list[float] = field(default_factory=list)


def vqe_minimize(op: SparseOperator, n: int, p: int,
                 optimizer: OptimizerConfig | None = None, seed: int = 0,
                 reduced: bool = False, initial: np.ndarray | None = None) -> VqeOutcome:
    """Minimise the ansatz energy from ``restarts`` seeded starting points.

    ``initial``, when given, replaces the first random starting point.
    """
    optimizer = optimizer or OptimizerConfig()
    if op.dimension != 2**n:
        raise VqeError(f"operator dimension {op.dimension} != 2**{n}; pad it first")
    count = parameter_count(n, p, reduced)
    rng = np.random.default_rng(seed)
    starts = [rng.uniform(-math.pi, math.pi, count) for _ in range(max(1, optimizer.restarts))]
    if initial is not None:
        starts[0] = np.asarray(initial, dtype=np.float64).reshape(count)

    evaluations = 0

    def energy(theta: np.ndarray) -> float:
        nonlocal evaluations
        evaluations += 1
        return expectation(op, ansatz_state(AnsatzConfig(n, p, theta, reduced)))

    best_e, best_x = math.inf, starts[0]
    found = []
    for x0 in starts:
        if optimizer.method == "none":
            found.append(energy(x0))
            if found[-1] < best_e:
                best_e, best_x = found[-1], np.array(x0)
            continue
        if optimizer.method == "nelder-mead":
            res = minimize(energy, x0, method="Nelder-Mead",
                           options={"maxfev": optimizer.max_evaluations, "adaptive": True,
                                    "xatol": optimizer.xatol, "fatol": optimizer.fatol})
        elif optimizer.method == "parameter-shift":
            res = minimize(energy, x0, method="BFGS",
                           jac=lambda th: parameter_shift_gradient(energy, th),
                           options={"maxiter": max(1, optimizer.max_evaluations // (2 * count + 1)),
                                    "gtol": optimizer.gtol})
        else:
            raise VqeError(f"unknown optimizer method {optimizer.method!r}")
        value = energy(res.x)
        found.append(value)
        if value < best_e:
            best_e, best_x = value, np.array(res.x)
    state = ansatz_state(AnsatzConfig(n, p, best_x, reduced))
    return VqeOutcome(best_e, best_x, evaluations, len(starts), state, found)


@dataclass
class VqeSettings:
    depth: int = 2
    reduced: bool = False
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    penalty: float | None = None
    initial: np.ndarray | None = None  # starting angles for the first restart


def vqe_segment_state(lattice: LatticeSpec, size: int, settings: VqeSettings,
                      seed: int = 0, initial: np.ndarray | None = None):
    """VQE ground state of one segment, truncated to the physical block and renormalised.

    Returns ``(vector, outcome, leakage_norm, n_qubits)``.
    """
    op = build_segment_hamiltonian(lattice, SegmentSpec(0, size))
    n = qubits_for_segment(size, lattice.phonon_levels)
    padded = pad_to_qubits(op, n, settings.penalty)
    outcome = vqe_minimize(padded, n, settings.depth, settings.optimizer, seed,
                           settings.reduced, initial)
    physical = outcome.state[: op.dimension]
    leakage = float(np.linalg.norm(outcome.state[op.dimension:]))
    vec = physical / np.linalg.norm(physical)
    return vec, outcome, leakage, n


def ec_vqe_ground_energy(lattice: LatticeSpec, segment_size: int, include_overlaps: bool,
                         settings: VqeSettings | None = None,
                         config: SolverConfig | None = None, seed: int = 0) -> EcRun:
    settings = settings or VqeSettings()
    config = config or SolverConfig()
    segments = generate_segments(lattice.num_sites, segment_size, include_overlaps)
    vectors, energies, leaks, outcomes = {}, {}, {}, {}
    n_qubits = 0
    t0 = time.perf_counter()
    for size in sorted({seg.size for seg in segments}):
        vec, outcome, leak, n_qubits = vqe_segment_state(lattice, size, settings, seed,
                                                          settings.initial)
        vectors[size], energies[size], leaks[size], outcomes[size] = (
            vec, outcome.energy, leak, outcome)
    problem, result = stitch(lattice, segments, vectors, config)
    return EcRun(result, problem,
                 segment_dimension=segment_size * lattice.phonon_levels**segment_size,
                 segment_energies=energies, residuals={}, s_cutoff=config.s_cutoff,
                 s_min_eigenvalue=float(np.linalg.eigvalsh(problem.s)[0]),
                 extra={"n_qubits": n_qubits, "leakage": leaks,
                        "evaluations": {k: o.evaluations for k, o in outcomes.items()},
                        "vqe_seconds": time.perf_counter() - t0})
