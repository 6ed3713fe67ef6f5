"""Lowest eigenpair of a real symmetric operator.

:func:`lowest_eigenpair` is a thick-restart Lanczos iteration with full
reorthogonalization (Rayleigh-Ritz on the stored basis); :func:`dense_lowest_eigenpair`
is the LAPACK route used for small problems and as a test oracle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hamiltonian import SparseOperator

DEFAULT_TOL = 1e-9
DEFAULT_KRYLOV_DIM = 64
DENSE_CAP = 20_000


class ConvergenceError(RuntimeError):
    """Raised when the iteration runs out of budget; carries the best residual."""

    def __init__(self, message: str, residual_norm: float):
        super().__init__(message)
        self.residual_norm = residual_norm


@dataclass(frozen=True)
class EigenResult:
    energy: float
    vector: np.ndarray
    residual_norm: float
    iterations: int = 0


def _fix_sign(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v)))
    return -v if v[k] < 0 else v


def _finish(op: SparseOperator, v: np.ndarray, iterations: int) -> EigenResult:
    v = _fix_sign(v / np.linalg.norm(v))
    hv = op.matvec(v)
    energy = math.fsum(v * hv)
    residual = float(np.linalg.norm(hv - energy * v))
    return EigenResult(energy, v, residual, iterations)


def dense_lowest_eigenpair(op: SparseOperator, cap: int = DENSE_CAP) -> EigenResult:
    if op.dimension == 0:
        raise ValueError("operator has dimension 0")
    if op.dimension > cap:
        raise ValueError(f"dimension {op.dimension} exceeds dense cap {cap}")
    _, vecs = np.linalg.eigh(op.toarray())
    return _finish(op, vecs[:, 0], 0)


def lowest_eigenpair(op: SparseOperator, tol: float = DEFAULT_TOL, max_iter: int = 2000,
                     seed: int = 0, krylov_dim: int = DEFAULT_KRYLOV_DIM,
                     keep: int | None = None) -> EigenResult:
    """Lowest eigenpair with ``||H v - E v|| <= tol``.

    ``max_iter`` bounds the total number of matrix-vector products.  The
    starting vector is drawn from ``numpy.random.default_rng(seed)``; the
    returned vector has its largest-magnitude entry positive.
    """
    n = op.dimension
    if n == 0:
        raise ValueError("operator has dimension 0")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if n <= max(krylov_dim, 2):
        res = dense_lowest_eigenpair(op, cap=max(krylov_dim, 2))
        if res.residual_norm > tol:
            raise ConvergenceError(
                f"dense fallback residual {res.residual_norm:.3e} above tol", res.residual_norm)
        return res

    m = krylov_dim
    keep = keep if keep is not None else max(1, m // 4)
    rng = np.random.default_rng(seed)
    V = np.empty((m + 1, n))
    W = np.empty((m + 1, n))  # W[j] = H V[j]
    v0 = rng.standard_normal(n)
    V[0] = v0 / np.linalg.norm(v0)
    W[0] = op.matvec(V[0])
    size = 1
    matvecs = 1
    best = math.inf

    while True:
        # expand the basis with H v_last, orthogonalized twice against everything
        while size < m + 1:
            w = W[size - 1].copy()
            for _ in range(2):
                w -= V[:size].T @ (V[:size] @ w)
            norm = np.linalg.norm(w)
            if norm < 1e-12 * max(1.0, np.linalg.norm(W[size - 1])):
                # invariant subspace: restart direction from fresh noise
                w = rng.standard_normal(n)
                for _ in range(2):
                    w -= V[:size].T @ (V[:size] @ w)
                norm = np.linalg.norm(w)
            V[size] = w / norm
            W[size] = op.matvec(V[size])
            matvecs += 1
            size += 1
            if matvecs >= max_iter:
                break

        proj = V[:size] @ W[:size].T
        proj = 0.5 * (proj + proj.T)
        theta, y = np.linalg.eigh(proj)
        ritz = y[:, 0] @ V[:size]
        hritz = y[:, 0] @ W[:size]
        residual = float(np.linalg.norm(hritz - theta[0] * ritz))
        best = min(best, residual)
        if residual <= tol:
            res = _finish(op, ritz, matvecs)
            if res.residual_norm <= tol:
                return res
        if matvecs >= max_iter:
            raise ConvergenceError(
                f"lowest_eigenpair did not converge in {matvecs} matvecs "
                f"(best residual {best:.3e}, tol {tol:.1e})", best)

        # thick restart: keep the lowest Ritz vectors, continue from the residual
        k = min(keep, size - 1)
        Vk = y[:, :k].T @ V[:size]
        Wk = y[:, :k].T @ W[:size]
        r = hritz - theta[0] * ritz
        for _ in range(2):
            r -= Vk.T @ (Vk @ r)
        V[:k], W[:k] = Vk, Wk
        size = k
        rn = np.linalg.norm(r)
        if rn > 0:
            V[k] = r / rn
            W[k] = op.matvec(V[k])
            matvecs += 1
            size = k + 1
