"""Brute-force Kronecker-vectorized references used by tests and rate checks.

Everything here is deliberately simple and O((n m)^3); the size cap keeps the
solves affordable.  The vectorization convention is column-major:
vec(X) stacks the columns of X, so that vec(A X B) = (B^T kron A) vec(X).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dense import real_schur, schur_eigenvalues
from .errors import (
    InvalidWindowError,
    NoUniqueSolutionError,
    OracleTooLargeError,
)
from .problem import ProblemSpec, as_dense

ORACLE_SIZE_CAP = 4096


def vec(X) -> np.ndarray:
    """Column-major vectorization."""
    return np.asarray(X).reshape(-1, order="F")


def unvec(x, n: int, m: int) -> np.ndarray:
    """Inverse of :func:`vec`."""
    return np.asarray(x).reshape(n, m, order="F")


@dataclass
class VectorizedSystem:
    """Vectorized form of one problem: L x + P x = -y with b = n*m unknowns."""

    L: np.ndarray
    P: np.ndarray
    y: np.ndarray
    n: int
    m: int


@dataclass
class IterationMatrix:
    """Iteration matrix G = -L^{-1} P and its eigenvalue moduli, descending."""

    G: np.ndarray
    moduli: np.ndarray


def kron_assemble(spec: ProblemSpec, cap: int = ORACLE_SIZE_CAP) -> VectorizedSystem:
    """Assemble the Kronecker-vectorized system of a problem spec."""
    n, m = spec.n, spec.m
    b = n * m
    if b > cap:
        raise OracleTooLargeError(f"vectorized size {b} exceeds cap {cap}")
    A = as_dense(spec.A)
    B = as_dense(spec.B)
    L = np.kron(np.eye(m), A) + np.kron(B.T, np.eye(n))
    P = np.zeros((b, b))
    for Nk, Hk in zip(spec.N, spec.H):
        P += np.kron(as_dense(Hk).T, as_dense(Nk))
    P *= spec.pi_weight
    return VectorizedSystem(L=L, P=P, y=vec(spec.rhs_dense()), n=n, m=m)


def direct_solve_vec(sys: VectorizedSystem) -> np.ndarray:
    """Reference solution: solve (L + P) x = -y and reshape to n x m."""
    K = sys.L + sys.P
    try:
        x = np.linalg.solve(K, -sys.y)
    except np.linalg.LinAlgError as exc:
        raise NoUniqueSolutionError(f"vectorized system is singular: {exc}") from exc
    resid = K @ x + sys.y
    scale = max(np.linalg.norm(sys.y), np.linalg.norm(K @ x), 1e-300)
    if not np.all(np.isfinite(x)) or np.linalg.norm(resid) > 1e-6 * scale:
        raise NoUniqueSolutionError("vectorized system is numerically singular")
    return unvec(x, sys.n, sys.m)


def iteration_spectrum(spec: ProblemSpec, cap: int = ORACLE_SIZE_CAP) -> IterationMatrix:
    """Iteration matrix of the splitting fixed point and its eigenvalue moduli.

    The moduli govern the convergence rates: the plain iteration contracts
    like the largest modulus, the w-window extrapolated one like the w-th.
    """
    sys = kron_assemble(spec, cap=cap)
    try:
        G = -np.linalg.solve(sys.L, sys.P)
    except np.linalg.LinAlgError as exc:
        raise NoUniqueSolutionError(f"two-term operator is singular: {exc}") from exc
    eigs = schur_eigenvalues(real_schur(G).R)
    moduli = np.sort(np.abs(eigs))[::-1]
    return IterationMatrix(G=G, moduli=moduli)


def rre_reference(iterates, w: int) -> np.ndarray:
    """Ground-truth extrapolant over w+1 vector iterates.

    Solves min ||U gamma|| subject to sum(gamma) = 1 by eliminating the last
    coefficient and calling a minimum-norm least-squares solver; combines the
    first w iterates with the optimal coefficients.
    """
    if w < 1:
        raise InvalidWindowError(f"window must be >= 1, got {w}")
    if len(iterates) != w + 1:
        raise InvalidWindowError(
            f"need {w + 1} iterates for window {w}, got {len(iterates)}")
    xs = [np.asarray(x, dtype=float).reshape(-1) for x in iterates]
    U = np.column_stack([xs[i + 1] - xs[i] for i in range(w)])
    if w == 1:
        gamma = np.array([1.0])
    else:
        M = U[:, : w - 1] - U[:, w - 1:]
        g, *_ = np.linalg.lstsq(M, -U[:, w - 1], rcond=None)
        gamma = np.append(g, 1.0 - g.sum())
    out = np.zeros_like(xs[0])
    for gi, xi in zip(gamma, xs[:w]):
        out += gi * xi
    return out
