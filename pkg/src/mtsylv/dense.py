"""Dense matrix kernels.

Thin QR, SVD and real Schur decompositions are delegated to LAPACK through
SciPy; the quasi-triangular Sylvester solve and the operator/residual
evaluations are implemented here.  All inputs and outputs are 2-D float
ndarrays (row-major).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import InvalidInputError, NumericalFailureError, SpectraOverlapError
from .problem import ProblemSpec, as_dense, check_finite


def _validated(M, name: str) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-D, got shape {M.shape}")
    check_finite(M, name)
    return M


def thin_qr(M) -> tuple[np.ndarray, np.ndarray]:
    """Economy QR factorization M = Q R with Q of min(rows, cols) columns.

    Zero-column input is legal and yields empty factors.
    """
    M = _validated(M, "M")
    if M.shape[1] == 0:
        k = 0
        return np.zeros((M.shape[0], k)), np.zeros((k, 0))
    Q, R = sla.qr(M, mode="economic")
    return Q, R


def svd(M) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD M = U diag(s) V^T with s descending and V (not V^T) returned."""
    M = _validated(M, "M")
    if min(M.shape) == 0:
        k = 0
        return (np.zeros((M.shape[0], k)), np.zeros(k), np.zeros((M.shape[1], k)))
    U, s, Vh = sla.svd(M, full_matrices=False)
    return U, s, Vh.T


@dataclass
class SchurForm:
    """Real Schur decomposition M = Q R Q^T.

    Q is orthogonal and R quasi-upper-triangular with 1x1 and 2x2 diagonal
    blocks (2x2 blocks carry complex-conjugate eigenvalue pairs).
    """

    Q: np.ndarray
    R: np.ndarray


def real_schur(M) -> SchurForm:
    """Real Schur form of a square matrix."""
    M = _validated(M, "M")
    if M.shape[0] != M.shape[1]:
        raise InvalidInputError("Schur decomposition needs a square matrix")
    try:
        R, Q = sla.schur(M, output="real")
    except sla.LinAlgError as exc:  # QR iteration failed to converge
        raise NumericalFailureError(f"Schur iteration did not converge: {exc}") from exc
    return SchurForm(Q=Q, R=R)


def quasi_triangular_blocks(R, tol: float = 0.0) -> list[tuple[int, int]]:
    """Half-open index ranges of the 1x1/2x2 diagonal blocks of a real Schur factor."""
    n = R.shape[0]
    blocks = []
    i = 0
    while i < n:
        if i + 1 < n and abs(R[i + 1, i]) > tol:
            blocks.append((i, i + 2))
            i += 2
        else:
            blocks.append((i, i + 1))
            i += 1
    return blocks


def schur_eigenvalues(R) -> np.ndarray:
    """Eigenvalues of a quasi-upper-triangular matrix, read off its diagonal blocks."""
    R = np.asarray(R, dtype=float)
    vals = []
    for i0, i1 in quasi_triangular_blocks(R):
        if i1 - i0 == 1:
            vals.append(complex(R[i0, i0]))
        else:
            a, b = R[i0, i0], R[i0, i0 + 1]
            c, d = R[i0 + 1, i0], R[i0 + 1, i0 + 1]
            mean = 0.5 * (a + d)
            disc = mean * mean - (a * d - b * c)
            root = np.sqrt(complex(disc))
            vals.extend([mean + root, mean - root])
    return np.array(vals, dtype=complex)


def _check_quasi_triangular(R, name: str):
    n = R.shape[0]
    if n != R.shape[1]:
        raise InvalidInputError(f"{name} must be square")
    if n > 2 and np.any(np.tril(R, -2) != 0.0):
        raise InvalidInputError(f"{name} has entries below its first subdiagonal")
    sub = np.diagonal(R, -1)
    if np.any((sub[:-1] != 0.0) & (sub[1:] != 0.0)):
        raise InvalidInputError(f"{name} has adjacent nonzero subdiagonal entries")


def solve_quasi_triangular_sylvester(Ra, Rb, C) -> np.ndarray:
    """Solve Ra X + X Rb = C for quasi-upper-triangular Ra, Rb.

    Proceeds block column by block column (left to right over Rb's diagonal
    blocks), with back substitution bottom-up over Ra's diagonal blocks; each
    small block equation is a linear system of order at most 4.

    Raises SpectraOverlapError when a block equation is singular, i.e. an
    eigenvalue of Ra collides with one of -Rb.
    """
    Ra = _validated(Ra, "Ra")
    Rb = _validated(Rb, "Rb")
    C = _validated(C, "C")
    _check_quasi_triangular(Ra, "Ra")
    _check_quasi_triangular(Rb, "Rb")
    n, m = Ra.shape[0], Rb.shape[0]
    if C.shape != (n, m):
        raise InvalidInputError(f"C must be {n}x{m}, got {C.shape}")

    blocks_a = quasi_triangular_blocks(Ra)
    blocks_b = quasi_triangular_blocks(Rb)
    X = np.zeros((n, m))
    for j0, j1 in blocks_b:
        # couplings from already solved block columns
        col = C[:, j0:j1] - X[:, :j0] @ Rb[:j0, j0:j1]
        Bjj = Rb[j0:j1, j0:j1]
        for i0, i1 in reversed(blocks_a):
            rhs = col[i0:i1] - Ra[i0:i1, i1:] @ X[i1:, j0:j1]
            Aii = Ra[i0:i1, i0:i1]
            sa, sb = i1 - i0, j1 - j0
            if sa == 1 and sb == 1:
                denom = Aii[0, 0] + Bjj[0, 0]
                if abs(denom) <= 1e-14 * max(1.0, abs(Aii[0, 0]) + abs(Bjj[0, 0])):
                    raise SpectraOverlapError(
                        f"singular 1x1 block equation at ({i0}, {j0})")
                X[i0:i1, j0:j1] = rhs / denom
            else:
                K = np.kron(np.eye(sb), Aii) + np.kron(Bjj.T, np.eye(sa))
                sv = np.linalg.svd(K, compute_uv=False)
                if sv[-1] <= 1e-14 * max(1.0, sv[0]):
                    raise SpectraOverlapError(
                        f"singular {sa}x{sb} block equation at ({i0}, {j0})")
                x = np.linalg.solve(K, rhs.reshape(-1, order="F"))
                X[i0:i1, j0:j1] = x.reshape(sa, sb, order="F")
    return X


def dense_sylvester_solve(A, B, Y) -> np.ndarray:
    """Solve the two-term equation A X + X B = -Y by Schur transformation.

    Both A and B are reduced to real Schur form, the transformed
    quasi-triangular equation is solved, and the result is transformed back.
    """
    A = _validated(A, "A")
    B = _validated(B, "B")
    Y = _validated(Y, "Y")
    fa = real_schur(A)
    fb = real_schur(B)
    C = -(fa.Q.T @ Y @ fb.Q)
    Xt = solve_quasi_triangular_sylvester(fa.R, fb.R, C)
    return fa.Q @ Xt @ fb.Q.T


def apply_operator(spec: ProblemSpec, X) -> np.ndarray:
    """Evaluate A X + X B + pi_weight * sum_k N_k X H_k (no right-hand side)."""
    X = np.asarray(X, dtype=float)
    if X.shape != (spec.n, spec.m):
        raise InvalidInputError(
            f"X must be {spec.n}x{spec.m}, got {X.shape}")
    out = spec.A @ X + X @ spec.B
    out = np.asarray(out)
    for Nk, Hk in zip(spec.N, spec.H):
        out = out + spec.pi_weight * np.asarray(Nk @ X @ Hk)
    return out


def dense_residual_norm(spec: ProblemSpec, X) -> float:
    """Spectral norm of the residual matrix A(X) + F T G^T."""
    R = apply_operator(spec, X) + spec.rhs_dense()
    if min(R.shape) == 0:
        return 0.0
    return float(np.linalg.norm(as_dense(R), 2))
