"""Reduced rank extrapolation over dense matrices and low-rank triples.

A window of w+1 successive iterates (oldest first) is combined into the
extrapolant sum_{i=1..w} gamma_i X_i, where gamma minimizes the norm of the
combined first differences subject to sum(gamma) = 1.  The coefficients are
computed through the unconstrained reformulation in the q variables related
to gamma by

    gamma_1 = 1 - q_1,   gamma_i = q_{i-1} - q_i,   gamma_w = q_{w-1},

where q minimizes || u_1 + Psi q || over the matrix Psi of second differences.
The low-rank variant compresses the window through stacked thin QR
factorizations of the left and right factors, so the least-squares problem
only sees small matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import InvalidInputError, InvalidWindowError
from .lowrank import LowRankTriple
from .oracles import vec

_RANK_TOL = 1e-13


@dataclass
class RreCoefficients:
    """Extrapolation coefficients gamma (length w) and their q-form (length w-1)."""

    gamma: np.ndarray
    q: np.ndarray

    @property
    def window(self) -> int:
        return self.gamma.size


def rre_coefficients(differences) -> RreCoefficients:
    """Coefficients from a b x w matrix whose columns are first differences u_i.

    Returns the minimum-norm q when the second-difference matrix is rank
    deficient, which makes a constant window yield gamma = (1, 0, ..., 0).
    """
    U = np.asarray(differences, dtype=float)
    if U.ndim == 1:
        U = U[:, None]
    if U.shape[1] == 0:
        raise InvalidWindowError("window must be >= 1")
    if not np.all(np.isfinite(U)):
        raise InvalidInputError("difference matrix contains non-finite entries")
    w = U.shape[1]
    if w == 1:
        return RreCoefficients(gamma=np.array([1.0]), q=np.zeros(0))
    Psi = U[:, 1:] - U[:, :-1]
    u1 = U[:, 0]
    if not Psi.any():
        q = np.zeros(w - 1)
    else:
        Q, R = sla.qr(Psi, mode="economic")
        diag = np.abs(np.diag(R))
        if diag.min() > _RANK_TOL * max(diag.max(), 1e-300):
            q = sla.solve_triangular(R, -(Q.T @ u1))
        else:
            q, *_ = np.linalg.lstsq(Psi, -u1, rcond=None)
    gamma = np.empty(w)
    gamma[0] = 1.0 - q[0]
    gamma[1:-1] = q[:-1] - q[1:]
    gamma[-1] = q[-1]
    return RreCoefficients(gamma=gamma, q=q)


def _window_sizes(window) -> int:
    if len(window) < 2:
        raise InvalidWindowError(
            f"a window needs w+1 >= 2 iterates, got {len(window)}")
    return len(window) - 1


def extrapolate_dense(window) -> np.ndarray:
    """Extrapolant of a window of w+1 dense matrices, oldest first."""
    w = _window_sizes(window)
    mats = [np.asarray(X, dtype=float) for X in window]
    shape = mats[0].shape
    for X in mats[1:]:
        if X.shape != shape:
            raise InvalidInputError("window entries have differing shapes")
    U = np.column_stack([vec(mats[i + 1] - mats[i]) for i in range(w)])
    coeffs = rre_coefficients(U)
    out = np.zeros(shape)
    for gi, Xi in zip(coeffs.gamma, mats[:w]):
        out += gi * Xi
    return out


def extrapolate_lowrank(window, tau_trunc: float,
                        max_col: int | None = None) -> LowRankTriple:
    """Extrapolant of a window of w+1 low-rank triples, oldest first.

    Stacks the left and right factors of all window entries, takes one thin
    QR on each side, runs the coefficient computation on the small projected
    matrices, and truncates the extrapolant's inner matrix by SVD at
    sigma_1 * tau_trunc with an optional column cap.
    """
    w = _window_sizes(window)
    n, m = window[0].n, window[0].m
    for t in window:
        if t.n != n or t.m != m:
            raise InvalidInputError("window triples have non-conforming shapes")
    ranks = [t.rank for t in window]
    if sum(ranks) == 0:
        return LowRankTriple.zero(n, m)
    QL, RL = sla.qr(np.hstack([t.ZL for t in window]), mode="economic")
    QR_, RR = sla.qr(np.hstack([t.ZR for t in window]), mode="economic")
    offsets = np.concatenate([[0], np.cumsum(ranks)])
    small = [
        RL[:, offsets[i]:offsets[i + 1]] @ window[i].D
        @ RR[:, offsets[i]:offsets[i + 1]].T
        for i in range(w + 1)
    ]
    U = np.column_stack([vec(small[i + 1] - small[i]) for i in range(w)])
    coeffs = rre_coefficients(U)
    inner = np.zeros((RL.shape[0], RR.shape[0]))
    for gi, Si in zip(coeffs.gamma, small[:w]):
        inner += gi * Si
    Us, s, Vhs = sla.svd(inner)
    if s.size == 0 or s[0] == 0.0:
        return LowRankTriple.zero(n, m)
    k = int(np.count_nonzero(s >= s[0] * tau_trunc))
    if max_col is not None:
        k = min(k, max_col)
    if k == 0:
        return LowRankTriple.zero(n, m)
    return LowRankTriple(QL @ Us[:, :k], np.diag(s[:k]), QR_ @ Vhs[:k].T)
