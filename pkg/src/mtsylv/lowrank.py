"""Low-rank triple arithmetic: Z_L D Z_R^T factored matrices.

Provides the truncation operator (QR + SVD compression), factor
concatenation, right-hand-side assembly with block-by-block compression,
separation into lower-rank parts, and residual matrix-vector products that
never form an n x m matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import InvalidInputError
from .problem import ProblemSpec, check_finite


@dataclass
class LowRankTriple:
    """Factored matrix Z_L D Z_R^T with explicit rank z = D.shape[0].

    z = 0 (empty factors) is the canonical representation of the zero matrix.
    Instances are treated as immutable values; operations return new triples.
    """

    ZL: np.ndarray
    D: np.ndarray
    ZR: np.ndarray

    def __post_init__(self):
        self.ZL = np.atleast_2d(np.asarray(self.ZL, dtype=float))
        self.D = np.atleast_2d(np.asarray(self.D, dtype=float))
        self.ZR = np.atleast_2d(np.asarray(self.ZR, dtype=float))
        z = self.D.shape[0]
        if self.D.shape != (z, z):
            raise InvalidInputError("core D must be square")
        if self.ZL.shape[1] != z or self.ZR.shape[1] != z:
            raise InvalidInputError("factor column counts must match the core")
        for name, M in [("ZL", self.ZL), ("D", self.D), ("ZR", self.ZR)]:
            check_finite(M, name)

    @classmethod
    def zero(cls, n: int, m: int) -> "LowRankTriple":
        return cls(np.zeros((n, 0)), np.zeros((0, 0)), np.zeros((m, 0)))

    @classmethod
    def from_dense(cls, M) -> "LowRankTriple":
        M = np.asarray(M, dtype=float)
        n, m = M.shape
        return cls(np.eye(n), M, np.eye(m))

    @property
    def n(self) -> int:
        return self.ZL.shape[0]

    @property
    def m(self) -> int:
        return self.ZR.shape[0]

    @property
    def rank(self) -> int:
        return self.D.shape[0]

    def to_dense(self) -> np.ndarray:
        if self.rank == 0:
            return np.zeros((self.n, self.m))
        return self.ZL @ self.D @ self.ZR.T

    def scaled(self, c: float) -> "LowRankTriple":
        return LowRankTriple(self.ZL, c * self.D, self.ZR)


def _conforming(ts) -> tuple[int, int]:
    n, m = ts[0].n, ts[0].m
    for t in ts[1:]:
        if t.n != n or t.m != m:
            raise InvalidInputError("triples have non-conforming outer dimensions")
    return n, m


def truncate(t: LowRankTriple, tau: float, max_col: int | None = None) -> LowRankTriple:
    """Rank truncation: keep singular triplets with sigma_i >= sigma_1 * tau.

    Compression goes through thin QR of both factors and an SVD of the small
    inner matrix; the result has a diagonal, descending core.  ``max_col``
    additionally caps the output rank; ``None`` means no cap.  The spectral
    truncation error is at most sigma_1 * tau whenever the cap is inactive.
    """
    if not 0.0 <= tau < 1.0:
        raise InvalidInputError(f"tau must lie in [0, 1), got {tau}")
    if max_col is not None and max_col < 0:
        raise InvalidInputError("max_col must be nonnegative")
    if t.rank == 0 or max_col == 0:
        return LowRankTriple.zero(t.n, t.m)
    QL, RL = sla.qr(t.ZL, mode="economic")
    QR_, RR = sla.qr(t.ZR, mode="economic")
    U, s, Vh = sla.svd(RL @ t.D @ RR.T)
    # singular values below roundoff of the factor magnitudes are treated as
    # zero, so exact cancellations collapse to the zero triple
    floor = (np.finfo(float).eps * max(t.n, t.m, t.rank)
             * np.linalg.norm(RL) * np.linalg.norm(t.D) * np.linalg.norm(RR))
    if s.size == 0 or s[0] <= floor:
        return LowRankTriple.zero(t.n, t.m)
    k = int(np.count_nonzero(s >= s[0] * tau))
    if max_col is not None:
        k = min(k, max_col)
    if k == 0:
        return LowRankTriple.zero(t.n, t.m)
    return LowRankTriple(QL @ U[:, :k], np.diag(s[:k]), QR_ @ Vh[:k].T)


def spectral_norm(t: LowRankTriple) -> float:
    """Spectral norm of the factored matrix, computed from the small core only."""
    if t.rank == 0:
        return 0.0
    RL = sla.qr(t.ZL, mode="economic")[1]
    RR = sla.qr(t.ZR, mode="economic")[1]
    s = sla.svd(RL @ t.D @ RR.T, compute_uv=False)
    return float(s[0]) if s.size else 0.0


def concat(ts) -> LowRankTriple:
    """Sum of factored matrices by factor concatenation (exact, rank-additive)."""
    ts = list(ts)
    if not ts:
        raise InvalidInputError("concat needs at least one triple")
    n, m = _conforming(ts)
    ts = [t for t in ts if t.rank > 0]
    if not ts:
        return LowRankTriple.zero(n, m)
    ZL = np.hstack([t.ZL for t in ts])
    ZR = np.hstack([t.ZR for t in ts])
    D = sla.block_diag(*[t.D for t in ts])
    return LowRankTriple(ZL, D, ZR)


def assemble_rhs(spec: ProblemSpec, x_prev: LowRankTriple, tau: float,
                 max_col: int | None = None, two_stage: bool = True) -> LowRankTriple:
    """Compressed factored form of F T G^T + pi_weight * sum_k N_k X H_k.

    With ``two_stage`` each extra term is truncated individually before the
    concatenation with (F, T, G) is truncated again (block-by-block
    compression); otherwise only the final global truncation is applied.
    """
    base = LowRankTriple(spec.F, spec.T, spec.G)
    if x_prev.rank == 0 or spec.ell == 0:
        return truncate(base, tau, max_col)
    parts = [base]
    for Nk, Hk in zip(spec.N, spec.H):
        term = LowRankTriple(
            np.asarray(Nk @ x_prev.ZL),
            spec.pi_weight * x_prev.D,
            np.asarray(Hk.T @ x_prev.ZR),
        )
        parts.append(truncate(term, tau) if two_stage else term)
    return truncate(concat(parts), tau, max_col)


def separate_rhs(rhs: LowRankTriple, part_size: int) -> list[LowRankTriple]:
    """Split a triple into ceil(z / part_size) contiguous column slices.

    Requires the core to be block diagonal with respect to the slicing (true
    for any truncated triple, whose core is diagonal); the parts then re-sum
    to the input exactly.
    """
    if part_size < 1:
        raise InvalidInputError(f"part_size must be >= 1, got {part_size}")
    z = rhs.rank
    if z == 0 or part_size >= z:
        return [rhs]
    cuts = list(range(0, z, part_size)) + [z]
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        off = rhs.D[lo:hi, :].copy()
        off[:, lo:hi] = 0.0
        if np.any(off != 0.0):
            raise InvalidInputError(
                "core is not block diagonal for the requested part size; "
                "truncate the triple first")
    return [
        LowRankTriple(rhs.ZL[:, lo:hi], rhs.D[lo:hi, lo:hi], rhs.ZR[:, lo:hi])
        for lo, hi in zip(cuts[:-1], cuts[1:])
    ]


def residual_matvec(spec: ProblemSpec, x: LowRankTriple, p) -> np.ndarray:
    """Product of the residual matrix (A(X) + F T G^T) with p, factored form only."""
    p = np.asarray(p, dtype=float)
    if p.shape[0] != spec.m:
        raise InvalidInputError(f"p must have length {spec.m}")
    out = np.asarray(spec.F @ (spec.T @ (spec.G.T @ p)))
    if x.rank > 0:
        core = x.D @ (x.ZR.T @ p)
        out = out + np.asarray(spec.A @ (x.ZL @ core))
        out = out + x.ZL @ (x.D @ (x.ZR.T @ np.asarray(spec.B @ p)))
        for Nk, Hk in zip(spec.N, spec.H):
            out = out + spec.pi_weight * np.asarray(
                Nk @ (x.ZL @ (x.D @ (x.ZR.T @ np.asarray(Hk @ p)))))
    return out


def residual_rmatvec(spec: ProblemSpec, x: LowRankTriple, q) -> np.ndarray:
    """Transposed residual product (A(X) + F T G^T)^T q for q of length n."""
    q = np.asarray(q, dtype=float)
    if q.shape[0] != spec.n:
        raise InvalidInputError(f"q must have length {spec.n}")
    out = np.asarray(spec.G @ (spec.T.T @ (spec.F.T @ q)))
    if x.rank > 0:
        AT_q = np.asarray(spec.A.T @ q) if hasattr(spec.A, "T") else spec.A.T @ q
        out = out + x.ZR @ (x.D.T @ (x.ZL.T @ AT_q))
        out = out + np.asarray(spec.B.T @ (x.ZR @ (x.D.T @ (x.ZL.T @ q))))
        for Nk, Hk in zip(spec.N, spec.H):
            out = out + spec.pi_weight * np.asarray(
                Hk.T @ (x.ZR @ (x.D.T @ (x.ZL.T @ np.asarray(Nk.T @ q)))))
    return out
