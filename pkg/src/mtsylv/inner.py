"""Inexact low-rank solvers for the two-term equation A X + X B = -F T G^T.

Two solvers are provided: a factored-residual low-rank ADI iteration with
heuristic a-priori shifts, and a Galerkin projection onto extended block
Krylov subspaces.  Both keep the residual in factored form; no n x m matrix
is ever formed.  ``solve_inner`` optionally separates the right-hand side
into lower-rank parts that are solved independently and recombined.

Shift conventions for ADI: the ``beta`` shifts (approximating the spectrum of
B) enter the solves with A + beta_j I, the ``alpha`` shifts (approximating
the spectrum of A) enter the solves with (B + alpha_j I)^T.  For stable A and
B all shifts lie in the open left half-plane, which keeps every shifted
system nonsingular.  Complex shifts are consumed in conjugate pairs so that
all stored factors stay real.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .dense import dense_sylvester_solve
from .errors import (
    InvalidInputError,
    MtsylvError,
    NumericalFailureError,
    ShiftFailureError,
    SpectraOverlapError,
)
from .lowrank import LowRankTriple, concat, separate_rhs, spectral_norm, truncate

_IMAG_DROP_TOL = 1e-8


class ShiftedSolver:
    """Cached LU solves with (M + shift I), optionally transposed.

    Works for dense arrays and sparse matrices; factorizations are computed
    once per distinct shift and reused (shift lists cycle in ADI).
    """

    def __init__(self, M):
        self.M = M
        self.n = M.shape[0]
        self.sparse = sp.issparse(M)
        self._cache = {}

    def _factor(self, shift: complex):
        key = complex(shift)
        fac = self._cache.get(key)
        if fac is None:
            dtype = complex if key.imag != 0.0 else float
            shift = key if key.imag != 0.0 else key.real
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("error", sla.LinAlgWarning)
                    if self.sparse:
                        S = (self.M + shift * sp.identity(self.n)).astype(dtype).tocsc()
                        fac = ("sparse", spla.splu(S))
                    else:
                        S = np.asarray(self.M, dtype=dtype) + shift * np.eye(self.n)
                        fac = ("dense", sla.lu_factor(S))
            except (RuntimeError, sla.LinAlgError, sla.LinAlgWarning, ValueError) as exc:
                raise ShiftFailureError(
                    f"shifted system with shift {key} is singular: {exc}",
                    shift=key) from exc
            self._cache[key] = fac
        return fac

    def solve(self, shift: complex, rhs, transpose: bool = False):
        kind, fac = self._factor(shift)
        rhs = np.atleast_2d(np.asarray(rhs))
        if kind == "sparse":
            out = fac.solve(rhs.astype(fac.U.dtype), trans="T" if transpose else "N")
        else:
            out = sla.lu_solve(fac, rhs, trans=1 if transpose else 0)
        if not np.all(np.isfinite(out)):
            raise ShiftFailureError(
                f"shifted solve with shift {complex(shift)} produced non-finite values",
                shift=complex(shift))
        return out

    def matvec(self, v):
        return np.asarray(self.M @ v)


@dataclass
class ShiftSets:
    """ADI shift parameters: alpha targets Lambda(A), beta targets Lambda(B).

    Complex entries appear adjacent to their conjugates so real arithmetic
    can be preserved across a fused double step.  ``warning`` is set when the
    Ritz sweep broke down and fewer candidates than requested were available.
    """

    alpha: np.ndarray
    beta: np.ndarray
    warning: str | None = None

    def __post_init__(self):
        self.alpha = np.atleast_1d(np.asarray(self.alpha, dtype=complex))
        self.beta = np.atleast_1d(np.asarray(self.beta, dtype=complex))
        if self.alpha.size == 0 or self.beta.size == 0:
            raise InvalidInputError("shift sets must be nonempty")


@dataclass
class InnerResult:
    """Outcome of one inner solve; ``residual`` is the factored residual."""

    solution: LowRankTriple
    residual_norm: float
    steps: int
    converged: bool
    residual: LowRankTriple = None
    failed_parts: tuple = ()
    warning: str | None = None


def _arnoldi_ritz(matvec, n: int, k: int, rng) -> tuple[np.ndarray, bool]:
    """Ritz values from k Arnoldi steps; flags an early breakdown."""
    k = max(1, min(k, n))
    V = np.zeros((n, k + 1))
    H = np.zeros((k + 1, k))
    v = rng.standard_normal(n)
    V[:, 0] = v / np.linalg.norm(v)
    breakdown = False
    j_eff = k
    for j in range(k):
        w = np.asarray(matvec(V[:, j])).reshape(-1)
        scale = np.linalg.norm(w)
        for _ in range(2):  # full reorthogonalization
            h = V[:, : j + 1].T @ w
            w -= V[:, : j + 1] @ h
            H[: j + 1, j] += h
        hn = np.linalg.norm(w)
        H[j + 1, j] = hn
        if hn <= 1e-12 * max(scale, 1.0):
            breakdown = True
            j_eff = j + 1
            break
        V[:, j + 1] = w / hn
    ritz = np.linalg.eigvals(H[:j_eff, :j_eff])
    return ritz, breakdown


def _ritz_candidates(M, k_plus: int, k_minus: int, rng) -> tuple[np.ndarray, list]:
    """Stable candidate shifts from Ritz values of M and of M^{-1} (inverted)."""
    solver = ShiftedSolver(M)
    notes = []
    ritz_p, broke_p = _arnoldi_ritz(solver.matvec, solver.n, k_plus, rng)
    ritz_m, broke_m = _arnoldi_ritz(
        lambda v: solver.solve(0.0, v.reshape(-1, 1)).reshape(-1),
        solver.n, k_minus, rng)
    if broke_p or broke_m:
        notes.append("Arnoldi breakdown, candidate set truncated")
    inv = ritz_m[np.abs(ritz_m) > 1e-300]
    cand = np.concatenate([ritz_p, 1.0 / inv])
    stable = cand[cand.real < 0.0]
    if stable.size == 0:
        # mirror unstable Ritz values so the shifted systems stay regular
        stable = -np.abs(cand.real) - 1e-8 + 1j * cand.imag
        notes.append("no stable Ritz values, candidates mirrored")
    # deduplicate up to roundoff, keeping deterministic order
    rounded = np.round(stable, 12)
    _, idx = np.unique(rounded, return_index=True)
    return stable[np.sort(idx)], notes


def _shift_factor(EA, EB, a: complex, b: complex) -> np.ndarray:
    """One ADI contraction factor evaluated on the candidate grid EA x EB."""
    fa = np.abs(EA - a) / np.maximum(np.abs(EA + b), 1e-300)
    fb = np.abs(EB - b) / np.maximum(np.abs(EB + a), 1e-300)
    return fa[:, None] * fb[None, :]


def heuristic_shifts(A, B, k_plus: int = 10, k_minus: int = 10,
                     n_shifts: int = 8, seed: int = 0) -> ShiftSets:
    """A-priori ADI shifts from Ritz values, chosen greedily.

    Candidates for each side come from k_plus Arnoldi steps with the matrix
    and k_minus steps with its inverse (inverted back).  Starting from the
    candidate pair minimizing the worst-case single-step factor, shifts are
    added greedily at the grid point where the accumulated rational bound is
    largest.  Deterministic for a fixed seed.
    """
    if k_plus < 1 or k_minus < 1 or n_shifts < 1:
        raise InvalidInputError("k_plus, k_minus and n_shifts must be >= 1")
    rng = np.random.default_rng(seed)
    EA, notes_a = _ritz_candidates(A, k_plus, k_minus, rng)
    EB, notes_b = _ritz_candidates(B, k_plus, k_minus, rng)
    best = None
    for a in EA:
        for b in EB:
            worst = _shift_factor(EA, EB, a, b).max()
            if best is None or worst < best[0]:
                best = (worst, a, b)
    _, a0, b0 = best
    alpha, beta = [a0], [b0]
    P = _shift_factor(EA, EB, a0, b0)
    if a0.imag != 0.0 or b0.imag != 0.0:
        alpha.append(a0.conjugate())
        beta.append(b0.conjugate())
        P = P * _shift_factor(EA, EB, a0.conjugate(), b0.conjugate())
    while len(alpha) < n_shifts:
        flat = int(np.argmax(P))
        if P.flat[flat] <= 0.0:
            break
        i, j = np.unravel_index(flat, P.shape)
        a, b = EA[i], EB[j]
        alpha.append(a)
        beta.append(b)
        P = P * _shift_factor(EA, EB, a, b)
        if a.imag != 0.0 or b.imag != 0.0:
            alpha.append(a.conjugate())
            beta.append(b.conjugate())
            P = P * _shift_factor(EA, EB, a.conjugate(), b.conjugate())
    notes = notes_a + notes_b
    return ShiftSets(alpha=np.array(alpha), beta=np.array(beta),
                     warning="; ".join(dict.fromkeys(notes)) or None)


def _shift_groups(shifts: ShiftSets):
    """Yield groups of (alpha, beta) steps; a group of two is a conjugate pair."""
    alpha, beta = shifts.alpha, shifts.beta
    la, lb = len(alpha), len(beta)
    ia = ib = 0
    while True:
        a = complex(alpha[ia % la])
        b = complex(beta[ib % lb])
        if a.imag == 0.0 and b.imag == 0.0:
            yield [(a, b)]
            ia += 1
            ib += 1
        else:
            yield [(a, b), (a.conjugate(), b.conjugate())]
            ia += 2 if a.imag != 0.0 else 1
            ib += 2 if b.imag != 0.0 else 1


def _real_block(V, W, om: complex, T: np.ndarray):
    """Real factors representing Re(om * V T W^T) for complex V, W."""
    if om.imag == 0.0 and not np.iscomplexobj(V) and not np.iscomplexobj(W):
        return V, om.real * T, W
    Vr = np.column_stack([V.real, V.imag])
    Wr = np.column_stack([W.real, W.imag])
    M = np.block([[om.real * T, -om.imag * T],
                  [-om.imag * T, -om.real * T]])
    return Vr, M, Wr


def lr_adi_solve(A, B, rhs: LowRankTriple, shifts: ShiftSets, tol: float,
                 max_steps: int = 200) -> InnerResult:
    """Factored-residual low-rank ADI for A X + X B = -(Z_L D Z_R^T of rhs).

    Per step, solves (A + beta_j I) V = F_j and (B + alpha_j I)^T W = G_j and
    appends the scaled blocks to the solution triple; the residual keeps the
    exact factorization F_j D G_j^T of rank at most rank(rhs) and its norm is
    evaluated from the small factors only.  Shift lists cycle when exhausted;
    conjugate pairs are fused so all stored blocks are real.
    """
    n, m = rhs.n, rhs.m
    if rhs.rank == 0:
        zero = LowRankTriple.zero(n, m)
        return InnerResult(zero, 0.0, 0, True, residual=zero)
    rhs_norm = spectral_norm(rhs)
    if rhs_norm == 0.0:
        zero = LowRankTriple.zero(n, m)
        return InnerResult(zero, 0.0, 0, True, residual=zero)
    solve_a = ShiftedSolver(A)
    solve_b = ShiftedSolver(B)
    T = rhs.D
    Fc = rhs.ZL.astype(float)
    Gc = rhs.ZR.astype(float)
    blocks_l, mids, blocks_r = [], [], []
    steps = 0
    residual_norm = rhs_norm
    converged = False
    groups = _shift_groups(shifts)
    while steps < max_steps:
        for a, b in next(groups):
            V = solve_a.solve(b, Fc)
            W = solve_b.solve(a, Gc, transpose=True)
            om = -(a + b)
            BL, M, BR = _real_block(V, W, om, T)
            blocks_l.append(BL)
            mids.append(M)
            blocks_r.append(BR)
            Fc = Fc + om * V
            Gc = Gc + om * W
            steps += 1
        # a completed group leaves the residual factors real up to roundoff
        Fc = Fc.real if np.iscomplexobj(Fc) else Fc
        Gc = Gc.real if np.iscomplexobj(Gc) else Gc
        residual_norm = spectral_norm(LowRankTriple(Fc, T, Gc))
        if residual_norm <= tol * rhs_norm:
            converged = True
            break
    solution = LowRankTriple(np.hstack(blocks_l), sla.block_diag(*mids),
                             np.hstack(blocks_r))
    residual = LowRankTriple(Fc, T, Gc)
    return InnerResult(solution, residual_norm, steps, converged,
                       residual=residual, warning=shifts.warning)


def _stack_triple(left, mid, right) -> tuple[LowRankTriple, float]:
    """Compress a (possibly rectangular) factored stack into a triple.

    Returns the triple together with its spectral norm.
    """
    n, m = left.shape[0], right.shape[0]
    if left.shape[1] == 0 or right.shape[1] == 0:
        return LowRankTriple.zero(n, m), 0.0
    QL, RL = sla.qr(left, mode="economic")
    QR_, RR = sla.qr(right, mode="economic")
    U, s, Vh = sla.svd(RL @ mid @ RR.T)
    if s.size == 0 or s[0] == 0.0:
        return LowRankTriple.zero(n, m), 0.0
    k = int(np.count_nonzero(s >= s[0] * 1e-15))
    triple = LowRankTriple(QL @ U[:, :k], np.diag(s[:k]), QR_ @ Vh[:k].T)
    return triple, float(s[0])


def _orth_block(raw, bases, defl_tol: float) -> np.ndarray:
    """Orthogonalize a block against earlier bases, deflating tiny directions."""
    W = np.array(raw, dtype=float, copy=True)
    if W.ndim == 1:
        W = W[:, None]
    scale = max(np.max(np.linalg.norm(W, axis=0), initial=0.0), 1e-300)
    for _ in range(2):
        for U in bases:
            if U.shape[1]:
                W -= U @ (U.T @ W)
    Q, R, _ = sla.qr(W, mode="economic", pivoting=True)
    keep = int(np.count_nonzero(np.abs(np.diag(R)) > defl_tol * scale))
    return Q[:, :keep]


def eksm_solve(A, B, rhs: LowRankTriple, tol: float,
               max_steps: int = 100, defl_tol: float = 1e-10) -> InnerResult:
    """Galerkin projection onto extended block Krylov subspaces.

    Builds orthonormal bases of span{F, A^{-1}F, AF, A^{-2}F, ...} and of the
    analogous space for (B^T, G) with full reorthogonalization; every step
    solves the projected dense two-term equation and monitors the true
    residual norm through stacked factors.  A and B are factorized once.
    """
    n, m = rhs.n, rhs.m
    if rhs.rank == 0 or spectral_norm(rhs) == 0.0:
        zero = LowRankTriple.zero(n, m)
        return InnerResult(zero, 0.0, 0, True, residual=zero)
    rhs_norm = spectral_norm(rhs)
    F, T, G = rhs.ZL, rhs.D, rhs.ZR
    solve_a = ShiftedSolver(A)
    solve_b = ShiftedSolver(B)
    U = np.zeros((n, 0))
    V = np.zeros((m, 0))
    pos_u, neg_u = F, solve_a.solve(0.0, F)
    pos_v, neg_v = G, solve_b.solve(0.0, G, transpose=True)
    steps = 0
    converged = False
    Y = np.zeros((0, 0))
    residual_norm = rhs_norm
    res_triple = LowRankTriple(F, T, G)
    for j in range(max_steps):
        new_u = []
        for raw in (pos_u, neg_u):
            blk = _orth_block(raw, [U] + new_u, defl_tol)
            if blk.shape[1]:
                new_u.append(blk)
        new_v = []
        for raw in (pos_v, neg_v):
            blk = _orth_block(raw, [V] + new_v, defl_tol)
            if blk.shape[1]:
                new_v.append(blk)
        if not new_u and not new_v:
            break  # both spaces exhausted
        if new_u:
            pos_u = solve_a.matvec(new_u[0])
            neg_u = solve_a.solve(0.0, new_u[-1])
            U = np.hstack([U] + new_u)
        if new_v:
            pos_v = np.asarray(B.T @ new_v[0])
            neg_v = solve_b.solve(0.0, new_v[-1], transpose=True)
            V = np.hstack([V] + new_v)
        steps = j + 1
        AU = solve_a.matvec(U)
        BTV = np.asarray(B.T @ V)
        Am = U.T @ AU
        Bm = BTV.T @ V  # equals V^T B V
        try:
            Ym = dense_sylvester_solve(Am, Bm, (U.T @ F) @ T @ (G.T @ V))
        except SpectraOverlapError as exc:
            raise NumericalFailureError(
                f"projected spectra overlap at step {steps}: {exc}",
                iterations=steps) from exc
        Y = Ym
        left = np.hstack([AU, U, F])
        right = np.hstack([V, BTV, G])
        mid = sla.block_diag(Y, Y, T)
        res_triple, residual_norm = _stack_triple(left, mid, right)
        if residual_norm <= tol * rhs_norm:
            converged = True
            break
    if Y.size == 0:
        zero = LowRankTriple.zero(n, m)
        return InnerResult(zero, residual_norm, steps, converged, residual=res_triple)
    Uy, s, Vyh = sla.svd(Y)
    k = int(np.count_nonzero(s >= (s[0] if s.size else 0.0) * 1e-15))
    solution = LowRankTriple(U @ Uy[:, :k], np.diag(s[:k]), V @ Vyh[:k].T)
    return InnerResult(solution, residual_norm, steps, converged, residual=res_triple)


@dataclass
class InnerConfig:
    """Options for :func:`solve_inner`.

    ``tol`` is relative to the spectral norm of the (part) right-hand side;
    with separation active each part runs at tol * r_part / r_total so the
    part residuals sum below the requested level.
    """

    solver: str = "adi"
    tol: float = 1e-8
    max_steps: int = 200
    part_size: int | None = None
    shifts: ShiftSets | None = None
    trunc_tau: float | None = None
    max_col: int | None = None
    per_part_trunc: bool = False

    def __post_init__(self):
        if self.solver not in ("adi", "eksm"):
            raise InvalidInputError(f"unknown inner solver {self.solver!r}")


def solve_inner(A, B, rhs: LowRankTriple, config: InnerConfig) -> InnerResult:
    """Solve A X + X B = -(rhs), optionally separating the right-hand side.

    Parts are solved independently in ascending order and recombined by
    factor concatenation; the reported residual is the factored sum of the
    per-part residuals.  A part that fails to converge flags the result and
    is recorded in ``failed_parts``.
    """
    parts = separate_rhs(rhs, config.part_size) if config.part_size else [rhs]
    r_total = max(rhs.rank, 1)
    solutions, residuals, failed = [], [], []
    steps = 0
    warning = None
    for idx, part in enumerate(parts):
        tol_j = config.tol * part.rank / r_total if len(parts) > 1 else config.tol
        try:
            if config.solver == "adi":
                if config.shifts is None:
                    raise InvalidInputError("ADI inner solver needs shift sets")
                res = lr_adi_solve(A, B, part, config.shifts, tol_j,
                                   config.max_steps)
            else:
                res = eksm_solve(A, B, part, tol_j, config.max_steps)
        except MtsylvError as exc:
            exc.part_index = idx
            raise
        sol = res.solution
        if config.per_part_trunc and config.trunc_tau is not None:
            sol = truncate(sol, config.trunc_tau * part.rank / r_total,
                           config.max_col)
        solutions.append(sol)
        residuals.append(res.residual)
        steps += res.steps
        warning = warning or res.warning
        if not res.converged:
            failed.append(idx)
    combined = concat(solutions)
    if config.trunc_tau is not None and not config.per_part_trunc:
        combined = truncate(combined, config.trunc_tau, config.max_col)
    residual = concat(residuals)
    return InnerResult(combined, spectral_norm(residual), steps,
                       converged=not failed, residual=residual,
                       failed_parts=tuple(failed), warning=warning)
