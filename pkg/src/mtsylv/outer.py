"""Outer iterations: dense stationary and low-rank non-stationary solvers.

Both solvers run the splitting fixed point

    X_k  solves  A X_k + X_k B = -(Y + pi_weight * sum_i N_i X_{k-1} H_i)

and, every ``window`` steps (at k >= window with k a multiple of it),
replace the iterate by the reduced rank extrapolant and restart from it
(cycling mode).  At each extrapolation the solver applies the fixed-point
map once more internally; this look-ahead supplies the final difference of
the window, so the extrapolant combines all window+1 stored iterates and
annihilates up to ``window`` distinct error components.  A window of 1 is
the identity.

The dense path pre-transforms the whole equation to Schur coordinates once;
the low-rank path works on factored iterates with inexact inner solves whose
tolerance is coupled to the previous outer residual, and estimates residual
norms through matrix-vector products only.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import rre
from .dense import real_schur, solve_quasi_triangular_sylvester
from .errors import DivergedError, InvalidInputError
from .inner import InnerConfig, heuristic_shifts, solve_inner
from .lowrank import (
    LowRankTriple,
    assemble_rhs,
    residual_matvec,
    residual_rmatvec,
    spectral_norm,
    truncate,
)
from .problem import ProblemSpec

DIVERGENCE_THRESHOLD = 1e8


@dataclass
class SolverConfig:
    """Knobs shared by both outer solvers.

    ``window`` is the extrapolation window w (w+1 iterates are combined);
    ``rre_enabled`` switches the extrapolation off without touching w.
    ``eta`` couples the inner tolerance to the previous scaled outer
    residual; ``tau_trunc`` caps the truncation tolerance, which tightens
    dynamically with the residual when ``dynamic_trunc`` is set.
    """

    window: int = 5
    rre_enabled: bool = True
    tau_outer: float = 1e-10
    eta: float = 1e-3
    tau_trunc: float = 1e-8
    dynamic_trunc: bool = True
    max_col: int | None = None
    k_max: int = 50
    inner: str = "adi"
    part_size: int | None = None
    inner_max_steps: int | None = None
    seed: int = 0
    n_shifts: int = 8
    arnoldi_plus: int = 10
    arnoldi_minus: int = 10
    regen_shifts: bool = False
    rhs_two_stage: bool = True
    per_part_trunc: bool = False
    est_rel_tol: float = 1e-3
    est_max_iters: int = 50

    def __post_init__(self):
        if self.window < 1:
            raise InvalidInputError("window must be >= 1")
        if self.k_max < 1:
            raise InvalidInputError("k_max must be >= 1")
        for name in ("tau_outer", "eta", "tau_trunc"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise InvalidInputError(f"{name} must lie in (0, 1), got {v}")
        if self.inner not in ("adi", "eksm"):
            raise InvalidInputError(f"unknown inner solver {self.inner!r}")

    @property
    def inner_steps_cap(self) -> int:
        if self.inner_max_steps is not None:
            return self.inner_max_steps
        return 200 if self.inner == "adi" else 100


@dataclass
class TraceRecord:
    """One outer step: residuals are scaled by the right-hand side norm."""

    k: int
    scaled_residual: float
    rank: int | None
    inner_steps: int | None
    elapsed_s: float
    extrapolated: bool
    pre_extrapolation_residual: float | None = None
    inner_converged: bool = True
    estimator_converged: bool = True


@dataclass
class IterationTrace:
    """Per-step history of one outer solve.

    ``status`` is "converged", "max-iter" or "diverged".  A run that hits the
    step cap with a residual that grew above 1 and above its starting value
    is classified as diverged (slow geometric growth that never crosses the
    hard divergence threshold); a stagnating run stays "max-iter".
    """

    records: list = field(default_factory=list)
    status: str = "max-iter"

    def classify_cap_hit(self):
        if self.status != "max-iter" or not self.records:
            return
        first = self.records[0].scaled_residual
        last = self.records[-1].scaled_residual
        if last > max(1.0, first):
            self.status = "diverged"

    @property
    def iters(self) -> int:
        return len(self.records)

    @property
    def final_residual(self) -> float:
        return self.records[-1].scaled_residual if self.records else 0.0

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def _power_estimate(spec: ProblemSpec, x: LowRankTriple, rel_tol: float,
                    max_iters: int, seed) -> tuple[float, bool]:
    """Largest singular value of the residual matrix by power iteration."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(spec.m)
    nv = np.linalg.norm(v)
    if nv == 0.0:
        return 0.0, True
    v /= nv
    sigma = 0.0
    for _ in range(max(1, max_iters)):
        u = residual_matvec(spec, x, v)
        new_sigma = float(np.linalg.norm(u))
        if new_sigma == 0.0:
            return 0.0, True
        w = residual_rmatvec(spec, x, u / new_sigma)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return new_sigma, True
        v = w / nw
        done = abs(new_sigma - sigma) <= rel_tol * new_sigma
        sigma = new_sigma
        if done:
            return sigma, True
    return sigma, False


def estimate_residual_spectral_norm(spec: ProblemSpec, x: LowRankTriple,
                                    rel_tol: float = 1e-3,
                                    max_iters: int = 50,
                                    seed=0) -> float:
    """Estimate ||A(X) + F T G^T||_2 without forming the residual matrix.

    Runs power iteration on the normal operator p -> R^T (R p), with R the
    residual matrix applied through factored matrix-vector products, started
    from a seeded random vector.  Stops when successive estimates differ by
    at most ``rel_tol`` relatively; always returns the best estimate so far.
    """
    sigma, _ = _power_estimate(spec, x, rel_tol, max_iters, seed)
    return sigma


def stationary_dense_solve(spec: ProblemSpec,
                           config: SolverConfig) -> tuple[np.ndarray, IterationTrace]:
    """Dense stationary iteration with cycling extrapolation.

    Schur forms of A and B are computed once and the whole equation is
    transformed; every step then costs one quasi-triangular solve.  The
    iterate is extrapolated every ``window`` steps when enabled (one extra
    fixed-point application per extrapolation supplies the final window
    difference), and the approximation is transformed back before returning.

    Raises DivergedError (carrying the trace) when the scaled residual
    exceeds the divergence threshold.
    """
    sd = spec.densified()
    w = config.window
    fa = real_schur(sd.A)
    fb = real_schur(sd.B)
    Qa, Ra = fa.Q, fa.R
    Qb, Rb = fb.Q, fb.R
    Yt = Qa.T @ sd.rhs_dense() @ Qb
    Nt = [Qa.T @ Nk @ Qa for Nk in sd.N]
    Ht = [Qb.T @ Hk @ Qb for Hk in sd.H]
    pw = sd.pi_weight
    y_norm = np.linalg.norm(Yt, 2) if min(Yt.shape) else 0.0
    trace = IterationTrace()
    if y_norm == 0.0:
        trace.status = "converged"
        return np.zeros((sd.n, sd.m)), trace

    def residual_norm(Xt):
        R = Ra @ Xt + Xt @ Rb + Yt
        for Nk, Hk in zip(Nt, Ht):
            R += pw * (Nk @ Xt @ Hk)
        return float(np.linalg.norm(R, 2))

    def fixed_point_step(Xt):
        C = -Yt.copy()
        for Nk, Hk in zip(Nt, Ht):
            C -= pw * (Nk @ Xt @ Hk)
        return solve_quasi_triangular_sylvester(Ra, Rb, C)

    X = np.zeros((sd.n, sd.m))
    window = [X]
    for k in range(1, config.k_max + 1):
        t0 = time.perf_counter()
        X = fixed_point_step(X)
        window.append(X)
        if len(window) > w + 1:
            window = window[-(w + 1):]
        extrap = config.rre_enabled and k >= w and k % w == 0
        pre_res = None
        if extrap:
            pre_res = residual_norm(X) / y_norm
            if w > 1:
                # one look-ahead application supplies the final difference,
                # so the extrapolant can combine all w+1 stored iterates
                X = rre.extrapolate_dense(window + [fixed_point_step(X)])
            window = [X]
        scaled = residual_norm(X) / y_norm
        trace.records.append(TraceRecord(
            k=k, scaled_residual=scaled, rank=None, inner_steps=None,
            elapsed_s=time.perf_counter() - t0, extrapolated=extrap,
            pre_extrapolation_residual=pre_res))
        if scaled <= config.tau_outer:
            trace.status = "converged"
            break
        if not np.isfinite(scaled) or scaled > DIVERGENCE_THRESHOLD:
            trace.status = "diverged"
            raise DivergedError(
                f"scaled residual {scaled:.3e} at step {k}", trace=trace)
    trace.classify_cap_hit()
    return Qa @ X @ Qb.T, trace


def nonstationary_lowrank_solve(spec: ProblemSpec,
                                config: SolverConfig) -> tuple[LowRankTriple, IterationTrace]:
    """Low-rank non-stationary iteration with cycling extrapolation.

    Every step solves the two-term equation inexactly at a tolerance
    ``eta`` times the previous scaled residual (bootstrapped with 1),
    truncates the factored iterate, extrapolates every ``window`` steps
    (one extra inexact solve per extrapolation supplies the final window
    difference, and the extrapolant is truncated again), estimates the
    residual norm through matrix-vector products, and assembles the next
    right-hand side from the compressed factors.
    """
    n, m = spec.n, spec.m
    w = config.window
    y_norm = spectral_norm(LowRankTriple(spec.F, spec.T, spec.G))
    trace = IterationTrace()
    if y_norm == 0.0:
        trace.status = "converged"
        return LowRankTriple.zero(n, m), trace
    shifts = None
    X = LowRankTriple.zero(n, m)
    window = [X]
    prev_scaled = 1.0
    for k in range(1, config.k_max + 1):
        t0 = time.perf_counter()
        if config.dynamic_trunc:
            tau_k = max(1e-15, min(config.tau_trunc, config.eta * prev_scaled))
        else:
            tau_k = config.tau_trunc
        rhs = assemble_rhs(spec, X, tau_k, config.max_col,
                           two_stage=config.rhs_two_stage)
        if config.inner == "adi" and (shifts is None or config.regen_shifts):
            shifts = heuristic_shifts(
                spec.A, spec.B,
                k_plus=min(config.arnoldi_plus, n),
                k_minus=min(config.arnoldi_minus, n),
                n_shifts=config.n_shifts, seed=config.seed)
        inner_cfg = InnerConfig(
            solver=config.inner, tol=config.eta * prev_scaled,
            max_steps=config.inner_steps_cap, part_size=config.part_size,
            shifts=shifts,
            trunc_tau=tau_k if config.per_part_trunc else None,
            max_col=config.max_col, per_part_trunc=config.per_part_trunc)
        inner_res = solve_inner(spec.A, spec.B, rhs, inner_cfg)
        X = truncate(inner_res.solution, tau_k, config.max_col)
        inner_steps = inner_res.steps
        inner_ok = inner_res.converged
        extrap = config.rre_enabled and k >= w and k % w == 0
        pre_scaled = None
        window.append(X)
        if len(window) > w + 1:
            window = window[-(w + 1):]
        if extrap:
            pre_scaled, _ = _power_estimate(
                spec, X, config.est_rel_tol, config.est_max_iters,
                seed=(config.seed, 9173, k))
            pre_scaled /= y_norm
            if w > 1:
                # look-ahead application: one extra inexact solve supplies
                # the final difference of the extrapolation window
                rhs_ahead = assemble_rhs(spec, X, tau_k, config.max_col,
                                         two_stage=config.rhs_two_stage)
                ahead = solve_inner(spec.A, spec.B, rhs_ahead, inner_cfg)
                inner_steps += ahead.steps
                inner_ok = inner_ok and ahead.converged
                X_ahead = truncate(ahead.solution, tau_k, config.max_col)
                X = rre.extrapolate_lowrank(window + [X_ahead], tau_k,
                                            config.max_col)
            window = [X]
        est, est_ok = _power_estimate(
            spec, X, config.est_rel_tol, config.est_max_iters,
            seed=(config.seed, 40231, k))
        scaled = est / y_norm
        trace.records.append(TraceRecord(
            k=k, scaled_residual=scaled, rank=X.rank,
            inner_steps=inner_steps,
            elapsed_s=time.perf_counter() - t0, extrapolated=extrap,
            pre_extrapolation_residual=pre_scaled,
            inner_converged=inner_ok,
            estimator_converged=est_ok))
        if scaled <= config.tau_outer:
            trace.status = "converged"
            break
        if not np.isfinite(scaled) or scaled > DIVERGENCE_THRESHOLD:
            trace.status = "diverged"
            raise DivergedError(
                f"scaled residual {scaled:.3e} at step {k}", trace=trace)
        prev_scaled = scaled
    trace.classify_cap_hit()
    return X, trace
