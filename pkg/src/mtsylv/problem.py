"""Problem container for multi-term Sylvester and Lyapunov-plus-positive equations.

The equation solved throughout the package is

    A X + X B + pi_weight * sum_k N_k X H_k  =  -Y,      Y = F T G^T,

with A (n x n), B (m x m), ell extra terms N_k (n x n), H_k (m x m), and a
factored right-hand side F (n x r), T (r x r), G (m x r).  Coefficients may be
dense ``numpy`` arrays or ``scipy.sparse`` matrices; dense arrays are stored
row-major (C order).  ``pi_weight`` is a scalar weight on the whole extra-term
sum, used by the benchmark generators to keep their stencil matrices unscaled.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import InvalidInputError


def as_dense(M) -> np.ndarray:
    """Return ``M`` as a 2-D float ndarray, densifying sparse input."""
    if sp.issparse(M):
        return np.asarray(M.todense(), dtype=float)
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise InvalidInputError(f"expected a 2-D matrix, got shape {M.shape}")
    return M


def check_finite(M, name: str = "matrix"):
    """Raise InvalidInputError if ``M`` contains NaN or Inf entries."""
    data = M.data if sp.issparse(M) else M
    if not np.all(np.isfinite(data)):
        raise InvalidInputError(f"{name} contains non-finite entries")


def _shape(M):
    return M.shape


@dataclass
class ProblemSpec:
    """Coefficients of one multi-term Sylvester (or Lyapunov) equation.

    ``kind`` is ``"sylvester"`` or ``"lyapunov"``; the latter promises
    B = A^T, H_k = N_k^T and G = F so that symmetric handling is allowed.
    ``Y`` optionally stores the dense right-hand side; when given it must
    agree with F T G^T.
    """

    A: object
    B: object
    N: list = field(default_factory=list)
    H: list = field(default_factory=list)
    F: np.ndarray = None
    T: np.ndarray = None
    G: np.ndarray = None
    Y: np.ndarray = None
    kind: str = "sylvester"
    pi_weight: float = 1.0

    def __post_init__(self):
        if self.kind not in ("sylvester", "lyapunov"):
            raise InvalidInputError(f"unknown problem kind {self.kind!r}")
        coerce = lambda M: M if sp.issparse(M) else np.asarray(M, dtype=float)
        self.A = coerce(self.A)
        self.B = coerce(self.B)
        self.N = [coerce(Nk) for Nk in self.N]
        self.H = [coerce(Hk) for Hk in self.H]
        n, nc = _shape(self.A)
        m, mc = _shape(self.B)
        if n != nc or m != mc:
            raise InvalidInputError("A and B must be square")
        if len(self.N) != len(self.H):
            raise InvalidInputError("N and H term lists differ in length")
        for k, (Nk, Hk) in enumerate(zip(self.N, self.H)):
            if _shape(Nk) != (n, n) or _shape(Hk) != (m, m):
                raise InvalidInputError(f"term {k} has non-conforming shape")
        if self.F is None or self.T is None or self.G is None:
            raise InvalidInputError("factored right-hand side F, T, G is required")
        self.F = as_dense(self.F)
        self.T = as_dense(self.T)
        self.G = as_dense(self.G)
        r = self.F.shape[1]
        if self.F.shape != (n, r) or self.T.shape != (r, r) or self.G.shape != (m, r):
            raise InvalidInputError("F, T, G dimensions do not conform")
        for name, M in [("A", self.A), ("B", self.B), ("F", self.F),
                        ("T", self.T), ("G", self.G)]:
            check_finite(M, name)
        for k, (Nk, Hk) in enumerate(zip(self.N, self.H)):
            check_finite(Nk, f"N[{k}]")
            check_finite(Hk, f"H[{k}]")
        if not np.isfinite(self.pi_weight):
            raise InvalidInputError("pi_weight must be finite")
        if self.Y is not None:
            self.Y = as_dense(self.Y)
            if self.Y.shape != (n, m):
                raise InvalidInputError("Y dimensions do not conform")
            rhs = self.rhs_dense()
            scale = max(1.0, float(np.linalg.norm(rhs)))
            if np.linalg.norm(self.Y - rhs) > 1e-12 * scale:
                raise InvalidInputError("Y and F T G^T disagree")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[0]

    @property
    def ell(self) -> int:
        return len(self.N)

    @property
    def r(self) -> int:
        return self.F.shape[1]

    @property
    def is_lyapunov(self) -> bool:
        return self.kind == "lyapunov"

    def rhs_dense(self) -> np.ndarray:
        """Dense right-hand side Y = F T G^T."""
        return self.F @ self.T @ self.G.T

    def densified(self) -> "ProblemSpec":
        """Copy of this spec with every coefficient as a dense ndarray."""
        return ProblemSpec(
            A=as_dense(self.A),
            B=as_dense(self.B),
            N=[as_dense(Nk) for Nk in self.N],
            H=[as_dense(Hk) for Hk in self.H],
            F=self.F.copy(),
            T=self.T.copy(),
            G=self.G.copy(),
            kind=self.kind,
            pi_weight=self.pi_weight,
        )
