"""Benchmark problem generators.

All randomness flows through ``numpy.random.default_rng`` (PCG64); a fixed
seed reproduces a generator's output byte for byte within this
implementation.  The draw order inside each generator is part of that
contract and must not be reordered.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import InvalidInputError
from .problem import ProblemSpec


@dataclass
class GeneratorParams:
    """Parameters of the random dense generator."""

    n: int
    m: int
    ell: int = 0
    beta: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise InvalidInputError("n and m must be >= 1")
        if self.ell < 0:
            raise InvalidInputError("ell must be >= 0")
        if self.beta < 0:
            raise InvalidInputError("beta must be >= 0")


def gen_random_dense(params: GeneratorParams) -> ProblemSpec:
    """Random dense multi-term problem with stabilized uniform coefficients.

    A and B are uniform [0, 1) matrices shifted by -1.5 times the largest
    real eigenvalue part, which places both spectra in the open left
    half-plane; the extra terms are plain uniform matrices whose joint
    weight beta^2 is carried by the spec, and the uniform right-hand side is
    factored through its full-rank SVD.
    """
    rng = np.random.default_rng(params.seed)
    n, m = params.n, params.m
    A0 = rng.random((n, n))
    A = A0 - 1.5 * np.max(np.linalg.eigvals(A0).real) * np.eye(n)
    B0 = rng.random((m, m))
    B = B0 - 1.5 * np.max(np.linalg.eigvals(B0).real) * np.eye(m)
    Y = rng.random((n, m))
    N, H = [], []
    for _ in range(params.ell):
        N.append(rng.random((n, n)))
        H.append(rng.random((m, m)))
    U, s, Vh = np.linalg.svd(Y, full_matrices=False)
    return ProblemSpec(A=A, B=B, N=N, H=H, F=U, T=np.diag(s), G=Vh.T,
                       kind="sylvester", pi_weight=params.beta ** 2)


def _advdiff_parts(n0: int, beta: float):
    """Grid operator, edge couplings and input columns of the advection-
    diffusion model on the unit square.

    The evolution operator discretizes (Laplacian - d/dy) with centered
    differences on an (n0+2) x n0 grid: the x-direction keeps its boundary
    nodes (the boundary condition couples them to the control), the
    y-direction is homogeneous Dirichlet.  Eliminating the ghost nodes of
    the centered boundary stencil yields a 2/h^2 coupling into the interior,
    a state-control product with coefficient 2/h on each edge, and an
    affine input column -2*beta/h on the same nodes.
    """
    if n0 < 2:
        raise InvalidInputError("n0 must be >= 2")
    h = 1.0 / (n0 + 1)
    nx = n0 + 2
    ny = n0
    n = nx * ny
    inv_h2 = 1.0 / h ** 2
    main = np.full(nx, -2.0 * inv_h2)
    Tx = sp.diags(
        [np.full(nx - 1, inv_h2), main, np.full(nx - 1, inv_h2)],
        offsets=[-1, 0, 1], format="lil")
    Tx[0, 1] = 2.0 * inv_h2
    Tx[nx - 1, nx - 2] = 2.0 * inv_h2
    Ty = sp.diags(
        [np.full(ny - 1, inv_h2 + 0.5 / h),          # south neighbor
         np.full(ny, -2.0 * inv_h2),
         np.full(ny - 1, inv_h2 - 0.5 / h)],         # north neighbor
        offsets=[-1, 0, 1])
    A = (sp.kron(sp.identity(ny), Tx.tocsr()) +
         sp.kron(Ty, sp.identity(nx))).tocsr()
    edges = []
    for node in (0, nx - 1):
        e = np.zeros(nx)
        e[node] = 1.0
        diag = np.kron(np.ones(ny), e)
        edges.append(sp.diags((2.0 / h) * diag).tocsr())
    Fcols = np.column_stack([
        (-2.0 * beta / h) * np.kron(np.ones(ny), _unit(nx, 0)),
        (-2.0 * beta / h) * np.kron(np.ones(ny), _unit(nx, nx - 1)),
    ])
    return A, edges, Fcols, n


def _unit(n: int, i: int) -> np.ndarray:
    e = np.zeros(n)
    e[i] = 1.0
    return e


def gen_advdiff(n0: int, beta: float) -> ProblemSpec:
    """Lyapunov-plus-positive problem from the advection-diffusion model.

    The two extra terms carry the left- and right-edge state-control
    couplings, stored with their raw ghost-elimination entries 2/h; the
    spec's operator weight records beta^2 together with the boundary
    quadrature weight h of the control channels, which keeps the splitting
    contractive as the grid refines.  The right-hand side columns are the
    corresponding input vectors, -2*beta/h on each edge.
    """
    A, edges, F, _ = _advdiff_parts(n0, beta)
    h = 1.0 / (n0 + 1)
    return ProblemSpec(
        A=A, B=A.T.tocsr(),
        N=edges, H=[Nk.T.tocsr() for Nk in edges],
        F=F, T=np.eye(2), G=F.copy(),
        kind="lyapunov", pi_weight=beta ** 2 * h)


def gen_multiterm_sylvester(n0_a: int, n0_b: int, beta: float) -> ProblemSpec:
    """Multi-term Sylvester problem from two advection-diffusion grids.

    The row side comes from a grid with n0_a interior lines, the column side
    from an independent grid with n0_b lines, transposed so that both
    spectra stay in the left half-plane.  Coincides with the Lyapunov
    generator up to transposition when the grids agree; each side
    contributes the square root of its boundary quadrature weight to the
    operator scaling.
    """
    Aa, edges_a, Fa, _ = _advdiff_parts(n0_a, beta)
    Ab, edges_b, Fb, _ = _advdiff_parts(n0_b, beta)
    ha, hb = 1.0 / (n0_a + 1), 1.0 / (n0_b + 1)
    return ProblemSpec(
        A=Aa, B=Ab.T.tocsr(),
        N=edges_a, H=[Nk.T.tocsr() for Nk in edges_b],
        F=Fa, T=np.eye(2), G=Fb,
        kind="sylvester", pi_weight=beta ** 2 * np.sqrt(ha * hb))
