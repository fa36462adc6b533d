"""Shared helpers for the test suite."""

import numpy as np

import mtsylv as mt


def stable_random(n, rng, shift=1.5):
    """Uniform [0,1) matrix shifted to have its spectrum in the left half-plane."""
    M = rng.random((n, n))
    return M - shift * np.max(np.linalg.eigvals(M).real) * np.eye(n)


def factored_rhs(n, m, r, rng):
    F = rng.standard_normal((n, r))
    T = np.diag(rng.random(r) + 0.5)
    G = rng.standard_normal((m, r))
    return F, T, G


def random_spec(n, m, ell, beta, seed):
    return mt.gen_random_dense(mt.GeneratorParams(n=n, m=m, ell=ell, beta=beta, seed=seed))


def diag_modulus_spec(moduli, m=4, seed=3):
    """A = B = -1/2 I, N1 = diag(moduli), H1 = I: the iteration matrix is
    I_m kron diag(moduli), so its eigenvalues are exactly the given values."""
    n = len(moduli)
    rng = np.random.default_rng(seed)
    Y = rng.standard_normal((n, m))
    U, s, Vh = np.linalg.svd(Y, full_matrices=False)
    return mt.ProblemSpec(A=-0.5 * np.eye(n), B=-0.5 * np.eye(m),
                          N=[np.diag(moduli)], H=[np.eye(m)],
                          F=U, T=np.diag(s), G=Vh.T)


def product_modulus_spec(dvals, hvals, seed=3):
    """A = B = -1/2 I, N1 = diag(d), H1 = diag(h): iteration-matrix
    eigenvalues are all products d_i * h_j."""
    n, m = len(dvals), len(hvals)
    rng = np.random.default_rng(seed)
    Y = rng.standard_normal((n, m))
    U, s, Vh = np.linalg.svd(Y, full_matrices=False)
    return mt.ProblemSpec(A=-0.5 * np.eye(n), B=-0.5 * np.eye(m),
                          N=[np.diag(dvals)], H=[np.diag(hvals)],
                          F=U, T=np.diag(s), G=Vh.T)


def random_triple(n, m, z, rng, scale=1.0):
    return mt.LowRankTriple(rng.standard_normal((n, z)),
                            scale * np.diag(rng.random(z) + 0.1),
                            rng.standard_normal((m, z)))


def spectral_err(X, Y):
    return np.linalg.norm(np.asarray(X) - np.asarray(Y), 2)
