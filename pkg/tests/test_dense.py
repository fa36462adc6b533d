import numpy as np
import pytest

import mtsylv as mt
from mtsylv.dense import quasi_triangular_blocks, schur_eigenvalues

from conftest import random_spec, stable_random


def kron_solve_two_term(A, B, Y):
    # independent oracle: solve A X + X B = -Y through the vectorized system
    n, m = A.shape[0], B.shape[0]
    L = np.kron(np.eye(m), A) + np.kron(B.T, np.eye(n))
    return np.linalg.solve(L, -Y.reshape(-1, order="F")).reshape(n, m, order="F")


class TestThinQr:
    def test_identity(self):
        Q, R = mt.thin_qr(np.eye(3))
        assert np.allclose(Q @ R, np.eye(3), atol=1e-14)
        assert np.allclose(np.abs(Q), np.eye(3), atol=1e-14)

    def test_two_vector(self):
        Q, R = mt.thin_qr(np.array([[3.0], [4.0]]))
        assert np.allclose(np.abs(Q[:, 0]), [0.6, 0.8])
        assert abs(abs(R[0, 0]) - 5.0) < 1e-14

    def test_reconstruction(self):
        rng = np.random.default_rng(0)
        M = rng.standard_normal((10, 4))
        Q, R = mt.thin_qr(M)
        assert np.linalg.norm(Q @ R - M) <= 1e-12 * np.linalg.norm(M)
        assert np.allclose(Q.T @ Q, np.eye(4), atol=1e-13)

    def test_zero_columns(self):
        Q, R = mt.thin_qr(np.zeros((5, 0)))
        assert Q.shape == (5, 0) and R.shape == (0, 0)

    def test_non_finite(self):
        with pytest.raises(mt.InvalidInputError):
            mt.thin_qr(np.array([[np.nan, 1.0]]))


class TestSvd:
    def test_zero(self):
        U, s, V = mt.svd(np.zeros((3, 2)))
        assert np.allclose(s, [0.0, 0.0])

    def test_diagonal(self):
        U, s, V = mt.svd(np.diag([2.0, 1.0]))
        assert np.allclose(s, [2.0, 1.0])
        assert np.allclose(np.abs(U), np.eye(2), atol=1e-14)
        assert np.allclose(np.abs(V), np.eye(2), atol=1e-14)

    def test_power_iteration_oracle(self):
        rng = np.random.default_rng(1)
        M = rng.standard_normal((8, 5))
        _, s, _ = mt.svd(M)
        # power iteration on M^T M as an independent estimate of sigma_1
        v = rng.standard_normal(5)
        v /= np.linalg.norm(v)
        for _ in range(5000):
            w = M.T @ (M @ v)
            v = w / np.linalg.norm(w)
        sigma = np.linalg.norm(M @ v)
        assert abs(s[0] - sigma) <= 1e-10 * sigma

    def test_reconstruction(self):
        rng = np.random.default_rng(2)
        M = rng.standard_normal((7, 9))
        U, s, V = mt.svd(M)
        assert np.linalg.norm(U @ np.diag(s) @ V.T - M) <= 1e-12 * np.linalg.norm(M)


class TestRealSchur:
    def test_identity(self):
        f = mt.real_schur(np.eye(4))
        assert np.allclose(f.R, np.eye(4))

    def test_rotation_block(self):
        f = mt.real_schur(np.array([[0.0, 1.0], [-1.0, 0.0]]))
        blocks = quasi_triangular_blocks(f.R)
        assert blocks == [(0, 2)]
        eigs = schur_eigenvalues(f.R)
        assert np.allclose(sorted(eigs.imag), [-1.0, 1.0], atol=1e-12)
        assert np.allclose(eigs.real, 0.0, atol=1e-12)

    def test_symmetric(self):
        rng = np.random.default_rng(3)
        M = rng.standard_normal((5, 5))
        M = M + M.T
        f = mt.real_schur(M)
        assert np.allclose(f.R, np.diag(np.diag(f.R)), atol=1e-10)
        assert np.allclose(sorted(np.diag(f.R)), np.linalg.eigvalsh(M), atol=1e-10)

    @pytest.mark.parametrize("n", [5, 40, 200])
    def test_invariants(self, n):
        rng = np.random.default_rng(n)
        M = rng.standard_normal((n, n))
        f = mt.real_schur(M)
        assert np.linalg.norm(f.Q.T @ f.Q - np.eye(n)) <= 1e-12 * np.sqrt(n)
        assert np.linalg.norm(f.Q @ f.R @ f.Q.T - M) <= 1e-10 * np.linalg.norm(M)
        if n > 2:
            assert np.all(np.tril(f.R, -2) == 0.0)
        sub = np.diagonal(f.R, -1)
        assert not np.any((sub[:-1] != 0) & (sub[1:] != 0))
        eigs = np.sort_complex(schur_eigenvalues(f.R))
        ref = np.sort_complex(np.linalg.eigvals(M))
        assert np.max(np.abs(eigs - ref)) < 1e-8


class TestQuasiTriangularSylvester:
    def test_scalar(self):
        X = mt.solve_quasi_triangular_sylvester(
            np.array([[-2.0]]), np.array([[-1.0]]), np.array([[-3.0]]))
        assert np.allclose(X, [[1.0]])

    def test_diagonal(self):
        X = mt.solve_quasi_triangular_sylvester(
            np.diag([-1.0, -2.0]), np.array([[-3.0]]),
            np.array([[-12.0], [-10.0]]))
        assert np.allclose(X, [[3.0], [2.0]])

    def test_kron_oracle(self):
        rng = np.random.default_rng(4)
        Ra = mt.real_schur(stable_random(6, rng)).R
        Rb = mt.real_schur(stable_random(4, rng)).R
        C = rng.standard_normal((6, 4))
        X = mt.solve_quasi_triangular_sylvester(Ra, Rb, C)
        Xref = kron_solve_two_term(Ra, Rb, -C)
        assert np.linalg.norm(X - Xref) <= 1e-9 * np.linalg.norm(Xref)
        assert np.linalg.norm(Ra @ X + X @ Rb - C) <= 1e-10 * (
            np.linalg.norm(Ra) + np.linalg.norm(Rb)) * np.linalg.norm(X) + 1e-12

    def test_spectra_overlap(self):
        with pytest.raises(mt.SpectraOverlapError):
            mt.solve_quasi_triangular_sylvester(
                np.array([[1.0]]), np.array([[-1.0]]), np.array([[1.0]]))

    def test_rejects_full_matrix(self):
        rng = np.random.default_rng(5)
        with pytest.raises(mt.InvalidInputError):
            mt.solve_quasi_triangular_sylvester(
                rng.standard_normal((4, 4)), np.eye(3), np.zeros((4, 3)))


class TestDenseSylvesterSolve:
    def test_scalar(self):
        assert np.allclose(mt.dense_sylvester_solve(
            np.array([[-2.0]]), np.array([[-1.0]]), np.array([[3.0]])), [[1.0]])

    def test_identity_case(self):
        X = mt.dense_sylvester_solve(-np.eye(3), -np.eye(2), 2.0 * np.ones((3, 2)))
        assert np.allclose(X, np.ones((3, 2)), atol=1e-12)

    def test_kron_oracle(self):
        rng = np.random.default_rng(6)
        A = stable_random(7, rng)
        B = stable_random(5, rng)
        Y = rng.standard_normal((7, 5))
        X = mt.dense_sylvester_solve(A, B, Y)
        Xref = kron_solve_two_term(A, B, Y)
        assert np.linalg.norm(X - Xref) <= 1e-9 * np.linalg.norm(Xref)

    def test_matches_quasi_triangular_on_triangular_input(self):
        rng = np.random.default_rng(7)
        Ra = np.triu(rng.standard_normal((5, 5))) - 3 * np.eye(5)
        Rb = np.triu(rng.standard_normal((4, 4))) - 3 * np.eye(4)
        Y = rng.standard_normal((5, 4))
        X1 = mt.dense_sylvester_solve(Ra, Rb, Y)
        X2 = mt.solve_quasi_triangular_sylvester(Ra, Rb, -Y)
        assert np.linalg.norm(X1 - X2) <= 1e-12 * max(1.0, np.linalg.norm(X2))


class TestOperator:
    def test_no_extra_terms(self):
        spec = mt.ProblemSpec(A=np.eye(2), B=np.eye(2), N=[], H=[],
                              F=np.eye(2), T=np.eye(2), G=np.eye(2))
        assert np.allclose(mt.apply_operator(spec, np.eye(2)), 2 * np.eye(2))

    def test_identity_term(self):
        rng = np.random.default_rng(8)
        X = rng.standard_normal((3, 3))
        spec = mt.ProblemSpec(A=np.zeros((3, 3)), B=np.zeros((3, 3)),
                              N=[np.eye(3)], H=[np.eye(3)],
                              F=np.eye(3), T=np.eye(3), G=np.eye(3))
        assert np.allclose(mt.apply_operator(spec, X), X)

    def test_kron_oracle(self):
        spec = random_spec(5, 4, 2, 0.3, seed=11)
        sys = mt.kron_assemble(spec)
        rng = np.random.default_rng(9)
        X = rng.standard_normal((5, 4))
        lhs = mt.apply_operator(spec, X)
        rhs = ((sys.L + sys.P) @ X.reshape(-1, order="F")).reshape(5, 4, order="F")
        assert np.linalg.norm(lhs - rhs) <= 1e-12 * max(1, np.linalg.norm(rhs))

    def test_dimension_mismatch(self):
        spec = random_spec(5, 4, 0, 0.0, seed=12)
        with pytest.raises(mt.InvalidInputError):
            mt.apply_operator(spec, np.zeros((4, 5)))


class TestResidualNorm:
    def test_zero_iterate(self):
        spec = random_spec(6, 4, 1, 0.2, seed=13)
        assert abs(mt.dense_residual_norm(spec, np.zeros((6, 4)))
                   - np.linalg.norm(spec.rhs_dense(), 2)) < 1e-12

    def test_scalar_hand_value(self):
        spec = mt.ProblemSpec(A=np.array([[-3.0]]), B=np.zeros((1, 1)),
                              N=[], H=[], F=np.array([[1.0]]),
                              T=np.array([[3.0]]), G=np.array([[1.0]]))
        assert abs(mt.dense_residual_norm(spec, np.array([[0.5]])) - 1.5) < 1e-14

    def test_oracle_solution(self):
        spec = random_spec(6, 5, 2, 0.1, seed=14)
        X = mt.direct_solve_vec(mt.kron_assemble(spec))
        assert mt.dense_residual_norm(spec, X) <= 1e-10 * np.linalg.norm(
            spec.rhs_dense(), 2)


@pytest.mark.parametrize("shape", [(30, 12), (120, 80), (200, 200)])
def test_qr_svd_reconstruction_tolerances(shape):
    rng = np.random.default_rng(shape[0])
    M = rng.standard_normal(shape)
    Q, R = mt.thin_qr(M)
    assert np.linalg.norm(Q @ R - M) <= 1e-12 * np.linalg.norm(M)
    U, s, V = mt.svd(M)
    assert np.linalg.norm(U @ np.diag(s) @ V.T - M) <= 1e-12 * np.linalg.norm(M)
    assert np.all(np.diff(s) <= 1e-12)


def test_dense_solver_matches_oracle_over_sizes():
    for seed, (n, m) in enumerate([(3, 2), (8, 6), (12, 9)]):
        rng = np.random.default_rng(100 + seed)
        A = stable_random(n, rng)
        B = stable_random(m, rng)
        Y = rng.standard_normal((n, m))
        X = mt.dense_sylvester_solve(A, B, Y)
        Xref = kron_solve_two_term(A, B, Y)
        assert np.linalg.norm(X - Xref) <= 1e-9 * max(1, np.linalg.norm(Xref))
