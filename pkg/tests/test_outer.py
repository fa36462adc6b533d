import numpy as np
import pytest

import mtsylv as mt
from mtsylv.lowrank import spectral_norm

from conftest import diag_modulus_spec, product_modulus_spec, random_spec, random_triple


def oracle_solution(spec):
    return mt.direct_solve_vec(mt.kron_assemble(spec))


class TestStationaryDense:
    def test_two_term_converges_immediately(self):
        spec = random_spec(8, 6, 0, 0.0, seed=0)
        X, tr = mt.stationary_dense_solve(spec, mt.SolverConfig(tau_outer=1e-10))
        assert tr.status == "converged" and tr.iters == 1
        assert mt.dense_residual_norm(spec, X) <= 1e-10 * np.linalg.norm(
            spec.rhs_dense(), 2)

    def test_plain_rate_and_first_extrapolation(self):
        spec = diag_modulus_spec([0.9, 0.5, 0.1], m=4, seed=3)
        plain_cfg = mt.SolverConfig(window=3, rre_enabled=False,
                                    tau_outer=1e-12, k_max=20)
        _, tr = mt.stationary_dense_solve(spec, plain_cfg)
        res = [r.scaled_residual for r in tr.records]
        ratios = [res[k + 1] / res[k] for k in range(5, 15)]
        rate = np.exp(np.mean(np.log(ratios)))
        assert abs(rate - 0.9) <= 0.15 * 0.9
        rre_cfg = mt.SolverConfig(window=3, rre_enabled=True,
                                  tau_outer=1e-10, k_max=20)
        _, tr2 = mt.stationary_dense_solve(spec, rre_cfg)
        assert tr2.records[2].extrapolated
        assert tr2.records[2].scaled_residual < 1e-8
        assert tr2.records[2].pre_extrapolation_residual > 1e-2

    def test_divergence_cure(self):
        spec = diag_modulus_spec([1.05, 0.5, 0.1], m=4, seed=3)
        plain = mt.SolverConfig(window=3, rre_enabled=False,
                                tau_outer=1e-10, k_max=50)
        _, tr = mt.stationary_dense_solve(spec, plain)
        assert tr.status == "diverged"
        rre = mt.SolverConfig(window=3, rre_enabled=True,
                              tau_outer=1e-10, k_max=50)
        X, tr2 = mt.stationary_dense_solve(spec, rre)
        assert tr2.status == "converged" and tr2.iters <= 50
        assert np.linalg.norm(X - oracle_solution(spec), 2) <= 1e-7

    def test_hard_divergence_raises(self):
        spec = diag_modulus_spec([3.0, 2.0], m=3, seed=4)
        with pytest.raises(mt.DivergedError) as err:
            mt.stationary_dense_solve(spec, mt.SolverConfig(
                window=2, rre_enabled=False, tau_outer=1e-10, k_max=50))
        assert err.value.trace.records  # trace travels with the error

    def test_trace_flags(self):
        spec = random_spec(7, 5, 2, 0.12, seed=5)
        _, tr = mt.stationary_dense_solve(spec, mt.SolverConfig(
            window=3, rre_enabled=True, tau_outer=1e-13, k_max=11))
        assert [r.k for r in tr.records] == list(range(1, tr.iters + 1))
        for r in tr.records:
            assert r.extrapolated == (r.k >= 3 and r.k % 3 == 0)
            assert r.rank is None and r.inner_steps is None

    def test_window_one_identity(self):
        spec = random_spec(6, 5, 1, 0.2, seed=6)
        _, t0 = mt.stationary_dense_solve(spec, mt.SolverConfig(
            window=1, rre_enabled=False, tau_outer=1e-10, k_max=15))
        _, t1 = mt.stationary_dense_solve(spec, mt.SolverConfig(
            window=1, rre_enabled=True, tau_outer=1e-10, k_max=15))
        assert t0.iters == t1.iters
        for a, b in zip(t0.records, t1.records):
            assert a.scaled_residual == b.scaled_residual
            assert not a.extrapolated and b.extrapolated


class TestResidualEstimator:
    def test_zero_iterate(self):
        spec = random_spec(10, 8, 1, 0.3, seed=7)
        est = mt.estimate_residual_spectral_norm(
            spec, mt.LowRankTriple.zero(10, 8), rel_tol=1e-6, max_iters=500, seed=1)
        ref = np.linalg.norm(spec.rhs_dense(), 2)
        assert abs(est - ref) <= 1e-3 * ref

    def test_random_state_accuracy(self):
        spec = random_spec(12, 9, 2, 0.3, seed=8)
        rng = np.random.default_rng(9)
        x = random_triple(12, 9, 3, rng)
        est = mt.estimate_residual_spectral_norm(
            spec, x, rel_tol=1e-7, max_iters=2000, seed=2)
        ref = np.linalg.norm(
            mt.apply_operator(spec, x.to_dense()) + spec.rhs_dense(), 2)
        assert abs(est - ref) <= 0.01 * ref

    def test_exact_solution(self):
        spec = random_spec(8, 6, 1, 0.2, seed=10)
        Xd = oracle_solution(spec)
        U, s, V = mt.svd(Xd)
        est = mt.estimate_residual_spectral_norm(
            spec, mt.LowRankTriple(U, np.diag(s), V),
            rel_tol=1e-4, max_iters=200, seed=3)
        assert est <= 1e-8 * np.linalg.norm(spec.rhs_dense(), 2)


class TestNonstationaryLowrank:
    def test_two_term_rank_one(self):
        rng = np.random.default_rng(11)
        A = rng.random((12, 12)) - 12 * np.eye(12)
        F = rng.standard_normal((12, 1))
        spec = mt.ProblemSpec(A=A, B=A.T, N=[], H=[], F=F, T=np.eye(1),
                              G=F.copy(), kind="lyapunov")
        cfg = mt.SolverConfig(tau_outer=1e-10, eta=1e-11, tau_trunc=1e-13,
                              dynamic_trunc=False, inner="adi", seed=0)
        X, tr = mt.nonstationary_lowrank_solve(spec, cfg)
        assert tr.status == "converged" and tr.iters == 1

    def test_matches_dense_path(self):
        spec = random_spec(20, 15, 2, 0.05, seed=12)
        dense_cfg = mt.SolverConfig(window=3, rre_enabled=False,
                                    tau_outer=1e-9, k_max=12)
        _, tr_d = mt.stationary_dense_solve(spec, dense_cfg)
        lr_cfg = mt.SolverConfig(window=3, rre_enabled=False, tau_outer=1e-9,
                                 eta=1e-12, tau_trunc=1e-15, dynamic_trunc=False,
                                 k_max=12, inner="adi", seed=1,
                                 est_rel_tol=1e-10, est_max_iters=5000)
        _, tr_l = mt.nonstationary_lowrank_solve(spec, lr_cfg)
        assert tr_l.iters == tr_d.iters
        for a, b in zip(tr_d.records, tr_l.records):
            assert abs(a.scaled_residual - b.scaled_residual) <= 1e-6 * max(
                a.scaled_residual, 1e-14)

    def test_matches_dense_solution(self):
        spec = random_spec(20, 15, 2, 0.05, seed=13)
        Xd, _ = mt.stationary_dense_solve(spec, mt.SolverConfig(
            window=3, tau_outer=1e-11, k_max=40))
        Xl, tr = mt.nonstationary_lowrank_solve(spec, mt.SolverConfig(
            window=3, tau_outer=1e-11, eta=1e-6, tau_trunc=1e-12,
            dynamic_trunc=False, k_max=40, inner="adi", seed=2))
        assert tr.converged
        assert np.linalg.norm(Xl.to_dense() - Xd, 2) <= 1e-6

    def test_trace_fields(self):
        spec = random_spec(14, 11, 1, 0.1, seed=14)
        _, tr = mt.nonstationary_lowrank_solve(spec, mt.SolverConfig(
            window=2, tau_outer=1e-9, k_max=10, inner="adi", seed=3))
        for r in tr.records:
            assert r.rank >= 0 and r.inner_steps > 0
            assert r.extrapolated == (r.k >= 2 and r.k % 2 == 0)

    def test_eksm_inner(self):
        spec = random_spec(16, 12, 1, 0.08, seed=15)
        X, tr = mt.nonstationary_lowrank_solve(spec, mt.SolverConfig(
            window=3, tau_outer=1e-9, inner="eksm", part_size=2, seed=4))
        assert tr.converged
        assert np.linalg.norm(X.to_dense() - oracle_solution(spec), 2) <= 1e-5


def test_rre_speedup_over_random_instances():
    # specs with moderate contraction and a spectral gap: extrapolation must
    # strictly reduce the outer step count
    wins = 0
    total = 0
    for seed in range(40):
        spec = random_spec(8, 6, 2, 0.3, seed=100 + seed)
        moduli = mt.iteration_spectrum(spec).moduli
        if not (0.3 < moduli[0] < 0.95) or moduli[0] / moduli[2] < 2.0:
            continue
        total += 1
        cfg0 = mt.SolverConfig(window=3, rre_enabled=False, tau_outer=1e-10, k_max=200)
        cfg1 = mt.SolverConfig(window=3, rre_enabled=True, tau_outer=1e-10, k_max=200)
        _, t0 = mt.stationary_dense_solve(spec, cfg0)
        _, t1 = mt.stationary_dense_solve(spec, cfg1)
        assert t0.converged and t1.converged
        if t1.iters < t0.iters:
            wins += 1
        if total >= 10:
            break
    assert total >= 10
    assert wins == total
