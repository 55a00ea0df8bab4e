"""Quadratic certificates for linear maps: direct, series, time-varying."""

import numpy as np
import pytest

from lyapcert.dynsys import LinearTV
from lyapcert.errors import (
    CertificateNotFoundError,
    DecayNotDetectedError,
    SeriesDivergenceError,
    SteinSolvabilityError,
)
from lyapcert.rng import Rng
from lyapcert.stein import (
    classify_linear,
    instability_certificate,
    solve_stein_kron,
    solve_stein_series,
    solve_tv_lyapunov,
    verify_transition_decay,
)


def rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


class TestClassify:
    def test_strictly_stable_scalar(self):
        rep = classify_linear(np.array([[0.5]]))
        assert rep.schur and rep.solvable
        assert rep.spectral_radius == pytest.approx(0.5, abs=1e-14)

    def test_reciprocal_pair_not_solvable(self):
        rep = classify_linear(np.diag([2.0, 0.5]))
        assert not rep.schur
        assert not rep.solvable  # lambda_1 * lambda_2 = 1

    def test_unit_circle_semisimple_vs_defective(self):
        ok = classify_linear(rotation(0.7))
        bad = classify_linear(np.array([[1.0, 1.0], [0.0, 1.0]]))
        assert ok.marginal_multiplicity_ok
        assert not bad.marginal_multiplicity_ok

    def test_unstable_but_solvable(self):
        rep = classify_linear(np.array([[2.0]]))
        assert not rep.schur and rep.solvable


class TestGoldenSolutions:
    def test_stable_scalar_value(self):
        # P = q / (1 - a^2) = 1 / 0.75
        sol = solve_stein_kron(np.array([[0.5]]), np.array([[1.0]]))
        assert sol.P[0, 0] == pytest.approx(4.0 / 3.0, abs=1e-12)
        assert sol.positive_definite

    def test_unstable_scalar_value(self):
        sol = solve_stein_kron(np.array([[2.0]]), np.array([[1.0]]))
        assert sol.P[0, 0] == pytest.approx(-1.0 / 3.0, abs=1e-12)
        assert not sol.positive_definite

    def test_series_matches_kron(self):
        sol = solve_stein_series(np.array([[0.5]]), np.array([[1.0]]))
        assert sol.P[0, 0] == pytest.approx(4.0 / 3.0, abs=1e-10)
        assert sol.terms is not None and sol.terms > 1

    def test_decrement_identity_scalar(self):
        a, q = 0.5, 1.0
        P = solve_stein_kron(np.array([[a]]), np.array([[q]])).P[0, 0]
        for x in (1.0, -2.0, 0.3):
            dv = P * (a * x) ** 2 - P * x**2
            assert dv == pytest.approx(-q * x**2, abs=1e-10)

    def test_2d_residual(self):
        A = np.array([[0.4, 0.3], [0.0, 0.5]])
        Q = np.array([[2.0, 0.5], [0.5, 1.0]])
        for sol in (solve_stein_kron(A, Q), solve_stein_series(A, Q)):
            res = np.linalg.norm(A.T @ sol.P @ A - sol.P + Q, ord=np.inf)
            assert res <= 1e-9 * np.linalg.norm(Q, ord=np.inf)
            assert sol.positive_definite


class TestSolvability:
    def test_reciprocal_pair_raises(self):
        with pytest.raises(SteinSolvabilityError):
            solve_stein_kron(np.diag([2.0, 0.5]), np.eye(2))

    def test_unit_eigenvalue_raises(self):
        with pytest.raises(SteinSolvabilityError):
            solve_stein_kron(np.array([[1.0]]), np.array([[1.0]]))

    def test_series_needs_strict_stability(self):
        with pytest.raises(SeriesDivergenceError):
            solve_stein_series(np.array([[1.5]]), np.array([[1.0]]))

    def test_random_schur_families_always_solvable(self):
        rng = Rng(314)
        for trial in range(40):
            n = 2 + trial % 4
            M = rng.matrix(n, n)
            rho = max(abs(np.linalg.eigvals(M)))
            A = M * (0.85 / rho)
            sol = solve_stein_kron(A, np.eye(n))
            assert sol.positive_definite


class TestInstability:
    def test_direct_witness(self):
        P1, gamma = instability_certificate(np.array([[2.0]]))
        assert gamma == 1.0
        eigs = np.linalg.eigvalsh(P1)
        assert eigs.min() < 0  # V = -x' P1 x is positive somewhere

    def test_rescaled_witness_when_products_hit_one(self):
        # reciprocal spectrum: direct solve impossible, grid rescue needed
        A = np.diag([2.0, 0.5])
        P1, gamma = instability_certificate(A)
        assert gamma > 1.0
        assert np.linalg.eigvalsh(P1).min() < 0
        # the expansion inequality dV >= (gamma^2 - 1) V wherever V > 0
        V = lambda x: -x @ P1 @ x
        for x in (np.array([1.0, 0.0]), np.array([0.9, 0.1])):
            if V(x) > 0:
                assert V(A @ x) >= (gamma**2) * V(x) - 1e-9

    def test_stable_matrix_refused(self):
        with pytest.raises(CertificateNotFoundError):
            instability_certificate(np.array([[0.9]]))


class TestTimeVarying:
    def test_constant_scalar_envelope(self):
        ltv = LinearTV(dim=1, matrix_fn=lambda t: np.array([[0.5]]))
        env = verify_transition_decay(ltv)
        assert env.gain == pytest.approx(1.0, abs=1e-9)
        assert env.rate == pytest.approx(np.log(2.0), abs=1e-9)
        assert env.uniform_bound == pytest.approx(1.0, abs=1e-12)

    def test_alternating_gain_rate(self):
        mats = (np.diag([0.2]), np.diag([0.8]))
        ltv = LinearTV(dim=1, matrix_fn=lambda t: mats[t % 2])
        env = verify_transition_decay(ltv)
        # per-two-step factor 0.16, so the per-step rate is ln(1/0.4)
        assert env.rate == pytest.approx(np.log(1.0 / 0.4), abs=1e-9)
        # the envelope dominates sampled transition norms pointwise
        prod = np.eye(1)
        for t in range(12):
            assert np.linalg.norm(prod) <= env.gain * np.exp(-env.rate * t) * (1 + 1e-9)
            prod = ltv.matrix_fn(t) @ prod

    def test_identity_has_no_decay(self):
        ltv = LinearTV(dim=1, matrix_fn=lambda t: np.eye(1))
        with pytest.raises(DecayNotDetectedError):
            verify_transition_decay(ltv)

    def test_tv_solution_satisfies_stepwise_identity(self):
        mats = (np.array([[0.5, 0.1], [0.0, 0.3]]), np.array([[0.2, 0.0], [0.1, 0.6]]))
        ltv = LinearTV(dim=2, matrix_fn=lambda t: mats[t % 2])
        env = verify_transition_decay(ltv)
        P = solve_tv_lyapunov(ltv, lambda t: np.eye(2), env)
        for t in range(6):
            A = ltv.matrix_fn(t)
            res = A.T @ P(t + 1) @ A - P(t) + np.eye(2)
            assert np.linalg.norm(res, ord=np.inf) < 1e-8
            eigs = np.linalg.eigvalsh(P(t))
            assert eigs.min() >= 1.0 - 1e-9  # P(t) >= Q = I termwise

    def test_periodic_coefficients_give_periodic_solution(self):
        mats = (np.array([[0.4]]), np.array([[0.7]]))
        ltv = LinearTV(dim=1, matrix_fn=lambda t: mats[t % 2])
        env = verify_transition_decay(ltv)
        P = solve_tv_lyapunov(ltv, lambda t: np.eye(1), env)
        assert P(0)[0, 0] == pytest.approx(P(2)[0, 0], rel=1e-8)
        assert P(1)[0, 0] == pytest.approx(P(3)[0, 0], rel=1e-8)
