"""Sampled verification of candidate functions on shell grids."""

import numpy as np
import pytest

from lyapcert.certcheck import (
    CandidateFunction,
    check_decrease,
    check_exponential_conditions,
    check_instability_region,
    check_positive_definite,
    check_sublevel_invariance,
    fit_classk_envelopes,
    sample_lasalle_zero_set,
    shell_grid,
)
from lyapcert.dynsys import DynSystem
from lyapcert.errors import HypothesisViolationError, InapplicableError


def contraction(dim=2, factor=0.5):
    return DynSystem(dim=dim, map_fn=lambda t, x: factor * x, autonomous=True)


class TestCandidateFunction:
    def test_quadratic_constructor_symmetrizes(self):
        V = CandidateFunction.quadratic(np.array([[1.0, 1.0], [0.0, 1.0]]))
        # effective P is the symmetric part
        assert V(0, np.array([1.0, 1.0])) == pytest.approx(3.0)

    def test_nonvanishing_origin_rejected(self):
        with pytest.raises(ValueError):
            CandidateFunction(eval_fn=lambda t, x: float(x @ x) + 1.0, dim=2)

    def test_call_coerces_input(self):
        V = CandidateFunction.quadratic(np.eye(2))
        assert V(0, [3.0, 4.0]) == pytest.approx(25.0)


class TestShellGrid:
    def test_radii_span_and_dedup(self):
        grid = shell_grid(3, 2.0, n_shells=5, n_directions=8)
        norms = np.linalg.norm(grid, axis=1)
        assert norms.max() == pytest.approx(2.0, rel=1e-12)
        assert norms.min() > 0.0
        assert grid.shape[1] == 3

    def test_point_count_and_shell_norms(self):
        grid = shell_grid(2, 1.0, n_shells=2, n_directions=4)
        assert grid.shape == (8, 2)
        norms = np.linalg.norm(grid, axis=1)
        assert set(np.round(norms, 12)) == {0.001, 1.0}


class TestPositiveDefinite:
    def test_identity_quadratic_passes(self):
        V = CandidateFunction.quadratic(np.eye(2))
        rep = check_positive_definite(V, shell_grid(2, 1.0))
        assert rep.passed
        assert rep.worst_margin > 0.0
        assert rep.details["min_eig_P"] == pytest.approx(1.0)

    def test_indefinite_quadratic_fails(self):
        V = CandidateFunction.quadratic(np.diag([1.0, -1.0]))
        rep = check_positive_definite(V, shell_grid(2, 1.0))
        assert not rep.passed
        assert rep.worst_margin < 0.0


class TestDecrease:
    def test_contraction_passes_strict(self):
        V = CandidateFunction.quadratic(np.eye(2))
        rep = check_decrease(V, contraction(), shell_grid(2, 1.0), strict=True)
        assert rep.passed
        assert rep.condition == "strict_decrease"

    def test_expansion_fails(self):
        V = CandidateFunction.quadratic(np.eye(2))
        sys = DynSystem(dim=2, map_fn=lambda t, x: 1.5 * x, autonomous=True)
        rep = check_decrease(V, sys, shell_grid(2, 1.0))
        assert not rep.passed
        assert rep.worst_margin > 0.0

    def test_isometry_passes_nonstrict_only(self):
        V = CandidateFunction.quadratic(np.eye(2))
        rot = np.array([[0.0, -1.0], [1.0, 0.0]])
        sys = DynSystem(dim=2, map_fn=lambda t, x: rot @ x, autonomous=True)
        assert check_decrease(V, sys, shell_grid(2, 1.0)).passed
        assert not check_decrease(V, sys, shell_grid(2, 1.0), strict=True).passed


class TestExponentialConditions:
    def test_scalar_coefficients_are_exact(self):
        V = CandidateFunction.quadratic(np.eye(1))
        rep, a, b = check_exponential_conditions(V, contraction(1, 0.5), shell_grid(1, 1.0))
        assert rep.passed
        assert a == pytest.approx(1.0, rel=1e-12)
        assert b == pytest.approx(0.75, rel=1e-12)  # x^2 -> 0.25 x^2
        assert rep.details["contraction_factor"] == pytest.approx(0.25, rel=1e-10)

    def test_nondecreasing_candidate_fails(self):
        V = CandidateFunction.quadratic(np.eye(1))
        sys = DynSystem(dim=1, map_fn=lambda t, x: x.copy(), autonomous=True)
        rep, _, b = check_exponential_conditions(V, sys, shell_grid(1, 1.0))
        assert not rep.passed
        assert b <= 0.0


class TestClassKEnvelopes:
    def test_quadratic_uses_eigenvalues(self):
        V = CandidateFunction.quadratic(np.diag([2.0, 5.0]))
        lo, hi = fit_classk_envelopes(V, shell_grid(2, 1.0))
        assert lo.coeff == pytest.approx(2.0) and lo.exponent == 2.0
        assert hi.coeff == pytest.approx(5.0) and hi.exponent == 2.0

    def test_quartic_fit_brackets_samples(self):
        V = CandidateFunction(eval_fn=lambda t, x: float((x @ x) ** 2), dim=2)
        grid = shell_grid(2, 1.5)
        lo, hi = fit_classk_envelopes(V, grid)
        assert lo.exponent == pytest.approx(4.0, rel=1e-6)
        for x in grid:
            r = np.linalg.norm(x)
            if r == 0.0:
                continue
            v = (x @ x) ** 2
            assert lo.coeff * r**lo.exponent <= v * (1 + 1e-9)
            assert hi.coeff * r**hi.exponent >= v * (1 - 1e-9)

    def test_indefinite_candidate_rejected(self):
        V = CandidateFunction.quadratic(np.diag([1.0, -1.0]))
        with pytest.raises(HypothesisViolationError):
            fit_classk_envelopes(V, shell_grid(2, 1.0))


class TestSublevelInvariance:
    def test_contraction_keeps_sublevels(self):
        V = CandidateFunction.quadratic(np.eye(2))
        rep = check_sublevel_invariance(V, contraction(), 0.5, shell_grid(2, 1.0))
        assert rep.passed

    def test_expansion_escapes(self):
        V = CandidateFunction.quadratic(np.eye(2))
        sys = DynSystem(dim=2, map_fn=lambda t, x: 2.0 * x, autonomous=True)
        rep = check_sublevel_invariance(V, sys, 0.5, shell_grid(2, 1.0))
        assert not rep.passed


class TestInstabilityRegion:
    def test_expanding_direction_witnessed(self):
        # saddle: expanding first axis, contracting second
        sys = DynSystem(dim=2, map_fn=lambda t, x: np.array([2.0 * x[0], 0.4 * x[1]]))
        V = CandidateFunction.quadratic(np.diag([1.0, -1.0]))
        rep = check_instability_region(V, sys, shell_grid(2, 1.0))
        assert rep.passed
        assert "origin_witness" in rep.details

    def test_nowhere_positive_is_inapplicable(self):
        V = CandidateFunction.quadratic(-np.eye(2))
        with pytest.raises(InapplicableError):
            check_instability_region(V, contraction(), shell_grid(2, 1.0))


class TestLasalle:
    def test_zero_set_of_partial_decrement(self):
        # map contracts x0 only; Delta V vanishes on the x0 = 0 axis
        sys = DynSystem(dim=2, map_fn=lambda t, x: np.array([0.5 * x[0], x[1]]))
        V = CandidateFunction.quadratic(np.eye(2))
        pts = sample_lasalle_zero_set(V, sys, shell_grid(2, 1.0))
        assert len(pts) > 0
        for t, x in pts:
            assert abs(x[0]) < 1e-6
