# -*- coding: utf-8 -*-

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from eiv_errors import DimensionError, EmptyInputError, InfeasiblePointError, ParameterError, UnboundedProblemError
from eiv_solver import (
    ConstraintKind,
    ConstraintSet,
    ConvexityCertificate,
    ProblemSpec,
    RegularizationMode,
    SolverOptions,
    excess_loss_identity_check,
    problem_loss,
    project_l1_ball,
    project_simplex,
    solve,
    solve_constrained_tikhonov,
    solve_oracle,
    variational_gap,
)

SIMPLEX = ConstraintSet(ConstraintKind.SIMPLEX)
EUCLIDEAN = ConstraintSet(ConstraintKind.EUCLIDEAN)
NONNEG = ConstraintSet(ConstraintKind.NONNEGATIVE)


def _random_spd(rng, p):
    root = rng.standard_normal((p, p))
    return root @ root.T / p + 0.5 * np.eye(p)


# Projeções

def test_project_simplex_examples():
    assert_allclose(project_simplex([0.2, 0.8]), [0.2, 0.8])
    assert_allclose(project_simplex([2.0, 0.0]), [1.0, 0.0])
    assert_allclose(project_simplex([1.0, 0.5, -0.5]), [0.75, 0.25, 0.0])


def test_project_simplex_empty_fails():
    with pytest.raises(EmptyInputError):
        project_simplex([])


def test_project_l1_ball_examples():
    assert_array_equal(project_l1_ball([0.3, -0.2], 1.0), [0.3, -0.2])
    assert_allclose(project_l1_ball([2.0, 0.0], 1.0), [1.0, 0.0])
    assert_allclose(project_l1_ball([1.0, 1.0], 1.0), [0.5, 0.5])
    assert_allclose(project_l1_ball([3.0, -1.0], 1.0), [1.0, 0.0])


def test_project_l1_ball_rejects_nonpositive_radius():
    with pytest.raises(ParameterError):
        project_l1_ball([1.0], 0.0)


def test_projections_idempotent_and_nearest(rng):
    ball = ConstraintSet(ConstraintKind.L1_BALL, 1.5)
    for _ in range(1000):
        v = 3.0 * rng.standard_normal(5)
        for constraint in (SIMPLEX, ball):
            w = constraint.project(v)
            assert constraint.contains(w)
            assert_allclose(constraint.project(w), w, atol=1e-12)
            feasible = constraint.project(rng.standard_normal(5))
            assert np.linalg.norm(v - w) <= np.linalg.norm(v - feasible) + 1e-12


def test_constraint_parse_and_label():
    assert ConstraintSet.parse("simplex").kind == ConstraintKind.SIMPLEX
    assert ConstraintSet.parse("nonneg").kind == ConstraintKind.NONNEGATIVE
    ball = ConstraintSet.parse("l1:2.5")
    assert ball.kind == ConstraintKind.L1_BALL and ball.radius == 2.5
    assert ball.label == "l1:2.5"
    assert ConstraintSet.parse("Euclidean").is_compact is False
    for text in ("box", "l1:abc", "l1:-1"):
        with pytest.raises(ParameterError):
            ConstraintSet.parse(text)


# Solver

def test_problem_spec_dimension_checks():
    with pytest.raises(DimensionError):
        ProblemSpec(np.eye(2), np.ones(3), np.eye(2), np.zeros(2), 1.0)
    with pytest.raises(DimensionError):
        ProblemSpec(np.eye(2), np.ones(2), np.eye(3), np.zeros(2), 1.0)
    with pytest.raises(ParameterError):
        ProblemSpec(np.eye(2), np.ones(2), np.eye(2), np.zeros(2), -1.0)


def test_solve_identity_interpolates_without_penalty():
    fit = solve_constrained_tikhonov(np.eye(2), [1.0, 2.0], np.eye(2), np.zeros(2), 1.0, EUCLIDEAN)
    assert fit.converged
    assert fit.theta0 == 0.0
    assert_allclose(fit.theta, [1.0, 2.0], atol=1e-8)


def test_solve_one_dimensional_penalty():
    # (theta - 1)^2 + (theta - 3)^2 + 2 theta^2 tem mínimo em 1
    fit = solve_constrained_tikhonov(np.ones((2, 1)), [1.0, 3.0], np.eye(1), np.zeros(1), np.sqrt(2.0), EUCLIDEAN)
    assert_allclose(fit.theta, [1.0], atol=1e-8)
    assert fit.loss == pytest.approx(6.0, abs=1e-8)


def test_solve_simplex_vertex():
    fit = solve_constrained_tikhonov(np.eye(2), [1.0, 0.0], np.eye(2), np.zeros(2), 1.0, SIMPLEX)
    assert fit.converged
    assert_allclose(fit.theta, [1.0, 0.0], atol=1e-6)
    assert fit.theta.min() >= -1e-12
    assert abs(fit.theta.sum() - 1.0) <= 1e-10


def test_solve_matches_normal_equations(rng):
    n, p, eta = 20, 4, 1.5
    X = rng.standard_normal((n, p))
    y = rng.standard_normal(n)
    sigma = _random_spd(rng, p)
    psi = rng.standard_normal(p)
    coefficient = n * (eta ** 2 - 1.0)
    expected = np.linalg.solve(X.T @ X + coefficient * sigma, X.T @ y + coefficient * sigma @ psi)

    fit = solve_constrained_tikhonov(X, y, sigma, psi, eta, EUCLIDEAN)
    assert fit.converged
    assert fit.convexity_certificate == ConvexityCertificate.CONVEX
    assert_allclose(fit.theta, expected, rtol=1e-6, atol=1e-8)


def test_solve_with_intercept_recovers_level(rng):
    X = rng.standard_normal((20, 4))
    theta_star = np.array([0.1, 0.2, 0.3, 0.4])
    fit = solve_constrained_tikhonov(X, 5.0 + X @ theta_star, np.eye(4), np.zeros(4), 1.0, SIMPLEX, intercept=True)
    assert fit.converged
    assert fit.theta0 == pytest.approx(5.0, abs=1e-3)
    assert_allclose(fit.theta, theta_star, atol=1e-3)


@pytest.mark.parametrize("constraint", [SIMPLEX, ConstraintSet(ConstraintKind.L1_BALL, 2.0), NONNEG, EUCLIDEAN])
@pytest.mark.parametrize("eta", [1.0, 1.5, 2.0])
def test_solver_certifies_optimality(rng, constraint, eta):
    for _ in range(4):
        X = rng.standard_normal((12, 4))
        y = X @ rng.dirichlet(np.ones(4)) + 0.3 * rng.standard_normal(12)
        fit = solve_constrained_tikhonov(X, y, _random_spd(rng, 4), rng.standard_normal(4), eta, constraint)
        assert fit.converged
        assert constraint.contains(fit.theta)
        assert fit.optimality_residual <= 1e-8 * (1.0 + abs(fit.loss))


def test_loss_trace_nonincreasing(rng):
    X = rng.standard_normal((30, 6))
    y = rng.standard_normal(30)
    fit = solve_constrained_tikhonov(X, y, np.eye(6), np.zeros(6), 1.2, SIMPLEX)
    trace = np.array(fit.loss_trace)
    assert trace.size >= 2
    assert np.all(np.diff(trace) <= 0.0)
    assert trace[-1] == pytest.approx(fit.loss, rel=1e-10, abs=1e-12)


def test_indefinite_on_unbounded_set_raises(rng):
    X = 0.1 * rng.standard_normal((10, 3))
    for constraint in (EUCLIDEAN, NONNEG):
        with pytest.raises(UnboundedProblemError):
            solve_constrained_tikhonov(X, np.ones(10), np.eye(3), np.zeros(3), 0.5, constraint)


def test_indefinite_on_simplex_is_flagged_and_polished(rng):
    X = 0.1 * rng.standard_normal((10, 3))
    y = rng.standard_normal(10)
    fit = solve_constrained_tikhonov(X, y, np.eye(3), np.zeros(3), 0.2, SIMPLEX)
    problem = ProblemSpec(X, y, np.eye(3), np.zeros(3), 0.2, constraint=SIMPLEX)
    assert fit.convexity_certificate == ConvexityCertificate.INDEFINITE_DETECTED
    assert SIMPLEX.contains(fit.theta)
    best_vertex = min(problem_loss(problem, 0.0, vertex) for vertex in np.eye(3))
    assert fit.loss <= best_vertex + 1e-9


def test_iteration_limit_reports_nonconvergence(rng):
    X = rng.standard_normal((40, 10))
    y = rng.standard_normal(40)
    fit = solve_constrained_tikhonov(X, y, np.eye(10), np.zeros(10), 1.0, NONNEG,
                                     options=SolverOptions(tol=1e-14, max_iter=1))
    assert fit.iterations == 1
    assert not fit.converged


def test_empirical_and_oracle_modes_agree_on_noiseless_data(rng):
    A = rng.standard_normal((15, 5))
    b = rng.standard_normal(15)
    sigma = _random_spd(rng, 5)
    psi = np.zeros(5)
    # n(1.25^2 - 1) = n 0.75^2 exatamente
    empirical = solve_constrained_tikhonov(A, b, sigma, psi, 1.25, SIMPLEX)
    oracle = solve_oracle(A, b, sigma, psi, 0.75, SIMPLEX)
    assert_array_equal(empirical.theta, oracle.theta)
    assert empirical.loss == oracle.loss


def test_oracle_mode_penalty_coefficient():
    problem = ProblemSpec(np.ones((4, 1)), np.ones(4), np.eye(1), np.zeros(1), 0.5, RegularizationMode.ORACLE)
    assert problem.penalty_coefficient == pytest.approx(1.0)
    assert problem.n == 4 and problem.p == 1


# Certificado de otimalidade

def test_variational_gap_zero_at_euclidean_minimizer():
    problem = ProblemSpec(np.ones((2, 1)), [1.0, 3.0], np.eye(1), np.zeros(1), np.sqrt(2.0), constraint=EUCLIDEAN)
    assert variational_gap(problem, 0.0, [1.0]) <= 1e-8
    assert variational_gap(problem, 0.0, [1.1]) > variational_gap(problem, 0.0, [1.0])


def test_variational_gap_simplex_vertices():
    problem = ProblemSpec(np.eye(2), [1.0, 0.0], np.eye(2), np.zeros(2), 1.0, constraint=SIMPLEX)
    assert variational_gap(problem, 0.0, [1.0, 0.0]) <= 1e-8
    assert variational_gap(problem, 0.0, [0.0, 1.0]) == pytest.approx(4.0)


def test_variational_gap_rejects_infeasible_points():
    problem = ProblemSpec(np.eye(2), [1.0, 0.0], np.eye(2), np.zeros(2), 1.0, constraint=SIMPLEX)
    with pytest.raises(InfeasiblePointError):
        variational_gap(problem, 0.0, [0.7, 0.7])
    with pytest.raises(InfeasiblePointError):
        variational_gap(problem, 1.0, [1.0, 0.0])


# Identidade do excesso de perda

def test_excess_loss_identity_zero_deviation(rng):
    X = rng.standard_normal((3, 2))
    problem = ProblemSpec(X, rng.standard_normal(3), np.eye(2), np.zeros(2), 1.0, constraint=EUCLIDEAN)
    lhs, rhs = excess_loss_identity_check(problem, [0.5, 0.5], np.zeros(2), np.zeros((3, 2)), np.zeros(3))
    assert lhs == pytest.approx(0.0, abs=1e-12)
    assert rhs == pytest.approx(0.0, abs=1e-12)


def test_excess_loss_identity_without_noise(rng):
    n, eta = 3, 1.5
    A = rng.standard_normal((n, 2))
    b = rng.standard_normal(n)
    sigma = _random_spd(rng, 2)
    psi = rng.standard_normal(2)
    theta, delta = rng.standard_normal(2), rng.standard_normal(2)
    problem = ProblemSpec(A, b, sigma, psi, eta, constraint=EUCLIDEAN)
    lhs, rhs = excess_loss_identity_check(problem, theta, delta, np.zeros((n, 2)), np.zeros(n))
    bracket = (A @ theta - b) @ A @ delta + n * eta ** 2 * (theta - psi) @ sigma @ delta
    expected = (A @ delta) @ (A @ delta) + n * (eta ** 2 - 1.0) * delta @ sigma @ delta + 2.0 * bracket
    assert lhs == pytest.approx(expected, rel=1e-10, abs=1e-10)
    assert rhs == pytest.approx(expected, rel=1e-10, abs=1e-10)


@pytest.mark.parametrize("eta", [0.0, 0.5, 1.0, 2.0])
def test_excess_loss_identity_random_instances(rng, eta):
    for _ in range(250):
        n, p = rng.integers(2, 8), rng.integers(1, 5)
        A = rng.standard_normal((n, p))
        eps = rng.standard_normal((n, p))
        b = rng.standard_normal(n)
        nu = rng.standard_normal(n)
        problem = ProblemSpec(A + eps, b + nu, _random_spd(rng, p), rng.standard_normal(p), eta, constraint=EUCLIDEAN)
        theta, delta = rng.standard_normal(p), rng.standard_normal(p)
        lhs, rhs = excess_loss_identity_check(problem, theta, delta, eps, nu)
        scale = 1.0 + abs(problem_loss(problem, 0.0, theta)) + abs(problem_loss(problem, 0.0, theta + delta))
        assert abs(lhs - rhs) <= 1e-10 * max(scale, abs(lhs))


def test_excess_loss_identity_rejects_intercept_and_bad_shapes():
    with_intercept = ProblemSpec(np.eye(2), np.ones(2), np.eye(2), np.zeros(2), 1.0, intercept=True)
    with pytest.raises(ParameterError):
        excess_loss_identity_check(with_intercept, np.zeros(2), np.zeros(2), np.zeros((2, 2)), np.zeros(2))
    problem = ProblemSpec(np.eye(2), np.ones(2), np.eye(2), np.zeros(2), 1.0)
    with pytest.raises(DimensionError):
        excess_loss_identity_check(problem, np.zeros(2), np.zeros(2), np.zeros((3, 2)), np.zeros(2))


def test_solve_does_not_mutate_inputs(rng):
    X = rng.standard_normal((8, 3))
    y = rng.standard_normal(8)
    X_copy, y_copy = X.copy(), y.copy()
    solve(ProblemSpec(X, y, np.eye(3), np.zeros(3), 1.0))
    assert_array_equal(X, X_copy)
    assert_array_equal(y, y_copy)
