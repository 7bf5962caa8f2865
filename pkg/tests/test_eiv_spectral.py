# -*- coding: utf-8 -*-

import numpy as np
import pytest
from numpy.testing import assert_allclose

from eiv_errors import DimensionError, ParameterError
from eiv_solver import ConstraintKind, ConstraintSet, solve_constrained_tikhonov
from eiv_spectral import approximate_rank, psi_col_norm, ridge_min_value, svd, typicality_D


def test_svd_examples():
    assert_allclose(svd(np.eye(3)).singular_values, [1.0, 1.0, 1.0])
    assert_allclose(svd(np.diag([3.0, 0.0])).singular_values, [3.0, 0.0])
    x, y = np.array([1.0, 2.0, 2.0]), np.array([3.0, 4.0])
    decomposition = svd(np.outer(x, y))
    assert decomposition.singular_values[0] == pytest.approx(15.0)
    assert decomposition.singular_values[1] <= 1e-10
    assert decomposition.rank() == 1


def test_svd_reconstruction_and_order(rng):
    A = rng.standard_normal((7, 4))
    decomposition = svd(A)
    assert np.linalg.norm(A - decomposition.reconstruct()) <= 1e-8 * np.linalg.norm(A)
    assert np.all(np.diff(decomposition.singular_values) <= 0)
    assert_allclose(decomposition.right_vectors.T @ decomposition.right_vectors, np.eye(4), atol=1e-12)
    assert decomposition.shape == (7, 4)


def test_svd_rejects_non_finite():
    with pytest.raises(ParameterError):
        svd(np.array([[1.0, np.nan]]))


def test_ridge_min_value_examples():
    assert ridge_min_value(np.zeros((2, 2)), [1.0, 2.0], 2.0, 1.0) == pytest.approx(4.0 * 5.0)
    assert ridge_min_value(np.eye(2), [1.0, 0.0], 1.0, 1.0) == pytest.approx(0.5)
    assert ridge_min_value(np.diag([2.0, 0.0]), [1.0, 1.0], 1.0, 1.0) == pytest.approx(1.2)


def test_ridge_min_value_rejects_bad_arguments():
    with pytest.raises(ParameterError):
        ridge_min_value(np.eye(2), [1.0, 0.0], 0.0, 1.0)
    with pytest.raises(DimensionError):
        ridge_min_value(np.eye(2), [1.0, 0.0, 0.0], 1.0, 1.0)


def test_ridge_min_value_matches_solver(rng):
    euclidean = ConstraintSet(ConstraintKind.EUCLIDEAN)
    eta = 1.5
    for _ in range(100):
        n, p = rng.integers(1, 9), rng.integers(1, 9)
        A = rng.standard_normal((n, p))
        b = rng.standard_normal(n)
        beta = np.sqrt(n * (eta ** 2 - 1.0))
        fit = solve_constrained_tikhonov(A, b, np.eye(p), np.zeros(p), eta, euclidean)
        assert fit.loss == pytest.approx(ridge_min_value(A, b, 1.0, beta), rel=1e-8, abs=1e-12)


def test_typicality_orthogonal_post_period():
    A = np.array([[5.0, 0.0, 0.0], [0.0, 2.0, 0.0]])
    a_e = np.array([0.0, 0.0, 4.0])
    report = typicality_D(a_e, svd(A), sigma=1.0, eta=1.0, n=2)
    assert report.D == pytest.approx(4.0)
    assert report.out_of_rowspace_sq == pytest.approx(16.0)


def test_typicality_single_component():
    a_e = np.array([3.0, 0.0])
    report = typicality_D(a_e, svd(np.diag([10.0, 0.0])), sigma=1.0, eta=1.0, n=4, post_residual_sd=0.5)
    assert report.D == pytest.approx(3.0 / np.sqrt(26.0))
    assert report.D_tilde == pytest.approx(3.0 / np.sqrt(26.0) + 0.5)
    k, projection, damping = report.per_component[0]
    assert k == 1
    assert abs(projection) == pytest.approx(3.0)
    assert damping == pytest.approx(1.0 / 26.0)


def test_typicality_zero_matrix():
    report = typicality_D([1.0, 2.0, 2.0], svd(np.zeros((4, 3))), sigma=0.5, eta=2.0, n=4)
    assert report.D == pytest.approx(3.0)
    assert report.per_component == ()


def test_typicality_decomposes_into_components(rng):
    A = rng.standard_normal((6, 4)) @ np.diag([5.0, 3.0, 0.0, 0.0])
    a_e = rng.standard_normal(4)
    report = typicality_D(a_e, svd(A), sigma=0.7, eta=1.3, n=6)
    damped = sum(projection ** 2 * damping for _, projection, damping in report.per_component)
    assert report.D ** 2 == pytest.approx(damped + report.out_of_rowspace_sq)
    assert report.D <= np.linalg.norm(a_e) + 1e-12


def test_typicality_nondecreasing_in_eta_and_n_for_fixed_signal(rng):
    A = rng.standard_normal((10, 5))
    a_e = rng.standard_normal(5)
    decomposition = svd(A)
    by_eta = [typicality_D(a_e, decomposition, 1.0, eta, 10).D for eta in (0.5, 1.0, 2.0, 4.0)]
    by_n = [typicality_D(a_e, decomposition, 1.0, 1.0, n).D for n in (5, 10, 20, 40)]
    assert np.all(np.diff(by_eta) >= -1e-12)
    assert np.all(np.diff(by_n) >= -1e-12)


def test_typicality_rejects_degenerate_parameters():
    decomposition = svd(np.eye(2))
    with pytest.raises(ParameterError):
        typicality_D([1.0, 0.0], decomposition, sigma=1.0, eta=0.0, n=2)
    with pytest.raises(ParameterError):
        typicality_D([1.0, 0.0], decomposition, sigma=0.0, eta=1.0, n=2)
    with pytest.raises(DimensionError):
        typicality_D([1.0, 0.0, 0.0], decomposition, sigma=1.0, eta=1.0, n=2)


def test_approximate_rank_examples():
    assert approximate_rank(svd(np.zeros((3, 3))), s=1.0, v=1.0, sigma=1.0, p_eff=1.0, width=1.0) == 0
    assert approximate_rank([10.0, 1e-12], s=1.0, v=1.0, sigma=1.0, p_eff=1.0, width=1.0, c=1.0) == 1
    assert approximate_rank([10.0, 5.0], s=1e6, v=1.0, sigma=1.0, p_eff=1.0, width=1.0) == 1


def test_approximate_rank_monotone_in_s():
    values = [40.0, 20.0, 10.0, 5.0, 1.0]
    ranks = [approximate_rank(values, s=s, v=1.0, sigma=1.0, p_eff=4.0, width=2.0) for s in (0.01, 0.1, 1.0, 10.0)]
    assert all(a >= b for a, b in zip(ranks, ranks[1:]))
    assert ranks[0] <= len(values)


def test_approximate_rank_rejects_bad_inputs():
    with pytest.raises(ParameterError):
        approximate_rank([1.0], s=1.0, v=1.0, sigma=1.0, p_eff=0.0, width=1.0)
    with pytest.raises(ParameterError):
        approximate_rank([1.0], s=1.0, v=1.0, sigma=1.0, p_eff=1.0, width=-1.0)


def test_psi_col_norm():
    psi_col = np.array([0.0, 0.6])
    assert psi_col_norm(psi_col, np.eye(2)) == pytest.approx(0.6)
    assert psi_col_norm(psi_col, 4.0 * np.eye(2)) == pytest.approx(1.2)
