# -*- coding: utf-8 -*-

"""
Experimentos de aceitação em escala completa.

Executar com: pytest -m slow
"""

import numpy as np
import pytest

from eiv_inference import VarianceMethod, fit_oracle, fit_weights, variance_estimate
from eiv_paneldata import NoiseSpec, SignalSpec, build_truth, generate_panel
from eiv_random import replication_seed
from eiv_simlab import (
    Scenario,
    coverage_summary,
    deviation_violation_rate,
    ks_statistic,
    prediction_coupling_rate,
    preset_config,
    rate_slope,
    run_scenario,
)
from eiv_solver import ConstraintKind, ConstraintSet, solve_constrained_tikhonov, solve_oracle

pytestmark = pytest.mark.slow


def _preset_scenario(name):
    config = preset_config(name)
    return Scenario.from_dict(config["scenario"], **config["solver"])


@pytest.fixture(scope="module")
def fourth_root_table():
    return run_scenario(_preset_scenario("fourth_root_rate"))


def test_ideal_regime_coverage_and_normality():
    table = run_scenario(_preset_scenario("ideal_coverage"))
    coverage, _ = coverage_summary(table)
    assert 0.93 <= coverage <= 0.97
    assert ks_statistic(table.frame["z"].dropna()) <= 0.05


def test_fourth_root_rate(fourth_root_table):
    slope, _ = rate_slope(fourth_root_table, "n", "coef_dev")
    assert -0.35 <= slope <= -0.15


def test_prediction_coupling_on_rate_grid(fourth_root_table):
    rates = prediction_coupling_rate(fourth_root_table, quantile=0.95)
    assert len(rates) == 6
    assert (rates <= 0.25).all()


def test_calibrated_deviation_bound():
    rates = deviation_violation_rate(run_scenario(_preset_scenario("deviation_bound")), quantile=0.99, w1=3.0, w2=3.0)
    assert (rates <= 0.05).all()


def test_jackknife_agrees_with_plugin_for_many_treated_series():
    n, p, p_e, eta = 500, 400, 50, 1.5
    simplex = ConstraintSet(ConstraintKind.SIMPLEX)
    noise = NoiseSpec.isotropic(n, p, 1.0, p_e=p_e)
    truth = build_truth(SignalSpec(rank=2, singular_values=(2.0 * np.sqrt(n), np.sqrt(n))), noise, tau=0.0, seed=21)
    oracle = fit_oracle(truth, eta, simplex)
    plugin = noise.sigma_e * np.sqrt(1.0 / p_e + float(oracle.theta @ oracle.theta))

    estimates = []
    for rep in range(200):
        panel = generate_panel(truth, replication_seed(21, 0, rep))
        fit = fit_weights(panel, noise, eta, simplex)
        estimates.append(variance_estimate(fit, panel, noise, VarianceMethod.JACKKNIFE_TREATED))
    assert np.median(estimates) == pytest.approx(plugin, rel=0.2)


def test_solver_certificates_on_random_instances():
    rng = np.random.default_rng(2024)
    constraints = [
        ConstraintSet(ConstraintKind.SIMPLEX),
        ConstraintSet(ConstraintKind.L1_BALL, 1.5),
        ConstraintSet(ConstraintKind.NONNEGATIVE),
        ConstraintSet(ConstraintKind.EUCLIDEAN),
    ]
    for i in range(200):
        constraint = constraints[i % 4]
        eta = (1.0, 1.5, 2.0)[i % 3]
        n, p = int(rng.integers(5, 40)), int(rng.integers(2, 15))
        X = rng.standard_normal((n, p))
        y = rng.standard_normal(n)
        root = rng.standard_normal((p, p))
        sigma_row = root @ root.T / p + 0.1 * np.eye(p)
        psi = 0.1 * rng.standard_normal(p)
        solve = solve_oracle if i % 2 else solve_constrained_tikhonov
        fit = solve(X, y, sigma_row, psi, eta, constraint)
        assert fit.converged
        assert fit.optimality_residual <= 1e-8 * (1.0 + abs(fit.loss))
