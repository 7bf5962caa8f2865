# -*- coding: utf-8 -*-

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose
from pandas.testing import assert_frame_equal
from scipy import stats

from eiv_errors import ConvergenceError, EmptyInputError, ParameterError
from eiv_paneldata import IndependenceAxis, NoiseSpec, SignalSpec, build_truth
from eiv_simlab import (
    PRESETS,
    TABLE_COLUMNS,
    CoverageTarget,
    ExperimentType,
    IntervalSigma,
    ReplicationTable,
    Scenario,
    bound_violation_rate,
    coverage_summary,
    deviation_violation_rate,
    ks_statistic,
    noise_concentration,
    prediction_coupling_rate,
    preset_config,
    rate_slope,
    run_scenario,
    summarize,
)
from eiv_solver import ConstraintKind, SolverOptions


def _scenario(**changes):
    values = dict(name="teste", n=20, p=5, p_e=2, sigma=0.5, tau=1.0, n_reps=10, base_seed=3)
    values.update(changes)
    return Scenario(**values)


def _table(**columns):
    return ReplicationTable(pd.DataFrame(columns))


# Execução de cenários

def test_run_scenario_shape_and_columns():
    table = run_scenario(_scenario(grid=({"n": 20}, {"n": 30})), workers=1)
    assert len(table) == 20
    assert list(table.frame.columns) == TABLE_COLUMNS


def test_z_uses_true_sigma_tau():
    frame = run_scenario(_scenario(), workers=1).frame
    expected = (frame["tau_hat"] - frame["e_tau_tilde"]) / frame["sigma_tau"]
    assert_allclose(frame["z"].to_numpy(dtype=float), expected.to_numpy(dtype=float))
    assert not np.allclose(frame["sigma_tau_hat"], frame["sigma_tau"])


def test_width_column_is_unit_scale():
    frame = run_scenario(_scenario(sigma=0.5), workers=1).frame
    assert_allclose(frame["width"].to_numpy(dtype=float), np.sqrt(np.log(5)))
    assert not frame["width_per_unit_s"].any()
    assert list(table.frame["grid_index"]) == [0] * 10 + [1] * 10
    assert list(table.frame["rep"]) == list(range(10)) * 2
    assert table.frame["seed"].nunique() == 20


def test_run_scenario_is_deterministic():
    first = run_scenario(_scenario(), workers=1)
    second = run_scenario(_scenario(), workers=4)
    assert_frame_equal(first.frame, second.frame)
    other_seed = run_scenario(_scenario(base_seed=4), workers=1)
    assert not np.allclose(first.frame["tau_hat"], other_seed.frame["tau_hat"])


def test_zero_noise_matches_oracle():
    table = run_scenario(_scenario(sigma=0.0, n_reps=1), workers=1)
    row = table.frame.iloc[0]
    assert row["coef_dev"] <= 1e-8
    assert row["pred_dev"] <= 1e-8
    assert row["noise"] == pytest.approx(0.0, abs=1e-12)
    assert np.isnan(row["z"])


def test_decomposition_closes_per_row():
    frame = run_scenario(_scenario(), workers=1).frame
    total = frame["dev"] + frame["bias"] + frame["noise"]
    assert np.allclose(total, frame["tau_hat"] - frame["tau"], atol=1e-12)


def test_oracle_noise_is_centered():
    frame = run_scenario(_scenario(n=30, p=6, n_reps=200), workers=1).frame
    centered = frame["tau_tilde"] - frame["e_tau_tilde"]
    sigma_tau = frame["sigma_tau"].iloc[0]
    assert abs(centered.mean()) <= 4.0 * sigma_tau / np.sqrt(200)


def test_oracle_estimator_coverage_is_nominal():
    scenario = _scenario(n=30, p=6, n_reps=400, use_oracle_estimator=True, interval_sigma=IntervalSigma.TRUE)
    coverage, se = coverage_summary(run_scenario(scenario, workers=1))
    assert abs(coverage - 0.95) <= 3.0 * np.sqrt(0.95 * 0.05 / 400)
    assert se > 0


def test_nonconvergence_aborts_grid_point():
    scenario = _scenario(sigma=1.0, options=SolverOptions(tol=1e-15, max_iter=1))
    with pytest.raises(ConvergenceError) as info:
        run_scenario(scenario, workers=1)
    assert info.value.details["grid_index"] == 0


# Validação do cenário

def test_scenario_validation():
    with pytest.raises(ParameterError):
        _scenario(n_reps=0)
    with pytest.raises(ParameterError):
        _scenario(alpha=1.5)
    with pytest.raises(ParameterError):
        _scenario(grid=({"m": 3},))
    with pytest.raises(ParameterError):
        _scenario(grid=({"n": 2.5},))


def test_grid_points_override_base():
    points = _scenario(grid=({"n": 40, "eta": 2.0},)).grid_points()
    assert points[0]["n"] == 40 and points[0]["eta"] == 2.0
    assert points[0]["p"] == 5
    assert len(_scenario().grid_points()) == 1


def test_truth_scales_singular_values_with_n():
    truth = _scenario(n=25).truth_for(0)
    singular_values = np.linalg.svd(truth.A, compute_uv=False)
    assert singular_values[0] == pytest.approx(2.0 * 5.0)
    assert singular_values[1] == pytest.approx(1.0 * 5.0)


def test_from_dict_builds_signal_and_constraint():
    scenario = Scenario.from_dict({"n": 40, "p": 8, "rank": 3, "singular_values": [3.0, 2.0, 1.0]},
                                  eta=1.5, constraint="l1:2")
    assert scenario.signal.rank == 3
    assert scenario.constraint.kind == ConstraintKind.L1_BALL
    assert scenario.constraint.radius == 2.0
    assert scenario.to_dict()["constraint"] == "l1:2"


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_build_valid_scenarios(name):
    config = preset_config(name)
    scenario = Scenario.from_dict(config["scenario"], **config["solver"])
    assert scenario.name == name
    assert len(scenario.grid_points()) >= 1


def test_preset_config_unknown_and_copied():
    with pytest.raises(ParameterError):
        preset_config("nao_existe")
    config = preset_config("ideal_coverage")
    config["scenario"]["n"] = 1
    assert PRESETS["ideal_coverage"]["scenario"]["n"] == 500


# Resumos

def test_coverage_summary_examples():
    assert coverage_summary(_table(covered_e_tau_tilde=[True] * 10)) == (1.0, 0.0)
    coverage, se = coverage_summary(_table(covered_tau=[True, False] * 200), CoverageTarget.TAU)
    assert coverage == 0.5
    assert se == pytest.approx(0.025)
    with pytest.raises(EmptyInputError):
        coverage_summary(_table(covered_e_tau_tilde=[]))


def test_ks_statistic_examples():
    assert ks_statistic(np.zeros(10)) == pytest.approx(0.5)
    m = 1000
    quantiles = stats.norm.ppf((np.arange(1, m + 1) - 0.5) / m)
    assert ks_statistic(quantiles) <= 0.5 / m + 1e-6
    assert ks_statistic(quantiles + 3.0) >= 0.8
    with pytest.raises(EmptyInputError):
        ks_statistic([1.0])


def test_rate_slope_exact_power_law():
    n = np.repeat([100, 200, 400, 800], 3)
    slope, stderr = rate_slope(_table(n=n, coef_dev=n ** -0.25))
    assert slope == pytest.approx(-0.25, abs=1e-10)
    assert stderr == pytest.approx(0.0, abs=1e-10)
    slope, _ = rate_slope(_table(n=n, coef_dev=np.full(n.size, 0.3)))
    assert slope == pytest.approx(0.0, abs=1e-12)


def test_rate_slope_errors():
    with pytest.raises(ParameterError):
        rate_slope(_table(n=[100, 200], coef_dev=[1.0, 0.5]))
    with pytest.raises(ParameterError):
        rate_slope(_table(n=[100, 200, 400], coef_dev=[1.0, 0.0, 0.5]))
    with pytest.raises(ParameterError):
        rate_slope(_table(n=[100, 200, 400], coef_dev=[1.0, 0.7, 0.5]), x_field="p")


def test_bound_violation_rate_examples():
    table = _table(coef_dev=[0.1, 0.2, 0.3, 0.4], pred_dev=[1.0, 2.0, 3.0, 4.0])
    assert bound_violation_rate(table, np.inf, np.inf) == (0.0, 0.0)
    assert bound_violation_rate(table, 0.0, 2.5) == (1.0, 0.5)


def test_prediction_coupling_rate_per_grid_point():
    table = _table(grid_index=[0] * 4 + [1] * 4, n=[4] * 8, eta=[1.0] * 8,
                   coef_dev=[1.0, 1.0, 1.0, 1.0, 0.5, 0.5, 0.5, 0.5],
                   pred_dev=[1.0, 1.0, 3.0, 1.0, 0.5, 0.5, 0.5, 0.5])
    rates = prediction_coupling_rate(table, quantile=0.95)
    # limite eta sqrt(n) s = 2 s
    assert rates.loc[0] == pytest.approx(0.25)
    assert rates.loc[1] == 0.0


def test_deviation_violation_rate_from_run():
    scenario = _scenario(experiment=ExperimentType.DEVIATION_BOUND_CHECK, n_reps=20)
    rates = deviation_violation_rate(run_scenario(scenario, workers=1))
    assert list(rates.index) == [0]
    assert 0.0 <= rates.loc[0] <= 1.0


def test_noise_concentration_schedule():
    truth = build_truth(SignalSpec(rank=2, singular_values=(6.0, 3.0)), NoiseSpec.isotropic(10, 4, 1.0), 0.0, seed=1)
    report = noise_concentration(truth, 64, seed=2)
    assert report["max_abs_mean"] <= report["mean_tolerance"]
    schedule = report["row_covariance_schedule"]
    assert [entry["reps"] for entry in schedule] == [1, 2, 4, 8, 16, 32, 64]
    assert schedule[-1]["frobenius_distance"] < schedule[0]["frobenius_distance"]


def test_noise_concentration_iid_row_covariance():
    n, p = 10, 4
    sigma_col = np.diag(np.linspace(0.7, 1.7, n))
    noise = NoiseSpec(
        independence_axis=IndependenceAxis.COLUMNS,
        sigma_row=np.eye(p),
        sigma_col=sigma_col,
        sigma_nu=sigma_col,
        psi=np.zeros(p),
        psi_col=np.zeros(n),
        sigma_e=1.0,
    )
    truth = build_truth(SignalSpec(rank=2, singular_values=(6.0, 3.0)), noise, 0.0, seed=1)
    assert_allclose(noise.iid_columns_row_covariance(), 1.2 * np.eye(p))

    short = noise_concentration(truth, 4, seed=3)
    long = noise_concentration(truth, 256, seed=3)
    assert long["iid_row_covariance_distance"] < 0.5 * short["iid_row_covariance_distance"]
    assert long["iid_row_covariance_distance"] < 0.25
    # sigma_row = I difere de trace(sigma_col)/n I, a distância do calendário não converge a zero
    assert long["row_covariance_schedule"][-1]["frobenius_distance"] > 0.3


def test_summarize_coverage_run():
    scenario = _scenario()
    summary = summarize(run_scenario(scenario, workers=1), scenario)
    assert summary["rows"] == 10
    assert summary["grid_points"] == 1
    assert 0.0 <= summary["coverage_e_tau_tilde"]["coverage"] <= 1.0
    assert summary["nonconverged_fraction"] == 0.0
    assert "ks_z" in summary
    assert "rate_slope_coef_dev" not in summary
