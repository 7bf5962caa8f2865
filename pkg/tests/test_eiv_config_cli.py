# -*- coding: utf-8 -*-

import os
import json

import numpy as np
import pandas as pd
import pytest

from eiv_cli import main
from eiv_config import DEFAULT_CONFIG, Command, effective_config_json, merge_dict, parse_config
from eiv_errors import ConfigError
from eiv_rates import RefinedRateParams, WidthMode
from eiv_solver import ConstraintKind

ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
EXAMPLE_PANEL = os.path.join(ROOT, "data", "example_panel.csv")
EXAMPLE_CONFIGS = os.path.join(ROOT, "configs")


def _write_config(tmp_path, data, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def _read_json(path):
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


# Configuração

def test_defaults(tmp_path):
    config = parse_config("simulate", flags={"output_dir": str(tmp_path)})
    assert config.command == Command.SIMULATE
    assert config.eta == 1.0
    assert config.seed == 0
    assert config.constraint().kind == ConstraintKind.SIMPLEX
    assert config.intercept is None
    assert config.solver_options().tol == 1e-8


def test_flag_overrides_default(tmp_path):
    config = parse_config("simulate", flags={"eta": 2.0, "constraint": "l1:3", "output_dir": str(tmp_path)})
    assert config.eta == 2.0
    assert config.constraint().radius == 3.0
    assert config.scenario().eta == 2.0


def test_unknown_key_names_its_path(tmp_path):
    path = _write_config(tmp_path, {"solver": {"etaa": 1.0}})
    with pytest.raises(ConfigError) as info:
        parse_config("simulate", path, {"output_dir": str(tmp_path)})
    assert info.value.details["key_path"] == "solver.etaa"


def test_wrong_type_and_choice_rejected(tmp_path):
    with pytest.raises(ConfigError) as info:
        parse_config("simulate", _write_config(tmp_path, {"solver": {"eta": "alto"}}), {"output_dir": str(tmp_path)})
    assert info.value.details["key_path"] == "solver.eta"
    with pytest.raises(ConfigError) as info:
        parse_config("simulate", _write_config(tmp_path, {"inference": {"variance_method": "bootstrap"}}),
                     {"output_dir": str(tmp_path)})
    assert info.value.details["key_path"] == "inference.variance_method"


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError) as info:
        parse_config("simulate", str(tmp_path / "nao_existe.json"))
    assert info.value.details["key_path"] == "--config"


def test_precedence_defaults_preset_file_flags(tmp_path):
    preset_only = parse_config("simulate", flags={"output_dir": str(tmp_path)}, preset="euclidean_rate")
    assert preset_only.eta == 1.5
    assert preset_only.settings["scenario"]["p"] == 20

    path = _write_config(tmp_path, {"solver": {"eta": 0.8}, "scenario": {"p": 12}})
    with_file = parse_config("simulate", path, {"output_dir": str(tmp_path)}, preset="euclidean_rate")
    assert with_file.eta == 0.8
    assert with_file.settings["scenario"]["p"] == 12
    assert with_file.constraint().kind == ConstraintKind.EUCLIDEAN

    with_flags = parse_config("simulate", path, {"eta": 2.5, "n_reps": 7, "output_dir": str(tmp_path)},
                              preset="euclidean_rate")
    assert with_flags.eta == 2.5
    assert with_flags.scenario().n_reps == 7


def test_unknown_preset(tmp_path):
    with pytest.raises(ConfigError) as info:
        parse_config("simulate", flags={"output_dir": str(tmp_path)}, preset="nao_existe")
    assert info.value.details["key_path"] == "--preset"


def test_semantic_validation(tmp_path):
    with pytest.raises(ConfigError) as info:
        parse_config("estimate", flags={"output_dir": str(tmp_path)})
    assert info.value.details["key_path"] == "input.panel"
    with pytest.raises(ConfigError) as info:
        parse_config("estimate", flags={"panel": str(tmp_path / "x.csv"), "output_dir": str(tmp_path)})
    assert info.value.details["key_path"] == "input.panel"
    with pytest.raises(ConfigError) as info:
        parse_config("simulate", flags={"alpha": 1.0, "output_dir": str(tmp_path)})
    assert info.value.details["key_path"] == "inference.alpha"
    with pytest.raises(ConfigError) as info:
        parse_config("simulate", flags={"constraint": "l1:-1", "output_dir": str(tmp_path)})
    assert info.value.details["key_path"] == "solver.constraint"
    with pytest.raises(ConfigError) as info:
        parse_config("rates", _write_config(tmp_path, {"rates": {"v": 0.5}}), {"output_dir": str(tmp_path)})
    assert info.value.details["key_path"] == "rates"


def test_rate_params_modes(tmp_path):
    simplified = parse_config("rates", flags={"output_dir": str(tmp_path)}).rate_params()
    assert simplified.width_mode == WidthMode.L1_BOUND
    assert not isinstance(simplified, RefinedRateParams)
    path = _write_config(tmp_path, {"rates": {"mode": "refined", "K": 2.0}})
    refined = parse_config("rates", path, {"output_dir": str(tmp_path)}).rate_params()
    assert isinstance(refined, RefinedRateParams)
    assert refined.K == 2.0


def test_merge_dict_is_recursive():
    base = {"a": {"b": 1, "c": 2}, "d": 3}
    merge_dict(base, {"a": {"c": 5}, "d": 4})
    assert base == {"a": {"b": 1, "c": 5}, "d": 4}


def test_effective_config_round_trips(tmp_path):
    config = parse_config("simulate", flags={"eta": 1.7, "output_dir": str(tmp_path)})
    path = tmp_path / "effective.json"
    path.write_text(effective_config_json(config), encoding="utf-8")
    again = parse_config("simulate", str(path))
    assert again.settings == config.settings
    assert set(again.settings) == set(DEFAULT_CONFIG)


def test_bundled_configs_parse(tmp_path):
    estimate = parse_config("estimate", os.path.join(EXAMPLE_CONFIGS, "estimate_example.json"),
                            {"panel": EXAMPLE_PANEL, "output_dir": str(tmp_path)})
    assert estimate.layout().treated_column == "tratado"
    simulate = parse_config("simulate", os.path.join(EXAMPLE_CONFIGS, "simulate_example.json"),
                            {"output_dir": str(tmp_path)})
    assert simulate.scenario().p_e == 2
    rates = parse_config("rates", os.path.join(EXAMPLE_CONFIGS, "rates_example.json"),
                         {"output_dir": str(tmp_path)})
    assert rates.rate_params().p == 10


# Linha de comando

def test_cli_estimate_writes_outputs(tmp_path):
    code = main(["estimate", "--config", os.path.join(EXAMPLE_CONFIGS, "estimate_example.json"),
                 "--panel", EXAMPLE_PANEL, "--output-dir", str(tmp_path)])
    assert code == 0
    for name in ("report.json", "table.csv", "effective_config.json"):
        assert (tmp_path / name).exists()
    report = _read_json(tmp_path / "report.json")
    inference = report["inference"]
    assert inference["ci_low"] <= inference["tau_hat"] <= inference["ci_high"]
    weights = pd.read_csv(tmp_path / "table.csv")
    assert list(weights["unit"]) == ["c1", "c2", "c3", "c4", "c5"]
    assert weights["weight"].sum() == pytest.approx(1.0, abs=1e-6)
    assert (weights["weight"] >= -1e-9).all()


def test_cli_estimate_reproducible_from_effective_config(tmp_path):
    first = tmp_path / "primeira"
    assert main(["estimate", "--config", os.path.join(EXAMPLE_CONFIGS, "estimate_example.json"),
                 "--panel", EXAMPLE_PANEL, "--output-dir", str(first)]) == 0
    second = tmp_path / "segunda"
    assert main(["estimate", "--config", str(first / "effective_config.json"),
                 "--output-dir", str(second)]) == 0
    assert _read_json(first / "report.json") == _read_json(second / "report.json")


def test_cli_table_format_prints_report(tmp_path, capsys):
    code = main(["estimate", "--config", os.path.join(EXAMPLE_CONFIGS, "estimate_example.json"),
                 "--panel", EXAMPLE_PANEL, "--output-dir", str(tmp_path), "--format", "table"])
    assert code == 0
    assert "weight" in capsys.readouterr().out
    assert (tmp_path / "report.txt").exists()


def test_cli_unsolvable_rates_exit_two(tmp_path):
    path = _write_config(tmp_path, {"rates": {"p": 200, "width_mode": "euclidean_bound", "rank": 0}})
    code = main(["rates", "--config", path, "--output-dir", str(tmp_path / "out")])
    assert code == 2
    error = _read_json(tmp_path / "out" / "error.json")
    assert error["kind"] == "rate_unsolvable"
    assert not (tmp_path / "out" / "report.json").exists()
    effective = _read_json(tmp_path / "out" / "effective_config.json")
    assert effective["rates"]["p"] == 200


@pytest.mark.parametrize("command", ["estimate", "diagnose"])
def test_cli_nonconverged_fit_exit_two(tmp_path, command):
    code = main([command, "--config", os.path.join(EXAMPLE_CONFIGS, "estimate_example.json"),
                 "--panel", EXAMPLE_PANEL, "--max-iter", "1", "--tol", "1e-14", "--output-dir", str(tmp_path)])
    assert code == 2
    error = _read_json(tmp_path / "error.json")
    assert error["kind"] == "non_convergence"
    assert error["details"]["iterations"] == 1
    assert (tmp_path / "effective_config.json").exists()
    assert not (tmp_path / "report.json").exists()


def test_cli_rates_example(tmp_path):
    code = main(["rates", "--config", os.path.join(EXAMPLE_CONFIGS, "rates_example.json"),
                 "--output-dir", str(tmp_path)])
    assert code == 0
    rates = _read_json(tmp_path / "report.json")["rates"]
    assert rates["solvable"]
    assert rates["s_star"] == pytest.approx(0.337, abs=5e-3)


def test_cli_usage_errors_exit_one(tmp_path):
    assert main(["simulate", "--n-reps", "0", "--output-dir", str(tmp_path)]) == 1
    assert main(["estimate", "--output-dir", str(tmp_path)]) == 1
    assert main(["nao_existe"]) == 1
    assert main(["simulate", "--eta", "abc"]) == 1


def test_cli_simulate_small_scenario(tmp_path):
    path = _write_config(tmp_path, {"scenario": {"n": 20, "p": 5, "p_e": 2, "n_reps": 5, "tau": 1.0}})
    code = main(["simulate", "--config", path, "--seed", "9", "--output-dir", str(tmp_path / "out")])
    assert code == 0
    table = pd.read_csv(tmp_path / "out" / "table.csv")
    assert len(table) == 5
    summary = _read_json(tmp_path / "out" / "report.json")["summary"]
    assert summary["rows"] == 5
    effective = _read_json(tmp_path / "out" / "effective_config.json")
    assert effective["seed"] == 9


def test_cli_diagnose_without_panel(tmp_path):
    path = _write_config(tmp_path, {"scenario": {"n": 40, "p": 8, "p_e": 2}})
    code = main(["diagnose", "--config", path, "--output-dir", str(tmp_path)])
    assert code == 0
    report = _read_json(tmp_path / "report.json")
    assert report["source"] == "simulated_truth"
    assert len(pd.read_csv(tmp_path / "table.csv")) == 9


def test_cli_diagnose_deviation_width_is_unit_scale(tmp_path):
    path = _write_config(tmp_path, {"scenario": {"n": 40, "p": 8, "p_e": 2, "sigma": 0.5,
                                                 "post_autocorrelation": 0.3}})
    code = main(["diagnose", "--config", path, "--output-dir", str(tmp_path)])
    assert code == 0
    deviation = _read_json(tmp_path / "report.json")["deviation_bound"]
    assert deviation["solvable"]
    # a escala do ruído entra só por psi_term
    assert deviation["deviation"]["width"] == pytest.approx(np.sqrt(np.log(8)))


def test_cli_diagnose_with_panel(tmp_path):
    code = main(["diagnose", "--config", os.path.join(EXAMPLE_CONFIGS, "estimate_example.json"),
                 "--panel", EXAMPLE_PANEL, "--output-dir", str(tmp_path)])
    assert code == 0
    assert _read_json(tmp_path / "report.json")["source"] == "panel_plugin"


def test_cli_simulate_writes_charts(tmp_path):
    path = _write_config(tmp_path, {"scenario": {"n": 20, "p": 5, "p_e": 2, "n_reps": 5, "tau": 1.0}})
    code = main(["simulate", "--config", path, "--charts", "--output-dir", str(tmp_path / "out")])
    assert code == 0
    report = _read_json(tmp_path / "out" / "report.json")
    assert [os.path.basename(p) for p in report["charts"]] == ["z_histogram.png"]
    assert (tmp_path / "out" / "z_histogram.png").exists()
