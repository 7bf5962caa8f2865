#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Linha de comando da bancada
===========================

Subcomandos:
- simulate: executa um cenário do simlab e grava a tabela de replicações
- estimate: estima tau num painel CSV com intervalo de confiança
- rates: resolve a condição de ponto fixo da taxa
- diagnose: avalia as condições de normalidade (verdade simulada ou painel)

Códigos de saída: 0 sucesso, 1 erro de uso, 2 falha numérica (com error.json).
"""

import os
import sys
import json
import logging
import argparse
import tempfile
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd

from eiv_charts import write_simulation_charts
from eiv_config import Command, ReportFormat, RunConfig, effective_config_json, parse_config
from eiv_errors import ConvergenceError, EIVError, RateUnsolvableError
from eiv_inference import (
    deviation_bound,
    diagnostics_inputs_from_panel,
    diagnostics_inputs_from_truth,
    fit_oracle,
    fit_weights,
    infer,
    normality_diagnostics,
)
from eiv_paneldata import (
    NoiseEstimationMethod,
    NoiseSpec,
    PanelObservation,
    estimate_noise_spec,
    load_panel_csv,
)
from eiv_rates import (
    RefinedRateParams,
    SetDescriptor,
    SimplifiedRateParams,
    WidthMode,
    solve_fixed_point,
    solve_fixed_point_refined,
    width_upper_bound,
)
from eiv_random import worker_count
from eiv_simlab import PRESETS, run_scenario, summarize
from eiv_spectral import svd

# Configuração de logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=[
        logging.FileHandler(os.environ.get("EIV_LOG_FILE", "eiv_workbench.log")),
        logging.StreamHandler()
    ]
)
logger = logging.getLogger("EIVCli")


def _atomic_write(path: str, text: str) -> None:
    """Escreve num arquivo temporário do mesmo diretório e renomeia"""
    directory = os.path.dirname(os.path.abspath(path))
    handle, temp_path = tempfile.mkstemp(dir=directory, prefix=".tmp_", suffix=os.path.basename(path))
    try:
        with os.fdopen(handle, "w", encoding="utf-8") as f:
            f.write(text)
        os.replace(temp_path, path)
    except BaseException:
        if os.path.exists(temp_path):
            os.remove(temp_path)
        raise


def _json_default(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    return str(value)


def _to_json(data: Dict) -> str:
    return json.dumps(data, indent=4, default=_json_default)


def _panel_noise(config: RunConfig, panel: PanelObservation) -> NoiseSpec:
    """NoiseSpec conhecida (inference.sigma) ou estimada por diferenças"""
    inference = config.inference
    if inference["sigma"] is not None:
        p_e = inference["p_e"] or panel.p_e or 1
        known = NoiseSpec.isotropic(panel.n, panel.p, inference["sigma"], p_e=p_e, sigma_e=inference["sigma_e"])
        return estimate_noise_spec(panel, NoiseEstimationMethod.KNOWN, known)
    return estimate_noise_spec(panel, inference["noise_method"])


def _require_converged(fit, stage: str) -> None:
    """Ajuste sem convergência é falha numérica na linha de comando"""
    if not fit.converged:
        raise ConvergenceError(f"Solver não convergiu ({stage}) em {fit.iterations} iterações",
                               stage=stage, iterations=fit.iterations, residual=fit.optimality_residual)


def run_simulate(config: RunConfig) -> Tuple[Dict, pd.DataFrame]:
    scenario = config.scenario()
    table = run_scenario(scenario, worker_count())
    report = {"summary": summarize(table, scenario), "scenario": scenario.to_dict()}
    if config.charts:
        report["charts"] = write_simulation_charts(table, config.output_dir)
    return report, table.frame


def run_estimate(config: RunConfig) -> Tuple[Dict, pd.DataFrame]:
    layout = config.layout()
    panel = load_panel_csv(config.panel_path, layout)
    noise = _panel_noise(config, panel)
    report = infer(panel, noise, config.eta, config.constraint(), config.intercept,
                   alpha=float(config.inference["alpha"]),
                   variance_method=config.inference["variance_method"],
                   options=config.solver_options())
    _require_converged(report.fit, "estimate")
    names = list(layout.control_columns) if layout.control_columns else None
    if names is None or len(names) != report.fit.theta.size:
        names = [f"w_{j + 1}" for j in range(report.fit.theta.size)]
    weights = pd.DataFrame({"unit": names, "weight": report.fit.theta})
    return {"inference": report.to_dict(), "noise_sigma_sq_row": noise.sigma_sq_row}, weights


def run_rates(config: RunConfig) -> Tuple[Dict, pd.DataFrame]:
    params = config.rate_params()
    if isinstance(params, RefinedRateParams):
        report = solve_fixed_point_refined(params)
    else:
        report = solve_fixed_point(params)
    if not report.solvable:
        raise RateUnsolvableError(f"Condição de ponto fixo sem solução: {report.reason}",
                                  report=report.to_dict())
    return {"rates": report.to_dict()}, pd.DataFrame([report.to_dict()]).drop(columns=["constants"])


def _truth_deviation(config: RunConfig, truth, oracle_fit, inputs) -> Dict:
    """Limite de desvio com s da condição de ponto fixo calculada sobre a verdade"""
    constraint = config.constraint()
    params = SimplifiedRateParams(
        n=truth.n, p=truth.p, sigma=inputs.sigma, p_eff=inputs.p_eff, rank=inputs.rank,
        oracle_error=inputs.oracle_residual_norm, eta=config.eta, c=float(config.settings["constants"]["c"]),
        width_mode=WidthMode.L1_BOUND if constraint.is_compact else WidthMode.EUCLIDEAN_BOUND,
        l1_radius=constraint.radius,
    )
    rates = solve_fixed_point(params)
    if not rates.solvable:
        return {"solvable": False, "reason": rates.reason}
    descriptor = SetDescriptor(constraint, constraint.project(oracle_fit.theta), rates.s_star)
    width = width_upper_bound(descriptor, truth.p, params.c)
    report = deviation_bound(truth.a_e, svd(truth.A), truth.noise, config.eta, truth.n, rates.s_star, width,
                             w1=float(config.inference["w1"]), w2=float(config.inference["w2"]), c=params.c)
    return {"solvable": True, "rates": rates.to_dict(), "deviation": report.to_dict()}


def run_diagnose(config: RunConfig) -> Tuple[Dict, pd.DataFrame]:
    inference = config.inference
    if config.panel_path:
        panel = load_panel_csv(config.panel_path, config.layout())
        noise = _panel_noise(config, panel)
        fit = fit_weights(panel, noise, config.eta, config.constraint(), config.intercept, config.solver_options())
        _require_converged(fit, "diagnose")
        inputs = diagnostics_inputs_from_panel(panel, fit, noise, config.eta)
        extra = {"source": "panel_plugin"}
    else:
        scenario = config.scenario()
        truth = scenario.truth_for(0)
        oracle_fit = fit_oracle(truth, config.eta, config.constraint(), bool(config.intercept),
                                config.solver_options())
        _require_converged(oracle_fit, "oracle")
        inputs = diagnostics_inputs_from_truth(truth, oracle_fit, config.eta)
        extra = {"source": "simulated_truth", "deviation_bound": _truth_deviation(config, truth, oracle_fit, inputs)}

    report = normality_diagnostics(inputs, float(inference["kappa"]), float(inference["kappa_prime"]),
                                   float(inference["threshold"]))
    verdicts = pd.DataFrame([verdict.to_dict() for verdict in report.verdicts])
    return dict(extra, diagnostics=report.to_dict()), verdicts


COMMANDS = {
    Command.SIMULATE: run_simulate,
    Command.ESTIMATE: run_estimate,
    Command.RATES: run_rates,
    Command.DIAGNOSE: run_diagnose,
}


def run(config: RunConfig) -> int:
    """
    Executa o subcomando e grava report.json, table.csv e effective_config.json.

    Returns:
        int: 0 sucesso, 1 erro de uso, 2 falha numérica
    """
    output_dir = config.output_dir
    _atomic_write(os.path.join(output_dir, "effective_config.json"), effective_config_json(config))
    try:
        report, table = COMMANDS[config.command](config)
    except EIVError as e:
        logger.error(f"{config.command.value} falhou ({e.kind}): {e.message}")
        if not e.numerical:
            return 1
        _atomic_write(os.path.join(output_dir, "error.json"), _to_json(e.to_dict()))
        return 2

    outputs = {
        "report.json": _to_json(report),
        "table.csv": table.to_csv(index=False, float_format="%.17g"),
    }
    if config.report_format == ReportFormat.TABLE:
        text = table.to_string(index=False)
        print(text)
        outputs["report.txt"] = text + "\n"
    for name, text in outputs.items():
        _atomic_write(os.path.join(output_dir, name), text)
    logger.info(f"Saídas gravadas em {output_dir}: {sorted(outputs)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Bancada de controle sintético com erro nas variáveis")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in Command:
        sub = subparsers.add_parser(command.value, help=f"Executar {command.value}")
        sub.add_argument("--config", help="Arquivo JSON de configuração")
        sub.add_argument("--preset", choices=sorted(PRESETS), help="Preset de cenário do simlab")
        sub.add_argument("--panel", help="Painel CSV (estimate, diagnose)")
        sub.add_argument("--eta", type=float, help="Parâmetro de regularização")
        sub.add_argument("--seed", type=int, help="Semente base")
        sub.add_argument("--n-reps", dest="n_reps", type=int, help="Replicações por ponto da grade")
        sub.add_argument("--alpha", type=float, help="Nível do intervalo de confiança")
        sub.add_argument("--constraint", help="simplex, l1:RAIO, nonneg ou euclidean")
        sub.add_argument("--intercept", dest="intercept", action="store_true", help="Usar intercepto")
        sub.add_argument("--no-intercept", dest="intercept", action="store_false", help="Sem intercepto")
        sub.add_argument("--tol", type=float, help="Tolerância do solver")
        sub.add_argument("--max-iter", dest="max_iter", type=int, help="Iterações máximas do solver")
        sub.add_argument("--output-dir", dest="output_dir", help="Diretório de saída")
        sub.add_argument("--format", choices=[f.value for f in ReportFormat], help="Formato do relatório")
        sub.add_argument("--charts", action="store_true", default=None, help="Gravar gráficos PNG (simulate)")
        sub.set_defaults(intercept=None)
    return parser


def main(argv: Optional[list] = None) -> int:
    """
    Função principal da linha de comando.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 1

    flags = {name: getattr(args, name) for name in
             ("eta", "seed", "n_reps", "alpha", "constraint", "intercept", "tol", "max_iter",
              "output_dir", "format", "panel", "charts")}
    try:
        config = parse_config(args.command, args.config, flags, args.preset)
    except EIVError as e:
        logger.error(f"Configuração inválida: {e.message}")
        print(f"Erro: {e.message}")
        return 1

    try:
        return run(config)
    except KeyboardInterrupt:
        print("Operação interrompida pelo usuário")
        return 1
    except OSError as e:
        logger.error(f"Erro de E/S: {e}")
        print(f"Erro: {e}")
        return 1


# Executar se for o script principal
if __name__ == "__main__":
    sys.exit(main())
