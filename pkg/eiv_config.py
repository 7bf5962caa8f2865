#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Configuração da bancada
=======================

Configuração JSON com valores padrão mesclados recursivamente com o arquivo
do usuário e com as opções da linha de comando (padrões < preset < arquivo <
opções). Chaves desconhecidas são rejeitadas com o caminho da chave.
"""

import os
import copy
import json
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional

from eiv_errors import ConfigError, EIVError
from eiv_inference import VarianceMethod
from eiv_paneldata import (
    FactorStyle,
    IndependenceAxis,
    LayoutConfig,
    NoiseDistribution,
    NoiseEstimationMethod,
    Orientation,
    PostPeriodStyle,
)
from eiv_rates import RefinedRateParams, SimplifiedRateParams, WidthMode
from eiv_simlab import ExperimentType, IntervalSigma, Scenario, preset_config
from eiv_solver import ConstraintSet, SolverOptions

# Configuração de logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=[
        logging.FileHandler(os.environ.get("EIV_LOG_FILE", "eiv_workbench.log")),
        logging.StreamHandler()
    ]
)
logger = logging.getLogger("EIVConfig")


class Command(str, Enum):
    SIMULATE = "simulate"
    ESTIMATE = "estimate"
    RATES = "rates"
    DIAGNOSE = "diagnose"


class ReportFormat(str, Enum):
    JSON = "json"
    CSV = "csv"
    TABLE = "table"


DEFAULT_CONFIG = {
    "seed": 0,
    "output_dir": "eiv_output",
    "report_format": "json",
    "charts": False,
    "input": {
        "panel": None,
    },
    "solver": {
        "eta": 1.0,
        "constraint": "simplex",
        "intercept": None,
        "tol": 1e-8,
        "max_iter": 100000,
    },
    "inference": {
        "alpha": 0.05,
        "variance_method": "plugin",
        "noise_method": "residual_plugin",
        "sigma": None,
        "sigma_e": None,
        "p_e": None,
        "w1": 1.0,
        "w2": 1.0,
        "kappa": 1.0,
        "kappa_prime": 1.0,
        "threshold": 0.1,
    },
    "constants": {
        "c": 1.0,
    },
    "layout": {
        "treated_column": None,
        "control_columns": None,
        "time_column": None,
        "treated_series_columns": None,
        "post_rows": 1,
        "orientation": "columns_are_units",
    },
    "scenario": {
        "name": "custom",
        "experiment": "coverage",
        "n": 100,
        "p": 20,
        "p_e": 1,
        "rank": 2,
        "singular_values": [2.0, 1.0],
        "factor_style": "random_orthonormal",
        "a_e_style": "typical_row",
        "misspecification": 0.0,
        "scale_singular_values": True,
        "sigma": 1.0,
        "sigma_e": None,
        "post_autocorrelation": 0.0,
        "independence_axis": "columns",
        "distribution": "gaussian",
        "tau": 0.0,
        "grid": [],
        "n_reps": 100,
        "interval_sigma": "estimated",
        "use_oracle_estimator": False,
    },
    "rates": {
        "mode": "simplified",
        "n": 100,
        "p": 10,
        "sigma": 1.0,
        "p_eff": 4.0,
        "rank": 2,
        "oracle_error": 0.0,
        "v": 1.0,
        "width_mode": "l1_bound",
        "l1_radius": 1.0,
        "singular_values": None,
        "sigma_convention": "row",
        "mc_samples": 64,
        "K": 1.0,
        "phi": 1.0,
        "width_sigma": None,
        "p_eff_sigma": None,
    },
}

# Valores permitidos para as chaves textuais
CHOICES = {
    "report_format": [f.value for f in ReportFormat],
    "inference.variance_method": [m.value for m in VarianceMethod],
    "inference.noise_method": [m.value for m in NoiseEstimationMethod],
    "layout.orientation": [o.value for o in Orientation],
    "scenario.experiment": [e.value for e in ExperimentType],
    "scenario.factor_style": [f.value for f in FactorStyle],
    "scenario.a_e_style": [a.value for a in PostPeriodStyle],
    "scenario.independence_axis": [a.value for a in IndependenceAxis],
    "scenario.distribution": [d.value for d in NoiseDistribution],
    "scenario.interval_sigma": [s.value for s in IntervalSigma],
    "rates.mode": ["simplified", "refined"],
    "rates.width_mode": [m.value for m in WidthMode],
    "rates.sigma_convention": ["row", "col"],
}

# Chaves com padrão null e o tipo esperado quando preenchidas
NULLABLE_TYPES = {
    "input.panel": str,
    "solver.intercept": bool,
    "inference.sigma": float,
    "inference.sigma_e": float,
    "inference.p_e": int,
    "layout.treated_column": str,
    "layout.control_columns": list,
    "layout.time_column": str,
    "layout.treated_series_columns": list,
    "scenario.sigma_e": float,
    "rates.singular_values": list,
    "rates.width_sigma": float,
    "rates.p_eff_sigma": float,
}

# Opções da linha de comando -> chave da configuração
FLAG_KEYS = {
    "eta": "solver.eta",
    "seed": "seed",
    "n_reps": "scenario.n_reps",
    "alpha": "inference.alpha",
    "constraint": "solver.constraint",
    "intercept": "solver.intercept",
    "tol": "solver.tol",
    "max_iter": "solver.max_iter",
    "output_dir": "output_dir",
    "format": "report_format",
    "charts": "charts",
    "panel": "input.panel",
}


def merge_dict(d1: Dict, d2: Dict) -> Dict:
    """Mescla d2 em d1 recursivamente (in place) e devolve d1"""
    for k, v in d2.items():
        if k in d1 and isinstance(d1[k], dict) and isinstance(v, dict):
            merge_dict(d1[k], v)
        else:
            d1[k] = v
    return d1


def _check_unknown_keys(config: Dict, reference: Dict, prefix: str = "") -> None:
    for key, value in config.items():
        path = f"{prefix}{key}"
        if key not in reference:
            raise ConfigError(f"Chave desconhecida: {path}", key_path=path)
        if isinstance(reference[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{path} deve ser um objeto", key_path=path)
            _check_unknown_keys(value, reference[key], f"{path}.")


def _matches(value: Any, expected: type) -> bool:
    if expected is float:
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if expected is int:
        return isinstance(value, int) and not isinstance(value, bool)
    return isinstance(value, expected)


def _check_types(config: Dict, reference: Dict, prefix: str = "") -> None:
    for key, default in reference.items():
        path = f"{prefix}{key}"
        value = config[key]
        if isinstance(default, dict):
            _check_types(value, default, f"{path}.")
            continue
        if default is None:
            if value is not None and not _matches(value, NULLABLE_TYPES[path]):
                raise ConfigError(f"{path} deve ser {NULLABLE_TYPES[path].__name__} ou null", key_path=path)
            continue
        if not _matches(value, type(default)):
            raise ConfigError(f"{path} deve ser {type(default).__name__}, recebido {value!r}", key_path=path)
        if path in CHOICES and value not in CHOICES[path]:
            raise ConfigError(f"{path} deve ser um de {CHOICES[path]}, recebido {value!r}", key_path=path)


def _set_path(config: Dict, path: str, value: Any) -> None:
    node = config
    *parents, leaf = path.split(".")
    for part in parents:
        node = node[part]
    node[leaf] = value


def _load_json(path: str) -> Dict:
    if not os.path.exists(path):
        raise ConfigError(f"Arquivo de configuração não encontrado: {path}", key_path="--config")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"JSON inválido em {path}: {e}", key_path="--config")
    if not isinstance(data, dict):
        raise ConfigError("A configuração deve ser um objeto JSON", key_path="--config")
    return data


@dataclass(frozen=True)
class RunConfig:
    """Configuração efetiva de uma execução"""

    command: Command
    settings: Dict

    @property
    def output_dir(self) -> str:
        return self.settings["output_dir"]

    @property
    def seed(self) -> int:
        return self.settings["seed"]

    @property
    def report_format(self) -> ReportFormat:
        return ReportFormat(self.settings["report_format"])

    @property
    def charts(self) -> bool:
        return bool(self.settings["charts"])

    @property
    def panel_path(self) -> Optional[str]:
        return self.settings["input"]["panel"]

    @property
    def eta(self) -> float:
        return float(self.settings["solver"]["eta"])

    @property
    def intercept(self) -> Optional[bool]:
        return self.settings["solver"]["intercept"]

    @property
    def inference(self) -> Dict:
        return self.settings["inference"]

    def constraint(self) -> ConstraintSet:
        return ConstraintSet.parse(self.settings["solver"]["constraint"])

    def solver_options(self) -> SolverOptions:
        solver = self.settings["solver"]
        return SolverOptions(tol=float(solver["tol"]), max_iter=int(solver["max_iter"]))

    def layout(self) -> LayoutConfig:
        return LayoutConfig.from_dict(self.settings["layout"])

    def scenario(self) -> Scenario:
        block = dict(self.settings["scenario"])
        return Scenario.from_dict(
            block,
            eta=self.eta,
            constraint=self.constraint(),
            intercept=bool(self.intercept),
            options=self.solver_options(),
            alpha=float(self.inference["alpha"]),
            variance_method=self.inference["variance_method"],
            base_seed=self.seed,
            c=float(self.settings["constants"]["c"]),
        )

    def rate_params(self) -> SimplifiedRateParams:
        block = dict(self.settings["rates"])
        mode = block.pop("mode")
        refined = {key: block.pop(key) for key in ("K", "phi", "width_sigma", "p_eff_sigma")}
        block.update(eta=self.eta, c=float(self.settings["constants"]["c"]), mc_seed=self.seed,
                     mc_constraint=self.constraint())
        if block["singular_values"] is not None:
            block["singular_values"] = tuple(block["singular_values"])
        if mode == "refined":
            return RefinedRateParams(**block, **refined)
        return SimplifiedRateParams(**block)

    def to_dict(self) -> Dict:
        return copy.deepcopy(self.settings)


def _validate(command: Command, settings: Dict) -> None:
    """Validação semântica: cada falha vira ConfigError com o caminho da chave"""
    if command in (Command.ESTIMATE, Command.DIAGNOSE) and settings["input"]["panel"] is not None:
        if not os.path.exists(settings["input"]["panel"]):
            raise ConfigError(f"Painel não encontrado: {settings['input']['panel']}", key_path="input.panel")
    if command == Command.ESTIMATE and settings["input"]["panel"] is None:
        raise ConfigError("estimate exige input.panel (ou --panel)", key_path="input.panel")
    if settings["scenario"]["n_reps"] < 1:
        raise ConfigError("scenario.n_reps deve ser >= 1", key_path="scenario.n_reps")
    if not 0.0 < settings["inference"]["alpha"] < 1.0:
        raise ConfigError("inference.alpha deve estar em (0, 1)", key_path="inference.alpha")
    if settings["solver"]["eta"] < 0:
        raise ConfigError("solver.eta deve ser não negativo", key_path="solver.eta")

    config = RunConfig(command, settings)
    builders = {
        "solver.constraint": config.constraint,
        "solver": config.solver_options,
        "layout": config.layout,
    }
    if command == Command.SIMULATE:
        builders["scenario"] = config.scenario
    if command == Command.RATES:
        builders["rates"] = config.rate_params
    for path, build in builders.items():
        try:
            build()
        except ConfigError:
            raise
        except (EIVError, TypeError, ValueError) as e:
            raise ConfigError(f"{path}: {e}", key_path=path)

    output_dir = settings["output_dir"]
    try:
        os.makedirs(output_dir, exist_ok=True)
    except OSError as e:
        raise ConfigError(f"Não foi possível criar {output_dir}: {e}", key_path="output_dir")
    if not os.access(output_dir, os.W_OK):
        raise ConfigError(f"Diretório de saída sem permissão de escrita: {output_dir}", key_path="output_dir")


def parse_config(command, path: Optional[str] = None, flags: Optional[Dict] = None,
                 preset: Optional[str] = None) -> RunConfig:
    """
    Monta a configuração efetiva.

    Args:
        command: Subcomando (simulate, estimate, rates, diagnose)
        path (str, optional): Arquivo JSON de configuração
        flags (dict, optional): Opções da linha de comando (None = não informada)
        preset (str, optional): Preset de cenário do simlab

    Returns:
        RunConfig: Configuração validada
    """
    command = Command(command)
    settings = copy.deepcopy(DEFAULT_CONFIG)

    if preset:
        try:
            merge_dict(settings, preset_config(preset))
        except EIVError as e:
            raise ConfigError(str(e), key_path="--preset")

    if path:
        user_config = _load_json(path)
        _check_unknown_keys(user_config, DEFAULT_CONFIG)
        merge_dict(settings, user_config)
        logger.info(f"Configuração carregada de {path}")

    for name, value in (flags or {}).items():
        if value is None:
            continue
        if name not in FLAG_KEYS:
            raise ConfigError(f"Opção desconhecida: --{name.replace('_', '-')}", key_path=name)
        _set_path(settings, FLAG_KEYS[name], value)

    _check_unknown_keys(settings, DEFAULT_CONFIG)
    _check_types(settings, DEFAULT_CONFIG)
    _validate(command, settings)
    return RunConfig(command, settings)


def effective_config_json(config: RunConfig) -> str:
    """Dump da configuração efetiva; passado de volta via --config reproduz a execução"""
    return json.dumps(config.to_dict(), indent=4, sort_keys=True)
