#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Laboratório de simulação Monte Carlo
====================================

Executa cenários semeados e produz uma tabela de replicações com as
estimativas, a decomposição do erro e as normas de desvio; resume a tabela
em cobertura, distância KS da estatística z, inclinação da taxa e
frequências de violação dos limites.

Funcionalidades:
- Cenários com grade de parâmetros e presets
- Replicações paralelas determinísticas (ordem fixa por chave)
- Cobertura com erro padrão binomial
- Normalidade da estatística z (Kolmogorov-Smirnov)
- Inclinação log-log de medianas
- Violação dos limites de taxa, de previsão e de desvio
- Concentração do ruído gerado
"""

import os
import copy
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from eiv_errors import ConvergenceError, EmptyInputError, InvariantViolation, ParameterError
from eiv_inference import (
    VarianceMethod,
    deviation_bound_value,
    error_decomposition,
    estimate_tau,
    expected_oracle_tau,
    fit_oracle,
    fit_weights,
    oracle_tau,
    variance_estimate,
)
from eiv_paneldata import (
    FactorStyle,
    GroundTruth,
    IndependenceAxis,
    NoiseDistribution,
    NoiseSpec,
    PostPeriodStyle,
    SignalSpec,
    build_truth,
    generate_panel,
    psd_sqrt,
)
from eiv_random import replication_seed, truth_seed, worker_count
from eiv_rates import SetDescriptor, effective_sample_size, width_upper_bound
from eiv_solver import ConstraintKind, ConstraintSet, SolverOptions
from eiv_spectral import svd, typicality_D

# Configuração de logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=[
        logging.FileHandler(os.environ.get("EIV_LOG_FILE", "eiv_workbench.log")),
        logging.StreamHandler()
    ]
)
logger = logging.getLogger("EIVSimLab")

MAX_NONCONVERGED_FRACTION = 0.05
DECOMPOSITION_TOL = 1e-12

GRID_KEYS = ("n", "p", "p_e", "eta", "sigma", "sigma_e", "tau", "post_autocorrelation")

TABLE_COLUMNS = [
    "grid_index", "rep", "seed", "n", "p", "p_e", "eta", "p_eff",
    "tau", "tau_hat", "tau_tilde", "e_tau_tilde", "dev", "bias", "noise",
    "coef_dev", "pred_dev", "sigma_tau_hat", "sigma_tau",
    "covered_e_tau_tilde", "covered_tau", "converged", "z",
    "sigma", "D", "resid_sd", "psi_term", "width", "width_per_unit_s",
]


class ExperimentType(str, Enum):
    COVERAGE = "coverage"
    ZSTAT_NORMALITY = "zstat_normality"
    COEF_RATE_SCALING = "coef_rate_scaling"
    DEVIATION_BOUND_CHECK = "deviation_bound_check"
    CONCENTRATION_CHECK = "concentration_check"


class IntervalSigma(str, Enum):
    ESTIMATED = "estimated"
    TRUE = "true"


class CoverageTarget(str, Enum):
    E_TAU_TILDE = "E_tau_tilde"
    TAU = "tau"


@dataclass(frozen=True)
class Scenario:
    """
    Cenário de simulação: gerador da verdade, estimador e grade.

    Os valores singulares do sinal são multiplicados por sqrt(n) quando
    `scale_singular_values` é verdadeiro, de modo que a escala das linhas
    de A não muda ao longo de uma grade em n.
    """

    name: str = "custom"
    experiment: ExperimentType = ExperimentType.COVERAGE
    n: int = 100
    p: int = 20
    p_e: int = 1
    signal: SignalSpec = field(default_factory=lambda: SignalSpec(rank=2, singular_values=(2.0, 1.0)))
    scale_singular_values: bool = True
    sigma: float = 1.0
    sigma_e: Optional[float] = None
    post_autocorrelation: float = 0.0
    independence_axis: IndependenceAxis = IndependenceAxis.COLUMNS
    distribution: NoiseDistribution = NoiseDistribution.GAUSSIAN
    tau: float = 0.0
    eta: float = 1.0
    constraint: ConstraintSet = field(default_factory=lambda: ConstraintSet(ConstraintKind.SIMPLEX))
    intercept: bool = False
    options: SolverOptions = field(default_factory=SolverOptions)
    grid: Tuple[Dict, ...] = ()
    n_reps: int = 100
    base_seed: int = 0
    alpha: float = 0.05
    variance_method: VarianceMethod = VarianceMethod.PLUGIN
    interval_sigma: IntervalSigma = IntervalSigma.ESTIMATED
    use_oracle_estimator: bool = False
    c: float = 1.0

    def __post_init__(self):
        if int(self.n_reps) < 1:
            raise ParameterError(f"n_reps deve ser >= 1, recebido {self.n_reps}")
        if not 0.0 < self.alpha < 1.0:
            raise ParameterError(f"alpha deve estar em (0, 1), recebido {self.alpha}")
        grid = tuple(dict(point) for point in self.grid)
        for index, point in enumerate(grid):
            unknown = sorted(set(point) - set(GRID_KEYS))
            if unknown:
                raise ParameterError(f"Ponto {index} da grade com chaves desconhecidas: {unknown}",
                                     grid_index=index, keys=unknown)
            for key in ("n", "p", "p_e"):
                if key in point and (int(point[key]) != point[key] or int(point[key]) < 1):
                    raise ParameterError(f"grid[{index}].{key} deve ser um inteiro positivo")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "n_reps", int(self.n_reps))
        object.__setattr__(self, "experiment", ExperimentType(self.experiment))
        object.__setattr__(self, "independence_axis", IndependenceAxis(self.independence_axis))
        object.__setattr__(self, "distribution", NoiseDistribution(self.distribution))
        object.__setattr__(self, "variance_method", VarianceMethod(self.variance_method))
        object.__setattr__(self, "interval_sigma", IntervalSigma(self.interval_sigma))

    def grid_points(self) -> List[Dict]:
        """Parâmetros efetivos de cada ponto da grade (um único ponto se a grade é vazia)"""
        base = {key: getattr(self, key) for key in GRID_KEYS}
        return [dict(base, **point) for point in (self.grid or ({},))]

    def noise_for(self, point: Dict) -> NoiseSpec:
        noise = NoiseSpec.isotropic(int(point["n"]), int(point["p"]), point["sigma"], int(point["p_e"]),
                                    point["sigma_e"], self.independence_axis, self.distribution)
        if point["post_autocorrelation"]:
            noise = noise.with_post_autocorrelation(point["post_autocorrelation"])
        return noise

    def truth_for(self, grid_index: int) -> GroundTruth:
        point = self.grid_points()[grid_index]
        signal = self.signal
        if self.scale_singular_values:
            factor = np.sqrt(point["n"])
            signal = replace(signal, singular_values=tuple(v * factor for v in signal.singular_values))
        return build_truth(signal, self.noise_for(point), point["tau"], truth_seed(self.base_seed, grid_index))

    @classmethod
    def from_dict(cls, block: Dict, **estimator) -> "Scenario":
        """
        Cria o cenário a partir do bloco `scenario` da configuração.

        Args:
            block (dict): Bloco do cenário (sinal, ruído, grade, replicações)
            **estimator: Campos do estimador (eta, constraint, intercept, options,
                alpha, variance_method, base_seed, c)

        Returns:
            Scenario: Cenário validado
        """
        data = dict(block)
        signal = SignalSpec(
            rank=data.pop("rank", 2),
            singular_values=tuple(data.pop("singular_values", (2.0, 1.0))),
            factor_style=FactorStyle(data.pop("factor_style", FactorStyle.RANDOM_ORTHONORMAL)),
            a_e_style=PostPeriodStyle(data.pop("a_e_style", PostPeriodStyle.TYPICAL_ROW)),
            misspecification=data.pop("misspecification", 0.0),
        )
        data.update(estimator)
        if isinstance(data.get("constraint"), str):
            data["constraint"] = ConstraintSet.parse(data["constraint"])
        if "grid" in data:
            data["grid"] = tuple(data["grid"])
        return cls(signal=signal, **data)

    def to_dict(self) -> Dict:
        return {
            "name": self.name,
            "experiment": self.experiment.value,
            "n": self.n,
            "p": self.p,
            "p_e": self.p_e,
            "rank": self.signal.rank,
            "singular_values": list(self.signal.singular_values),
            "factor_style": self.signal.factor_style.value,
            "a_e_style": self.signal.a_e_style.value,
            "misspecification": self.signal.misspecification,
            "scale_singular_values": self.scale_singular_values,
            "sigma": self.sigma,
            "sigma_e": self.sigma_e,
            "post_autocorrelation": self.post_autocorrelation,
            "independence_axis": self.independence_axis.value,
            "distribution": self.distribution.value,
            "tau": self.tau,
            "eta": self.eta,
            "constraint": self.constraint.label,
            "intercept": self.intercept,
            "grid": [dict(point) for point in self.grid],
            "n_reps": self.n_reps,
            "base_seed": self.base_seed,
            "alpha": self.alpha,
            "variance_method": self.variance_method.value,
            "interval_sigma": self.interval_sigma.value,
            "use_oracle_estimator": self.use_oracle_estimator,
        }


# Blocos de configuração dos presets (cenário + solver)
PRESETS = {
    "ideal_coverage": {
        "scenario": {
            "name": "ideal_coverage", "experiment": "coverage",
            "n": 500, "p": 50, "p_e": 2, "rank": 2, "singular_values": [2.0, 1.0],
            "a_e_style": "typical_row", "sigma": 1.0, "tau": 1.0, "n_reps": 1000,
        },
        "solver": {"eta": 1.0, "constraint": "simplex"},
    },
    "fourth_root_rate": {
        "scenario": {
            "name": "fourth_root_rate", "experiment": "coef_rate_scaling",
            "p": 64, "p_e": 2, "rank": 2, "singular_values": [2.0, 1.0], "sigma": 1.0, "n_reps": 200,
            "grid": [{"n": n} for n in (200, 400, 800, 1600, 3200, 6400)],
        },
        "solver": {"eta": 1.0, "constraint": "simplex"},
    },
    "euclidean_rate": {
        "scenario": {
            "name": "euclidean_rate", "experiment": "coef_rate_scaling",
            "p": 20, "p_e": 1, "rank": 2, "singular_values": [2.0, 1.0], "sigma": 1.0, "n_reps": 200,
            "grid": [{"n": n} for n in (100, 200, 400, 800, 1600)],
        },
        "solver": {"eta": 1.5, "constraint": "euclidean"},
    },
    "low_noise": {
        "scenario": {
            "name": "low_noise", "experiment": "coef_rate_scaling",
            "p": 50, "p_e": 1, "rank": 3, "singular_values": [3.0, 2.0, 1.0], "sigma": 0.01,
            "n_reps": 100, "grid": [{"n": n} for n in (100, 200, 400, 800)],
        },
        "solver": {"eta": 1.0, "constraint": "simplex"},
    },
    "atypical_post_period": {
        "scenario": {
            "name": "atypical_post_period", "experiment": "coverage",
            "n": 200, "p": 50, "p_e": 2, "rank": 2, "singular_values": [2.0, 1.0],
            "a_e_style": "orthogonal_to_rowspace", "sigma": 1.0, "n_reps": 500,
        },
        "solver": {"eta": 1.0, "constraint": "simplex"},
    },
    "deviation_bound": {
        "scenario": {
            "name": "deviation_bound", "experiment": "deviation_bound_check",
            "n": 200, "p": 30, "p_e": 1, "rank": 2, "singular_values": [2.0, 1.0],
            "sigma": 1.0, "n_reps": 1000,
        },
        "solver": {"eta": 1.0, "constraint": "simplex"},
    },
}


def preset_config(name: str) -> Dict:
    """Cópia do bloco de configuração de um preset"""
    if name not in PRESETS:
        raise ParameterError(f"Preset desconhecido: {name}. Disponíveis: {sorted(PRESETS)}", preset=name)
    return copy.deepcopy(PRESETS[name])


@dataclass(frozen=True)
class ReplicationTable:
    """Uma linha por (ponto da grade, replicação), ordenada pela chave"""

    frame: pd.DataFrame

    def __len__(self) -> int:
        return len(self.frame)

    def grid_groups(self):
        return self.frame.groupby("grid_index", sort=True)

    def to_csv(self, path: str) -> None:
        self.frame.to_csv(path, index=False, float_format="%.17g")


@dataclass(frozen=True)
class _GridContext:
    """Grandezas determinísticas de um ponto da grade"""

    index: int
    point: Dict
    truth: GroundTruth
    oracle_fit: object
    e_tau_tilde: float
    metric_sqrt: np.ndarray
    sigma: float
    D: float
    resid_sd: float
    psi_term: float
    width: float
    width_per_unit_s: bool
    p_eff: float
    sigma_tau: float


def _grid_context(scenario: Scenario, index: int) -> _GridContext:
    point = scenario.grid_points()[index]
    truth = scenario.truth_for(index)
    noise = truth.noise
    oracle_fit = fit_oracle(truth, point["eta"], scenario.constraint, scenario.intercept, scenario.options)
    if not oracle_fit.converged:
        logger.warning(f"Oráculo não convergiu no ponto {index} da grade")
    sigma = float(np.sqrt(noise.sigma_sq_row))
    D = float("nan")
    if sigma > 0:
        D = typicality_D(truth.a_e, svd(truth.A), sigma, point["eta"], truth.n, noise.post_residual_sd).D

    # largura gaussiana de Theta - theta_tilde em escala unitária; por unidade de s nos conjuntos não compactos
    width_per_unit_s = not scenario.constraint.is_compact
    descriptor = SetDescriptor(scenario.constraint, scenario.constraint.project(oracle_fit.theta), 1.0)
    width = width_upper_bound(descriptor, truth.p, scenario.c)

    return _GridContext(
        index=index,
        point=point,
        truth=truth,
        oracle_fit=oracle_fit,
        e_tau_tilde=expected_oracle_tau(truth, oracle_fit),
        metric_sqrt=psd_sqrt(noise.sigma_row),
        sigma=sigma,
        D=D,
        resid_sd=noise.post_residual_sd,
        psi_term=noise.psi_col_term,
        width=width,
        width_per_unit_s=width_per_unit_s,
        p_eff=effective_sample_size(oracle_fit.theta, noise.p_e),
        sigma_tau=float(noise.sigma_e * np.sqrt(1.0 / noise.p_e + float(oracle_fit.theta @ oracle_fit.theta))),
    )


def _replicate(scenario: Scenario, context: _GridContext, rep: int) -> Dict:
    truth = context.truth
    seed = replication_seed(scenario.base_seed, context.index, rep)
    panel = generate_panel(truth, seed)
    oracle_fit = context.oracle_fit

    if scenario.use_oracle_estimator:
        fit = oracle_fit
    else:
        fit = fit_weights(panel, truth.noise, context.point["eta"], scenario.constraint,
                          scenario.intercept, scenario.options)
    tau_hat = estimate_tau(panel, fit)
    tau_tilde = oracle_tau(panel, oracle_fit)
    dev, bias, noise_term = error_decomposition(truth, oracle_fit.theta, panel, tau_hat, oracle_fit.theta0)
    total = tau_hat - truth.tau
    if abs(dev + bias + noise_term - total) > DECOMPOSITION_TOL * max(1.0, abs(dev), abs(bias), abs(noise_term)):
        raise InvariantViolation("Decomposição do erro não fecha", grid_index=context.index, rep=rep)

    delta = fit.theta - oracle_fit.theta
    coef_dev = float(np.linalg.norm(context.metric_sqrt @ delta))
    pred_dev = float(np.linalg.norm(truth.A @ delta + fit.theta0 - oracle_fit.theta0))

    sigma_tau_hat = variance_estimate(fit, panel, truth.noise, scenario.variance_method,
                                      context.point["eta"], scenario.constraint, scenario.options)
    sigma_interval = sigma_tau_hat if scenario.interval_sigma == IntervalSigma.ESTIMATED else context.sigma_tau
    half_width = float(stats.norm.ppf(1.0 - scenario.alpha / 2.0)) * sigma_interval
    z = (tau_hat - context.e_tau_tilde) / context.sigma_tau if context.sigma_tau > 0 else float("nan")

    return {
        "grid_index": context.index,
        "rep": rep,
        "seed": str(seed),
        "n": truth.n,
        "p": truth.p,
        "p_e": truth.noise.p_e,
        "eta": context.point["eta"],
        "p_eff": context.p_eff,
        "tau": truth.tau,
        "tau_hat": tau_hat,
        "tau_tilde": tau_tilde,
        "e_tau_tilde": context.e_tau_tilde,
        "dev": dev,
        "bias": bias,
        "noise": noise_term,
        "coef_dev": coef_dev,
        "pred_dev": pred_dev,
        "sigma_tau_hat": sigma_tau_hat,
        "sigma_tau": context.sigma_tau,
        "covered_e_tau_tilde": abs(tau_hat - context.e_tau_tilde) <= half_width,
        "covered_tau": abs(tau_hat - truth.tau) <= half_width,
        "converged": bool(fit.converged),
        "z": z,
        "sigma": context.sigma,
        "D": context.D,
        "resid_sd": context.resid_sd,
        "psi_term": context.psi_term,
        "width": context.width,
        "width_per_unit_s": context.width_per_unit_s,
    }


def run_scenario(scenario: Scenario, workers: Optional[int] = None) -> ReplicationTable:
    """
    Executa o cenário: oráculo uma vez por ponto da grade, depois as replicações.

    Args:
        scenario (Scenario): Cenário validado
        workers (int, optional): Threads de trabalho (padrão: EIV_WORKERS)

    Returns:
        ReplicationTable: |grade| * n_reps linhas ordenadas por (grid_index, rep)
    """
    workers = workers or worker_count()
    points = scenario.grid_points()
    logger.info(f"Iniciando cenário '{scenario.name}': {len(points)} ponto(s) x {scenario.n_reps} replicações")

    rows = []
    for index in range(len(points)):
        context = _grid_context(scenario, index)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            # map preserva a ordem das replicações
            results = list(pool.map(lambda rep: _replicate(scenario, context, rep), range(scenario.n_reps)))
        nonconverged = sum(not row["converged"] for row in results) / scenario.n_reps
        if nonconverged > MAX_NONCONVERGED_FRACTION:
            logger.error(f"Não convergência de {nonconverged:.1%} no ponto {index} da grade")
            raise ConvergenceError(
                f"Fração de não convergência {nonconverged:.3f} acima de {MAX_NONCONVERGED_FRACTION} "
                f"no ponto {index} da grade",
                grid_index=index, point=points[index], fraction=nonconverged,
            )
        rows.extend(results)
        logger.info(f"Ponto {index} da grade concluído ({points[index]})")

    return ReplicationTable(pd.DataFrame(rows, columns=TABLE_COLUMNS))


def coverage_summary(table: ReplicationTable, target=CoverageTarget.E_TAU_TILDE) -> Tuple[float, float]:
    """Fração coberta e erro padrão binomial sqrt(c(1-c)/m)"""
    if len(table) == 0:
        raise EmptyInputError("Tabela de replicações vazia")
    column = "covered_e_tau_tilde" if CoverageTarget(target) == CoverageTarget.E_TAU_TILDE else "covered_tau"
    covered = table.frame[column].astype(bool).to_numpy()
    coverage = float(covered.mean())
    return coverage, float(np.sqrt(coverage * (1.0 - coverage) / covered.size))


def ks_statistic(samples) -> float:
    """Distância sup entre a CDF empírica e a CDF normal padrão"""
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size < 2:
        raise EmptyInputError(f"KS exige pelo menos 2 amostras, recebido {samples.size}")
    return float(stats.kstest(samples, "norm").statistic)


def rate_slope(table: ReplicationTable, x_field: str = "n", y_field: str = "coef_dev") -> Tuple[float, float]:
    """
    Inclinação de mínimos quadrados de log(mediana de y) contra log(x).

    Args:
        table (ReplicationTable): Tabela com uma grade de pelo menos 3 valores de x
        x_field (str): "n" ou "p_eff"
        y_field (str): Coluna resposta (ex.: "coef_dev", "pred_dev")

    Returns:
        tuple: (inclinação, erro padrão)
    """
    if x_field not in ("n", "p_eff"):
        raise ParameterError(f"x_field deve ser 'n' ou 'p_eff', recebido {x_field}")
    medians = table.frame.groupby(x_field, sort=True)[y_field].median()
    if medians.size < 3:
        raise ParameterError(f"rate_slope exige pelo menos 3 valores distintos de {x_field}")
    if (medians <= 0).any() or (medians.index.to_numpy() <= 0).any():
        raise ParameterError("rate_slope exige medianas e valores de x positivos")
    fit = stats.linregress(np.log(medians.index.to_numpy(dtype=float)), np.log(medians.to_numpy(dtype=float)))
    return float(fit.slope), float(fit.stderr)


def bound_violation_rate(table: ReplicationTable, s_star: float, prediction_bound: float) -> Tuple[float, float]:
    """Frações de replicações com ||Sigma^{1/2}(theta_hat - theta_tilde)|| > s e ||A(...)|| > limite"""
    if len(table) == 0:
        return 0.0, 0.0
    coef = float((table.frame["coef_dev"] > s_star).mean())
    pred = float((table.frame["pred_dev"] > prediction_bound).mean())
    return coef, pred


def prediction_coupling_rate(table: ReplicationTable, quantile: float = 0.95) -> pd.Series:
    """
    Por ponto da grade: fração com ||A(theta_hat - theta_tilde)|| > eta sqrt(n) s_emp,
    onde s_emp é o quantil empírico de ||Sigma^{1/2}(theta_hat - theta_tilde)||.
    """
    rates = {}
    for index, group in table.grid_groups():
        s_emp = float(group["coef_dev"].quantile(quantile))
        limit = group["eta"].iloc[0] * np.sqrt(group["n"].iloc[0]) * s_emp
        rates[index] = float((group["pred_dev"] > limit).mean())
    return pd.Series(rates, name="prediction_coupling_rate", dtype=float)


def deviation_violation_rate(table: ReplicationTable, quantile: float = 0.99, w1: float = 3.0,
                             w2: float = 3.0) -> pd.Series:
    """
    Por ponto da grade: fração com |tau_hat - tau_tilde| acima do limite de desvio,
    calibrado com s igual ao quantil empírico do desvio dos coeficientes.
    """
    rates = {}
    for index, group in table.grid_groups():
        s = float(group["coef_dev"].quantile(quantile))
        width = group["width"] * s if bool(group["width_per_unit_s"].iloc[0]) else group["width"]
        bound = deviation_bound_value(s, group["sigma"], group["D"], group["resid_sd"], group["psi_term"],
                                      width, w1, w2)
        rates[index] = float(((group["tau_hat"] - group["tau_tilde"]).abs() > bound).mean())
    return pd.Series(rates, name="deviation_violation_rate", dtype=float)


def noise_concentration(truth: GroundTruth, n_reps: int, seed: int) -> Dict:
    """
    Verifica o ruído gerado: média entrada a entrada e convergência de n^-1 eps'eps.

    As distâncias de Frobenius são avaliadas num calendário de duplicação
    (1, 2, 4, ... replicações).
    """
    if n_reps < 1:
        raise ParameterError("n_reps deve ser >= 1")
    noise = truth.noise
    eps_sum = np.zeros((truth.n, truth.p))
    row_cov_sum = np.zeros((truth.p, truth.p))
    schedule = []
    checkpoint = 1
    for rep in range(n_reps):
        eps = generate_panel(truth, replication_seed(seed, 0, rep)).X - truth.A
        eps_sum += eps
        row_cov_sum += eps.T @ eps / truth.n
        if rep + 1 == checkpoint:
            distance = np.linalg.norm(row_cov_sum / checkpoint - noise.sigma_row)
            schedule.append({"reps": checkpoint, "frobenius_distance": float(distance)})
            checkpoint *= 2
    row_cov = row_cov_sum / n_reps
    sigma = float(np.sqrt(noise.sigma_sq_row))
    return {
        "max_abs_mean": float(np.max(np.abs(eps_sum / n_reps))),
        "mean_tolerance": 5.0 * sigma / np.sqrt(n_reps),
        "row_covariance_schedule": schedule,
        "iid_row_covariance_distance": float(np.linalg.norm(row_cov - noise.iid_columns_row_covariance())),
    }


def summarize(table: ReplicationTable, scenario: Scenario) -> Dict:
    """Resumo JSON da tabela segundo o tipo de experimento"""
    frame = table.frame
    coverage, coverage_se = coverage_summary(table, CoverageTarget.E_TAU_TILDE)
    coverage_tau, coverage_tau_se = coverage_summary(table, CoverageTarget.TAU)
    summary = {
        "scenario": scenario.name,
        "experiment": scenario.experiment.value,
        "rows": len(table),
        "grid_points": int(frame["grid_index"].nunique()),
        "coverage_e_tau_tilde": {"coverage": coverage, "se": coverage_se},
        "coverage_tau": {"coverage": coverage_tau, "se": coverage_tau_se},
        "nonconverged_fraction": float(1.0 - frame["converged"].mean()),
        "median_coef_dev": float(frame["coef_dev"].median()),
    }
    z = frame["z"].dropna().to_numpy()
    if z.size >= 2:
        summary["ks_z"] = ks_statistic(z)

    if frame["n"].nunique() >= 3:
        slope, stderr = rate_slope(table, "n", "coef_dev")
        summary["rate_slope_coef_dev"] = {"slope": slope, "stderr": stderr}
        summary["prediction_coupling_rate"] = prediction_coupling_rate(table).tolist()
    if scenario.experiment == ExperimentType.DEVIATION_BOUND_CHECK:
        summary["deviation_violation_rate"] = deviation_violation_rate(table).tolist()
    if scenario.experiment == ExperimentType.CONCENTRATION_CHECK:
        summary["noise_concentration"] = noise_concentration(scenario.truth_for(0), scenario.n_reps,
                                                             scenario.base_seed)
    return summary
