#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Inferência para o efeito de tratamento por controle sintético
=============================================================

Este módulo estima tau, compara com o estimador oráculo, decompõe o erro em
desvio, viés e ruído do oráculo, estima a variância, constrói intervalos de
confiança e avalia as condições de normalidade aproximada.

Funcionalidades:
- Ajuste dos pesos (estimador empírico e oráculo) nas duas orientações
- Decomposição do erro em três termos
- Limite do desvio entre tau_hat e tau_tilde
- Variância plug-in, jackknife sobre tratados e placebo sobre controles
- Intervalos de confiança normais
- Diagnósticos das condições de normalidade como razões finitas
"""

import os
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.stats import norm

from eiv_errors import (
    DimensionError,
    ParameterError,
    PrerequisiteError,
)
from eiv_paneldata import GroundTruth, NoiseSpec, Orientation, PanelObservation
from eiv_rates import effective_sample_size
from eiv_solver import (
    ConstraintKind,
    ConstraintSet,
    FitResult,
    SolverOptions,
    solve_constrained_tikhonov,
    solve_oracle,
)
from eiv_spectral import SvdDecomposition, svd, typicality_D

# Configuração de logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=[
        logging.FileHandler(os.environ.get("EIV_LOG_FILE", "eiv_workbench.log")),
        logging.StreamHandler()
    ]
)
logger = logging.getLogger("EIVInference")

COVERAGE_TARGET = "O intervalo tem cobertura nominal para E[tau_tilde] = b_e - a_e' theta_tilde + tau."
BIAS_CAVEAT = ("Cobrir tau exige ainda que o viés do oráculo, b_e - a_e' theta_tilde, "
               "seja desprezível frente a sigma_tau.")

# Fronteiras do regime de tipicidade D / ||a_e||
TYPICAL_MAX = 0.1
ATYPICAL_MIN = 0.9


class VarianceMethod(str, Enum):
    PLUGIN = "plugin"
    JACKKNIFE_TREATED = "jackknife_treated"
    PLACEBO_CONTROLS = "placebo_controls"


def _default_intercept(orientation: Orientation, intercept: Optional[bool]) -> bool:
    if intercept is not None:
        return bool(intercept)
    return Orientation(orientation) == Orientation.ROWS_ARE_UNITS


def _penalty_matrix(noise: NoiseSpec, orientation: Orientation) -> Tuple[np.ndarray, np.ndarray]:
    """(Sigma, psi) do problema: linhas de eps para controle sintético, colunas na previsão"""
    if Orientation(orientation) == Orientation.ROWS_ARE_UNITS:
        return noise.sigma_col, np.zeros(noise.n)
    return noise.sigma_row, noise.psi


def fit_weights(panel: PanelObservation, noise: NoiseSpec, eta: float, constraint: ConstraintSet,
                intercept: Optional[bool] = None, options: Optional[SolverOptions] = None) -> FitResult:
    """
    Ajusta os pesos do estimador de Tikhonov aos dados observados.

    Args:
        panel (PanelObservation): Painel observado
        noise (NoiseSpec): Especificação do ruído (fornece Sigma e psi)
        eta (float): Parâmetro de regularização
        constraint (ConstraintSet): Conjunto de restrição dos pesos
        intercept (bool, optional): Padrão: sem intercepto no controle sintético,
            com intercepto na previsão contrafactual
        options (SolverOptions, optional): Opções do solver

    Returns:
        FitResult: (theta0_hat, theta_hat) e diagnósticos
    """
    design, target, _, _ = panel.regression_view()
    sigma, psi = _penalty_matrix(noise, panel.orientation)
    return solve_constrained_tikhonov(design, target, sigma, psi, eta, constraint,
                                      _default_intercept(panel.orientation, intercept), options)


def _truth_view(truth: GroundTruth, orientation: Orientation):
    """(design, target, x_post, y_post sem tau) do componente sistemático"""
    if Orientation(orientation) == Orientation.ROWS_ARE_UNITS:
        return truth.A.T, truth.a_e, truth.b, truth.b_e
    return truth.A, truth.b, truth.a_e, truth.b_e


def fit_oracle(truth: GroundTruth, eta: float, constraint: ConstraintSet, intercept: Optional[bool] = None,
               options: Optional[SolverOptions] = None,
               orientation: Orientation = Orientation.COLUMNS_ARE_UNITS) -> FitResult:
    """Pesos oráculo (theta0_tilde, theta_tilde): minimizam a perda esperada sobre o sinal"""
    design, target, _, _ = _truth_view(truth, orientation)
    sigma, psi = _penalty_matrix(truth.noise, orientation)
    return solve_oracle(design, target, sigma, psi, eta, constraint,
                        _default_intercept(orientation, intercept), options)


def estimate_tau(panel: PanelObservation, fit: FitResult) -> float:
    """tau_hat = y_post - theta0 - x_post' theta no enquadramento do painel"""
    _, _, x_post, y_post = panel.regression_view()
    theta = np.asarray(fit.theta, dtype=float)
    if theta.shape != x_post.shape:
        raise DimensionError(f"theta tem comprimento {theta.size}, esperado {x_post.size}")
    return float(y_post - fit.theta0 - x_post @ theta)


def oracle_tau(panel: PanelObservation, oracle_fit: FitResult) -> float:
    """tau_tilde: o mesmo estimador com os pesos oráculo"""
    return estimate_tau(panel, oracle_fit)


def expected_oracle_tau(truth: GroundTruth, oracle_fit: FitResult,
                        orientation: Orientation = Orientation.COLUMNS_ARE_UNITS) -> float:
    """E[tau_tilde] calculado exatamente a partir da verdade"""
    _, _, x_post, y_post = _truth_view(truth, orientation)
    return float(y_post + truth.tau - oracle_fit.theta0 - x_post @ oracle_fit.theta)


def error_decomposition(truth: Optional[GroundTruth], theta_tilde, panel: PanelObservation, tau_hat: float,
                        theta0_tilde: float = 0.0) -> Tuple[float, float, float]:
    """
    Decompõe tau_hat - tau em (desvio do oráculo, viés do oráculo, ruído do oráculo).

    bias = b_e - theta0_tilde - a_e' theta_tilde; noise = nu_e - eps_e' theta_tilde;
    dev é o restante, de modo que dev + bias + noise = tau_hat - tau.

    Returns:
        tuple: (dev, bias, noise)
    """
    if truth is None:
        raise PrerequisiteError("A decomposição do erro exige a verdade de simulação")
    if panel.orientation != Orientation.COLUMNS_ARE_UNITS:
        raise ParameterError("A decomposição do erro é definida para controle sintético (columns_are_units)")
    theta_tilde = np.asarray(theta_tilde, dtype=float)
    if theta_tilde.shape != (truth.p,) or panel.p != truth.p or panel.n != truth.n:
        raise DimensionError("theta_tilde, painel e verdade com dimensões inconsistentes")
    nu_e = panel.y_e - truth.b_e - truth.tau
    eps_e = panel.x_e - truth.a_e
    bias = float(truth.b_e - theta0_tilde - truth.a_e @ theta_tilde)
    noise = float(nu_e - eps_e @ theta_tilde)
    dev = float((tau_hat - truth.tau) - bias - noise)
    return dev, bias, noise


@dataclass(frozen=True)
class DeviationReport:
    """Limite de |tau_hat - tau_tilde| e as probabilidades de falha associadas"""

    bound: float
    D: float
    D_tilde: float
    w1: float
    w2: float
    v: float
    probability_terms: Tuple[Optional[float], float, float]
    s_used: float
    width: float
    sigma: float
    post_residual_sd: float
    psi_term: float

    def to_dict(self) -> dict:
        return {
            "bound": self.bound,
            "D": self.D,
            "D_tilde": self.D_tilde,
            "w1": self.w1,
            "w2": self.w2,
            "v": self.v,
            "probability_terms": list(self.probability_terms),
            "s_used": self.s_used,
            "width": self.width,
            "sigma": self.sigma,
            "post_residual_sd": self.post_residual_sd,
            "psi_term": self.psi_term,
        }


def deviation_bound_value(s, sigma, D, residual_sd, psi_term, width, w1: float = 1.0, w2: float = 1.0):
    """Valor do limite; aceita escalares ou arrays (usado pelo simlab sobre a tabela)"""
    return (s / sigma) * (np.sqrt(2.0) * D + w2 * residual_sd) + (1.0 + w1) * psi_term * width


def deviation_bound(a_e, decomposition: SvdDecomposition, noise: NoiseSpec, eta: float, n: int, s: float,
                    width: float, w1: float = 1.0, w2: float = 1.0, v: float = 1.0,
                    u: Optional[float] = None, c: float = 1.0) -> DeviationReport:
    """
    Limite (s/sigma)(sqrt(2) D + w2 ||eps_ej - psi_col' eps_.j||) + (1 + w1) ||psi_col' Sigma^{1/2}|| width.

    sigma = ||Sigma_{eps_i.}||^{1/2}. As probabilidades de falha são
    (c exp(-c u), 2 exp(-c w1^2 width^2 / s^2), 2 exp(-w2^2)); a primeira é
    None quando u não é fornecido.
    """
    if s < 0 or width < 0 or w1 < 0 or w2 < 0:
        raise ParameterError("s, width, w1 e w2 devem ser não negativos")
    sigma = float(np.sqrt(noise.sigma_sq_row))
    if sigma <= 0:
        raise ParameterError("deviation_bound exige sigma > 0")
    residual_sd = noise.post_residual_sd
    psi_term = noise.psi_col_term
    report = typicality_D(a_e, decomposition, sigma, eta, n, residual_sd)
    bound = deviation_bound_value(s, sigma, report.D, residual_sd, psi_term, width, w1, w2)
    width_probability = 2.0 * np.exp(-c * w1 ** 2 * width ** 2 / s ** 2) if s > 0 else 0.0
    return DeviationReport(
        bound=float(bound),
        D=report.D,
        D_tilde=report.D_tilde,
        w1=float(w1),
        w2=float(w2),
        v=float(v),
        probability_terms=(None if u is None else float(c * np.exp(-c * u)),
                           float(width_probability),
                           float(2.0 * np.exp(-w2 ** 2))),
        s_used=float(s),
        width=float(width),
        sigma=sigma,
        post_residual_sd=residual_sd,
        psi_term=psi_term,
    )


def jackknife_error(values: Sequence[float]) -> float:
    """Erro padrão jackknife sqrt((N-1)/N sum (x_i - media)^2) de réplicas leave-one-out"""
    values = np.asarray(values, dtype=float)
    N = values.size
    deviations = (values - values.mean()) ** 2
    return float(np.sqrt((N - 1) / N * np.sum(deviations)))


def _placebo_gaps(fit: FitResult, panel: PanelObservation, noise: NoiseSpec, eta: float,
                  constraint: ConstraintSet, options: Optional[SolverOptions]) -> np.ndarray:
    scale = np.sqrt(1.0 / noise.p_e + float(fit.theta @ fit.theta))
    gaps = []
    for j in range(panel.p):
        others = np.delete(np.arange(panel.p), j)
        placebo = solve_constrained_tikhonov(
            panel.X[:, others], panel.X[:, j],
            noise.sigma_row[np.ix_(others, others)], noise.psi[others],
            eta, constraint, False, options,
        )
        gap = panel.x_e[j] - placebo.theta0 - panel.x_e[others] @ placebo.theta
        gaps.append(gap * scale / np.sqrt(1.0 + float(placebo.theta @ placebo.theta)))
    return np.asarray(gaps)


def variance_estimate(fit: FitResult, panel: PanelObservation, noise: Optional[NoiseSpec],
                      method=VarianceMethod.PLUGIN, eta: float = 1.0,
                      constraint: Optional[ConstraintSet] = None,
                      options: Optional[SolverOptions] = None) -> float:
    """
    Estima sigma_tau, o desvio padrão de tau_hat.

    plugin: sigma_e sqrt(1/p_e + ||theta_hat||^2).
    jackknife_treated: jackknife sobre as séries tratadas, re-agregando sem uma
    série por vez e mantendo theta_hat fixo.
    placebo_controls (experimental): desvio padrão dos gaps placebo de cada
    controle, reajustando os pesos sem ele e reescalando cada gap por
    sqrt(1/p_e + ||theta_hat||^2) / sqrt(1 + ||theta_hat_(j)||^2).

    Returns:
        float: sigma_tau estimado
    """
    method = VarianceMethod(method)
    theta = np.asarray(fit.theta, dtype=float)

    if method == VarianceMethod.PLUGIN:
        if noise is None:
            raise PrerequisiteError("plugin exige sigma_e e p_e da NoiseSpec")
        return float(noise.sigma_e * np.sqrt(1.0 / noise.p_e + float(theta @ theta)))

    if method == VarianceMethod.JACKKNIFE_TREATED:
        series = panel.treated_series
        if series is None or series.shape[1] < 2:
            raise PrerequisiteError("jackknife_treated exige séries tratadas com p_e >= 2")
        total = series.sum(axis=1)
        N = series.shape[1]
        replicates = []
        for i in range(N):
            means = (total - series[:, i]) / (N - 1)
            leave_out = PanelObservation(panel.X, means[:-1], panel.x_e, float(means[-1]),
                                         orientation=panel.orientation)
            replicates.append(estimate_tau(leave_out, fit))
        return jackknife_error(replicates)

    if panel.orientation != Orientation.COLUMNS_ARE_UNITS:
        raise PrerequisiteError("placebo_controls é definido para controle sintético (columns_are_units)")
    if panel.p < 2:
        raise PrerequisiteError("placebo_controls exige p >= 2")
    if noise is None:
        raise PrerequisiteError("placebo_controls exige a NoiseSpec (Sigma, psi, p_e)")
    logger.warning("Variância placebo_controls é experimental")
    gaps = _placebo_gaps(fit, panel, noise, eta, constraint or ConstraintSet(ConstraintKind.SIMPLEX), options)
    return float(np.std(gaps, ddof=1))


def confidence_interval(tau_hat: float, sigma_tau: float, alpha: float) -> Tuple[float, float]:
    """tau_hat +- z_{alpha/2} sigma_tau"""
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha deve estar em (0, 1), recebido {alpha}")
    if sigma_tau < 0:
        raise ParameterError("sigma_tau deve ser não negativo")
    half_width = float(norm.ppf(1.0 - alpha / 2.0)) * sigma_tau
    return float(tau_hat - half_width), float(tau_hat + half_width)


@dataclass(frozen=True)
class InferenceReport:
    """Resultado da estimação de tau com intervalo de confiança"""

    tau_hat: float
    sigma_tau_hat: float
    ci_low: float
    ci_high: float
    alpha: float
    variance_method: VarianceMethod
    fit: FitResult
    tau_tilde: Optional[float] = None
    e_tau_tilde: Optional[float] = None
    decomposition: Optional[Tuple[float, float, float]] = None
    experimental: bool = False
    orientation: Orientation = Orientation.COLUMNS_ARE_UNITS
    coverage_target: str = COVERAGE_TARGET
    bias_caveat: str = BIAS_CAVEAT

    def to_dict(self) -> dict:
        decomposition = None
        if self.decomposition is not None:
            dev, bias, noise = self.decomposition
            decomposition = {"oracle_deviation": dev, "oracle_bias": bias, "oracle_noise": noise}
        return {
            "tau_hat": self.tau_hat,
            "tau_tilde": self.tau_tilde,
            "e_tau_tilde": self.e_tau_tilde,
            "sigma_tau_hat": self.sigma_tau_hat,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "alpha": self.alpha,
            "variance_method": VarianceMethod(self.variance_method).value,
            "experimental": self.experimental,
            "orientation": Orientation(self.orientation).value,
            "decomposition": decomposition,
            "fit": self.fit.to_dict(),
            "coverage_target": self.coverage_target,
            "bias_caveat": self.bias_caveat,
        }


def infer(panel: PanelObservation, noise: NoiseSpec, eta: float, constraint: ConstraintSet,
          intercept: Optional[bool] = None, alpha: float = 0.05, variance_method=VarianceMethod.PLUGIN,
          options: Optional[SolverOptions] = None, truth: Optional[GroundTruth] = None,
          oracle_fit: Optional[FitResult] = None) -> InferenceReport:
    """
    Pipeline completo: ajuste, tau_hat, sigma_tau, intervalo e, com a verdade, oráculo e decomposição.
    """
    variance_method = VarianceMethod(variance_method)
    fit = fit_weights(panel, noise, eta, constraint, intercept, options)
    tau_hat = estimate_tau(panel, fit)
    sigma_tau = variance_estimate(fit, panel, noise, variance_method, eta, constraint, options)
    ci_low, ci_high = confidence_interval(tau_hat, sigma_tau, alpha)

    tau_tilde = e_tau_tilde = decomposition = None
    if truth is not None:
        if oracle_fit is None:
            oracle_fit = fit_oracle(truth, eta, constraint, _default_intercept(panel.orientation, intercept),
                                    options, panel.orientation)
        tau_tilde = oracle_tau(panel, oracle_fit)
        e_tau_tilde = expected_oracle_tau(truth, oracle_fit, panel.orientation)
        if panel.orientation == Orientation.COLUMNS_ARE_UNITS:
            decomposition = error_decomposition(truth, oracle_fit.theta, panel, tau_hat, oracle_fit.theta0)

    logger.info(f"tau_hat={tau_hat:.6g}, sigma_tau={sigma_tau:.6g}, IC=({ci_low:.6g}, {ci_high:.6g})")
    return InferenceReport(
        tau_hat=tau_hat,
        sigma_tau_hat=sigma_tau,
        ci_low=ci_low,
        ci_high=ci_high,
        alpha=alpha,
        variance_method=variance_method,
        fit=fit,
        tau_tilde=tau_tilde,
        e_tau_tilde=e_tau_tilde,
        decomposition=decomposition,
        experimental=variance_method == VarianceMethod.PLACEBO_CONTROLS,
        orientation=panel.orientation,
    )


@dataclass(frozen=True)
class DiagnosticsInputs:
    """Grandezas que entram nas condições de normalidade"""

    n: int
    p: int
    eta: float
    sigma: float
    sigma_e: float
    rank: int
    p_eff: float
    D: float
    D_tilde: float
    a_e_norm: float
    oracle_residual_norm: float
    psi_term: float = 0.0
    singular_values: Tuple[float, ...] = ()
    R: Optional[int] = None

    @property
    def sigma_tau(self) -> float:
        return self.sigma_e / np.sqrt(self.p_eff)


@dataclass(frozen=True)
class ConditionVerdict:
    name: str
    ratio: float
    threshold: float
    passed: bool

    def to_dict(self) -> dict:
        return {"name": self.name, "ratio": self.ratio, "threshold": self.threshold, "passed": self.passed}


@dataclass(frozen=True)
class DiagnosticsReport:
    """Condições de normalidade como razões LHS/RHS com c = 1"""

    fit_ratio: float
    eta_lower_ratios: Tuple[float, float]
    rank_ratios: Tuple[float, float]
    p_eff_ratios: Tuple[float, float, float]
    singular_value_ratio: float
    eta_upper_ratio: float
    atypical_eta_ratio: float
    typicality_ratio: float
    typicality_regime: str
    kappa: float
    kappa_prime: float
    threshold: float
    verdicts: Tuple[ConditionVerdict, ...] = field(default_factory=tuple)

    @property
    def all_passed(self) -> bool:
        return all(verdict.passed for verdict in self.verdicts)

    def to_dict(self) -> dict:
        return {
            "fit_ratio": self.fit_ratio,
            "eta_lower_ratios": list(self.eta_lower_ratios),
            "rank_ratios": list(self.rank_ratios),
            "p_eff_ratios": list(self.p_eff_ratios),
            "singular_value_ratio": self.singular_value_ratio,
            "eta_upper_ratio": self.eta_upper_ratio,
            "atypical_eta_ratio": self.atypical_eta_ratio,
            "typicality_ratio": self.typicality_ratio,
            "typicality_regime": self.typicality_regime,
            "kappa": self.kappa,
            "kappa_prime": self.kappa_prime,
            "threshold": self.threshold,
            "all_passed": self.all_passed,
            "verdicts": [verdict.to_dict() for verdict in self.verdicts],
        }


def _ratio(numerator: float, denominator: float) -> float:
    """numerator / denominator com 0/x = 0 e x/0 = inf"""
    if numerator == 0:
        return 0.0
    if denominator == 0:
        return float("inf")
    return float(numerator / denominator)


def typicality_regime(ratio: float) -> str:
    if ratio <= TYPICAL_MAX:
        return "typical"
    if ratio >= ATYPICAL_MIN:
        return "atypical"
    return "intermediate"


def normality_diagnostics(inputs: DiagnosticsInputs, kappa: float = 1.0, kappa_prime: float = 1.0,
                          threshold: float = 0.1) -> DiagnosticsReport:
    """
    Avalia as condições de normalidade aproximada da estatística z.

    Cada condição "<<" vira uma razão LHS/RHS que passa quando <= threshold;
    os limites inferiores quase vazios de eta e a condição de valor singular
    passam quando a razão é <= 1.

    Args:
        inputs (DiagnosticsInputs): Grandezas do problema
        kappa (float): Expoente de períodos preditivos
        kappa_prime (float): Expoente de controles preditivos
        threshold (float): Limiar das condições "<<"

    Returns:
        DiagnosticsReport: Razões, regime de tipicidade e veredito por condição
    """
    if inputs.eta <= 0:
        raise ParameterError("As condições de normalidade exigem eta > 0")
    n, p, eta = inputs.n, inputs.p, inputs.eta
    sigma, sigma_e, p_eff = inputs.sigma, inputs.sigma_e, inputs.p_eff
    rank = inputs.rank
    log_p = np.log(p) if p > 1 else 1.0
    r = float("inf") if inputs.D_tilde == 0 else eta * sigma_e / inputs.D_tilde
    r2, r4 = r ** 2, r ** 4

    fit_ratio = _ratio(inputs.oracle_residual_norm ** 2 / n, n ** (kappa - 1.0) * inputs.sigma_tau ** 2)

    eta_first = eta ** 2 * min(
        n, np.sqrt(p_eff * n * log_p), (p_eff * n * log_p / rank) if rank > 0 else np.inf)
    eta_second_terms = [
        np.sqrt(n * log_p) / inputs.oracle_residual_norm if inputs.oracle_residual_norm > 0 else np.inf,
        np.sqrt(p_eff) * n * log_p / np.sqrt(rank) if rank > 0 else np.inf,
    ]
    eta_second = eta ** 2 * min(eta_second_terms)
    eta_lower = (
        _ratio(max(sigma ** 2, 1.0), eta_first),
        _ratio(max(sigma, 1.0 / sigma) if sigma > 0 else np.inf, eta_second),
    )

    rank_ratios = (
        _ratio(rank, n * r2),
        _ratio(rank, sigma ** 2 * n ** 2 / p_eff * r4),
    )
    p_eff_ratios = (
        _ratio(p_eff, n / log_p * min(r2, r4)),
        _ratio(p_eff, n ** (2.0 - kappa) / log_p * (sigma / sigma_e) ** 2 * r4) if sigma_e > 0 else 0.0,
        _ratio(p_eff * log_p * inputs.psi_term ** 2, sigma_e ** 2),
    )

    R = rank if inputs.R is None else inputs.R
    values = inputs.singular_values
    next_value = float(values[R]) if R < len(values) else 0.0
    singular_value_ratio = _ratio(next_value, sigma / np.sqrt(p_eff) * R / np.sqrt(log_p))

    eta_upper_ratio = _ratio(eta, np.sqrt(n ** (kappa - 1.0) * p ** kappa_prime / p_eff))
    atypical_eta_ratio = _ratio((p_eff * p ** 2 * log_p / n) ** 0.25, eta)
    typicality_ratio = _ratio(inputs.D, inputs.a_e_norm)

    verdicts = [ConditionVerdict("fit", fit_ratio, threshold, fit_ratio <= threshold)]
    verdicts += [ConditionVerdict(f"eta_lower_{k + 1}", ratio, 1.0, ratio <= 1.0)
                 for k, ratio in enumerate(eta_lower)]
    verdicts += [ConditionVerdict(f"rank_{k + 1}", ratio, threshold, ratio <= threshold)
                 for k, ratio in enumerate(rank_ratios)]
    verdicts += [ConditionVerdict(f"p_eff_{k + 1}", ratio, threshold, ratio <= threshold)
                 for k, ratio in enumerate(p_eff_ratios)]
    verdicts.append(ConditionVerdict("singular_value", singular_value_ratio, 1.0, singular_value_ratio <= 1.0))

    return DiagnosticsReport(
        fit_ratio=fit_ratio,
        eta_lower_ratios=eta_lower,
        rank_ratios=rank_ratios,
        p_eff_ratios=p_eff_ratios,
        singular_value_ratio=singular_value_ratio,
        eta_upper_ratio=eta_upper_ratio,
        atypical_eta_ratio=atypical_eta_ratio,
        typicality_ratio=typicality_ratio,
        typicality_regime=typicality_regime(typicality_ratio),
        kappa=float(kappa),
        kappa_prime=float(kappa_prime),
        threshold=float(threshold),
        verdicts=tuple(verdicts),
    )


def diagnostics_inputs_from_truth(truth: GroundTruth, oracle_fit: FitResult, eta: float) -> DiagnosticsInputs:
    """Monta as entradas dos diagnósticos a partir da verdade de simulação"""
    noise = truth.noise
    sigma = float(np.sqrt(noise.sigma_sq_row))
    decomposition = svd(truth.A)
    report = typicality_D(truth.a_e, decomposition, sigma, eta, truth.n, noise.post_residual_sd)
    residual = oracle_fit.theta0 + truth.A @ oracle_fit.theta - truth.b
    return DiagnosticsInputs(
        n=truth.n,
        p=truth.p,
        eta=eta,
        sigma=sigma,
        sigma_e=noise.sigma_e,
        rank=decomposition.rank(),
        p_eff=effective_sample_size(oracle_fit.theta, noise.p_e),
        D=report.D,
        D_tilde=report.D_tilde,
        a_e_norm=float(np.linalg.norm(truth.a_e)),
        oracle_residual_norm=float(np.linalg.norm(residual)),
        psi_term=noise.psi_col_term,
        singular_values=tuple(float(v) for v in decomposition.singular_values),
    )


def diagnostics_inputs_from_panel(panel: PanelObservation, fit: FitResult, noise: NoiseSpec,
                                  eta: float) -> DiagnosticsInputs:
    """
    Versão plug-in para dados reais: A ~ X, a_e ~ x_e e theta_tilde ~ theta_hat.

    O resíduo ||X theta_hat - y|| inclui o ruído e superestima o erro do oráculo.
    """
    sigma = float(np.sqrt(noise.sigma_sq_row))
    decomposition = svd(panel.X)
    report = typicality_D(panel.x_e, decomposition, sigma, eta, panel.n, noise.post_residual_sd)
    residual = fit.theta0 + panel.X @ fit.theta - panel.y
    return DiagnosticsInputs(
        n=panel.n,
        p=panel.p,
        eta=eta,
        sigma=sigma,
        sigma_e=noise.sigma_e,
        rank=decomposition.rank(),
        p_eff=effective_sample_size(fit.theta, noise.p_e),
        D=report.D,
        D_tilde=report.D_tilde,
        a_e_norm=float(np.linalg.norm(panel.x_e)),
        oracle_residual_norm=float(np.linalg.norm(residual)),
        psi_term=noise.psi_col_term,
        singular_values=tuple(float(v) for v in decomposition.singular_values),
    )
