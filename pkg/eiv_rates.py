#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Taxas de convergência do estimador
==================================

Larguras gaussianas dos conjuntos de desvio, tamanhos efetivos de amostra e as
condições de ponto fixo (versões simplificada e refinada) que limitam
||Sigma^{1/2}(theta_hat - theta_tilde)||.

Todas as constantes universais são colapsadas em uma constante c por fórmula,
padrão 1.0, sempre ecoada nos relatórios.
"""

import os
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, NamedTuple, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from eiv_errors import (
    ConvergenceError,
    InfeasiblePointError,
    ParameterError,
    PrerequisiteError,
)
from eiv_random import make_rng, worker_count
from eiv_solver import ConstraintKind, ConstraintSet
from eiv_spectral import approximate_rank

# Configuração de logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=[
        logging.FileHandler(os.environ.get("EIV_LOG_FILE", "eiv_workbench.log")),
        logging.StreamHandler()
    ]
)
logger = logging.getLogger("EIVRates")

# Problema interno da largura Monte Carlo
INNER_STEPS = 500
DYKSTRA_STEPS = 100
MC_FEASIBILITY_TOL = 1e-8
MAX_FLAGGED_FRACTION = 0.10

# Bisseção do ponto fixo
S_LOWER = 1e-12
S_UPPER = 1e6
S_RTOL = 1e-10


class WidthMode(str, Enum):
    L1_BOUND = "l1_bound"
    EUCLIDEAN_BOUND = "euclidean_bound"
    MONTE_CARLO = "monte_carlo"


class SampleSizeMode(str, Enum):
    ROWS = "rows"
    COLUMNS = "columns"


@dataclass(frozen=True)
class SetDescriptor:
    """
    Conjunto de desvios {theta - center : theta em Theta, ||M(theta - center)|| <= s}.

    `metric_sqrt` é M = Sigma^{1/2}; None usa a bola euclidiana simples.
    """

    base_constraint: ConstraintSet
    center: np.ndarray
    radius_s: float
    metric_sqrt: Optional[np.ndarray] = None

    def __post_init__(self):
        center = np.array(self.center, dtype=float).ravel()
        if self.radius_s < 0:
            raise ParameterError("radius_s deve ser não negativo")
        if not self.base_constraint.contains(center):
            raise InfeasiblePointError(f"O centro não pertence a {self.base_constraint.label}")
        center.setflags(write=False)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius_s", float(self.radius_s))
        if self.metric_sqrt is not None:
            metric = np.array(self.metric_sqrt, dtype=float)
            if metric.shape != (center.size, center.size):
                raise ParameterError("metric_sqrt deve ser p x p")
            metric.setflags(write=False)
            object.__setattr__(self, "metric_sqrt", metric)

    @property
    def p(self) -> int:
        return self.center.size

    @property
    def metric(self) -> str:
        return "identity" if self.metric_sqrt is None else "sigma"

    def with_radius(self, radius_s: float) -> "SetDescriptor":
        return SetDescriptor(self.base_constraint, self.center, radius_s, self.metric_sqrt)

    def metric_norm(self, delta: np.ndarray) -> float:
        if self.metric_sqrt is None:
            return float(np.linalg.norm(delta))
        return float(np.linalg.norm(self.metric_sqrt @ delta))


def _log_p(p: int) -> float:
    return np.log(p) if p > 1 else 1.0


def width_upper_bound(descriptor: SetDescriptor, p: int, c: float = 1.0) -> float:
    """
    Limite superior da largura gaussiana do conjunto de desvios.

    simplex e bola l1 de raio r: c r sqrt(log p); euclidiano e ortante: c s sqrt(p).
    """
    if p < 1:
        raise ParameterError("p deve ser pelo menos 1")
    kind = descriptor.base_constraint.kind
    if kind == ConstraintKind.SIMPLEX:
        return float(c * np.sqrt(_log_p(p)))
    if kind == ConstraintKind.L1_BALL:
        return float(c * descriptor.base_constraint.radius * np.sqrt(_log_p(p)))
    if kind in (ConstraintKind.EUCLIDEAN, ConstraintKind.NONNEGATIVE):
        return float(c * descriptor.radius_s * np.sqrt(p))
    raise ParameterError(f"Conjunto sem limite de largura: {kind}")


class WidthEstimate(NamedTuple):
    estimate: float
    std_error: float
    flagged: int = 0
    metric: str = "identity"


def _project_metric_ball(point: np.ndarray, descriptor: SetDescriptor,
                         eigenvalues: np.ndarray, eigenvectors: np.ndarray) -> np.ndarray:
    """Projeção euclidiana no elipsoide {x : ||M(x - center)|| <= s}"""
    s = descriptor.radius_s
    delta = point - descriptor.center
    if descriptor.metric_sqrt is None:
        norm = np.linalg.norm(delta)
        return point if norm <= s else descriptor.center + (s / norm) * delta
    if descriptor.metric_norm(delta) <= s:
        return point
    # x - center = (I + lam M^2)^{-1} delta, com lam tal que ||M(x - center)|| = s
    rotated = eigenvectors.T @ delta
    mu = eigenvalues

    def excess(lam):
        return float(np.sum(mu * rotated ** 2 / (1.0 + lam * mu) ** 2)) - s ** 2

    upper = 1.0
    while excess(upper) > 0:
        upper *= 2.0
    lam = brentq(excess, 0.0, upper, xtol=1e-14, rtol=1e-12)
    return descriptor.center + eigenvectors @ (rotated / (1.0 + lam * mu))


def _project_intersection(point: np.ndarray, descriptor: SetDescriptor,
                          eigenvalues: np.ndarray, eigenvectors: np.ndarray) -> np.ndarray:
    """Projeções alternadas com correção de Dykstra em Theta intersect bola"""
    x = point
    p_correction = np.zeros_like(point)
    q_correction = np.zeros_like(point)
    for _ in range(DYKSTRA_STEPS):
        y = descriptor.base_constraint.project(x + p_correction)
        p_correction = x + p_correction - y
        x_new = _project_metric_ball(y + q_correction, descriptor, eigenvalues, eigenvectors)
        q_correction = y + q_correction - x_new
        if np.linalg.norm(x_new - x) <= 1e-13 * (1.0 + np.linalg.norm(x)):
            return x_new
        x = x_new
    return x


def _linear_vertex(g: np.ndarray, constraint: ConstraintSet) -> Optional[np.ndarray]:
    p = g.size
    if constraint.kind == ConstraintKind.SIMPLEX:
        vertex = np.zeros(p)
        vertex[int(np.argmax(g))] = 1.0
        return vertex
    if constraint.kind == ConstraintKind.L1_BALL:
        i = int(np.argmax(np.abs(g)))
        vertex = np.zeros(p)
        vertex[i] = constraint.radius * np.sign(g[i])
        return vertex
    return None


def _projection_path_max(g: np.ndarray, descriptor: SetDescriptor) -> Tuple[float, np.ndarray]:
    """
    Maximização linear na bola euclidiana pela trajetória P(center + t g).

    ||P(center + t g) - center|| é não decrescente em t; o ponto em que a
    distância atinge s é o maximizador.
    """
    center, s = descriptor.center, descriptor.radius_s
    constraint = descriptor.base_constraint

    def distance_excess(t):
        return float(np.linalg.norm(constraint.project(center + t * g) - center)) - s

    upper = s / max(float(np.linalg.norm(g)), 1e-300)
    for _ in range(200):
        if distance_excess(upper) >= 0:
            break
        upper *= 2.0
    else:
        point = constraint.project(center + upper * g)
        return float(g @ (point - center)), point
    t = brentq(distance_excess, 0.0, upper, xtol=1e-15 * upper, rtol=1e-13)
    point = constraint.project(center + t * g)
    return float(g @ (point - center)), point


def _maximize_deviation(g: np.ndarray, descriptor: SetDescriptor,
                        eigenvalues: np.ndarray, eigenvectors: np.ndarray) -> Tuple[float, bool]:
    """sup de g'delta no conjunto de desvios; retorna (valor, viável)"""
    s = descriptor.radius_s
    constraint = descriptor.base_constraint
    center = descriptor.center
    if s == 0.0:
        return 0.0, True

    if constraint.kind == ConstraintKind.EUCLIDEAN:
        if descriptor.metric_sqrt is None:
            return float(s * np.linalg.norm(g)), True
        inverse = np.linalg.pinv(descriptor.metric_sqrt)
        if np.linalg.norm(descriptor.metric_sqrt @ (inverse @ g) - g) > 1e-10 * (1.0 + np.linalg.norm(g)):
            return np.inf, True
        return float(s * np.linalg.norm(inverse @ g)), True

    if np.isinf(s):
        if constraint.is_compact:
            return constraint.linear_max(g) - float(g @ center), True
        return (np.inf if np.any(g > 0) else float(-g @ center)), True

    vertex = _linear_vertex(g, constraint)
    if vertex is not None and descriptor.metric_norm(vertex - center) <= s:
        return float(g @ (vertex - center)), True

    if descriptor.metric_sqrt is None:
        value, point = _projection_path_max(g, descriptor)
    else:
        scale = float(np.max(np.abs(eigenvalues))) ** -0.5 if eigenvalues.size and np.max(eigenvalues) > 0 else 1.0
        step = s * scale / max(float(np.linalg.norm(g)), 1e-300)
        point = center.copy()
        for _ in range(INNER_STEPS):
            candidate = _project_intersection(point + step * g, descriptor, eigenvalues, eigenvectors)
            moved = np.linalg.norm(candidate - point)
            point = candidate
            if moved <= 1e-12 * (1.0 + np.linalg.norm(point)):
                break
        value = float(g @ (point - center))

    feasible = (constraint.contains(point, tol=MC_FEASIBILITY_TOL)
                and descriptor.metric_norm(point - center) <= s * (1.0 + MC_FEASIBILITY_TOL) + MC_FEASIBILITY_TOL)
    return value, feasible


def width_monte_carlo(descriptor: SetDescriptor, n_samples: int, seed: int,
                      workers: Optional[int] = None) -> WidthEstimate:
    """
    Estima a largura gaussiana E sup_{delta} g'delta por Monte Carlo.

    As amostras são sorteadas de uma vez e reduzidas na ordem da semente, de
    modo que o resultado não depende do número de threads.

    Args:
        descriptor (SetDescriptor): Conjunto de desvios
        n_samples (int): Número de vetores gaussianos (>= 2)
        seed (int): Semente
        workers (int, optional): Threads de trabalho (padrão: EIV_WORKERS)

    Returns:
        WidthEstimate: (estimate, std_error, flagged, metric)
    """
    if n_samples < 2:
        raise ParameterError("width_monte_carlo exige n_samples >= 2")
    draws = make_rng(seed).standard_normal((n_samples, descriptor.p))

    if descriptor.metric_sqrt is not None:
        squared = descriptor.metric_sqrt.T @ descriptor.metric_sqrt
        eigenvalues, eigenvectors = np.linalg.eigh((squared + squared.T) / 2.0)
        eigenvalues = np.clip(eigenvalues, 0.0, None)
    else:
        eigenvalues, eigenvectors = np.ones(descriptor.p), np.eye(descriptor.p)

    def evaluate(g):
        return _maximize_deviation(g, descriptor, eigenvalues, eigenvectors)

    workers = workers or worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(evaluate, draws))
    else:
        results = [evaluate(g) for g in draws]

    values = np.array([value for value, _ in results])
    feasible = np.array([ok for _, ok in results])
    flagged = int(np.sum(~feasible))
    if flagged > MAX_FLAGGED_FRACTION * n_samples:
        raise ConvergenceError(
            f"{flagged} de {n_samples} amostras de largura não atingiram viabilidade",
            flagged=flagged, n_samples=n_samples,
        )
    if flagged:
        logger.warning(f"{flagged} amostras de largura descartadas por inviabilidade")
    kept = values[feasible]
    if np.any(np.isinf(kept)):
        return WidthEstimate(np.inf, np.inf, flagged, descriptor.metric)
    estimate = float(np.mean(kept))
    std_error = float(np.std(kept, ddof=1) / np.sqrt(kept.size)) if kept.size > 1 else 0.0
    return WidthEstimate(estimate, std_error, flagged, descriptor.metric)


def effective_sample_size(theta_tilde, p_e: float) -> float:
    """p_eff = 1 / (1/p_e + ||theta_tilde||^2)"""
    if p_e <= 0:
        raise ParameterError("p_e deve ser positivo")
    theta_tilde = np.asarray(theta_tilde, dtype=float)
    return float(1.0 / (1.0 / p_e + float(theta_tilde @ theta_tilde)))


def effective_sample_size_general(mode, refined: bool = False, *, sigma_row=None, theta_tilde=None,
                                  psi=None, residual_l2: Optional[float] = None,
                                  theta_norm: Optional[float] = None,
                                  sigma_col_norm: Optional[float] = None,
                                  sigma_nu_norm: Optional[float] = None) -> float:
    """
    Tamanho efetivo de amostra pela tabela de notação comum.

    rows: p_eff^{-1/2} = ||Sigma||^{-1/2} (||Sigma^{1/2}(theta_tilde - psi)|| + ||eps psi - nu||_{L2});
    columns: p_eff^{-1/2} = ||theta_tilde|| + ||Sigma_col||^{-1/2} ||Sigma_nu||^{1/2}.
    Com refined=True retorna p_eff,Sigma (sem a normalização por ||Sigma||).
    Retorna inf quando p_eff^{-1/2} = 0.
    """
    mode = SampleSizeMode(mode)
    if mode == SampleSizeMode.ROWS:
        if sigma_row is None or theta_tilde is None or psi is None or residual_l2 is None:
            raise PrerequisiteError("modo rows exige sigma_row, theta_tilde, psi e residual_l2")
        sigma_row = np.asarray(sigma_row, dtype=float)
        centered = np.asarray(theta_tilde, dtype=float) - np.asarray(psi, dtype=float)
        inverse_sqrt = np.sqrt(max(float(centered @ sigma_row @ centered), 0.0)) + float(residual_l2)
        if not refined:
            operator_norm = float(np.linalg.norm(sigma_row, 2))
            if operator_norm <= 0:
                raise ParameterError("||Sigma_{eps_i.}|| deve ser positiva")
            inverse_sqrt /= np.sqrt(operator_norm)
    else:
        if theta_norm is None and theta_tilde is not None:
            theta_norm = float(np.linalg.norm(theta_tilde))
        if theta_norm is None or sigma_col_norm is None or sigma_nu_norm is None:
            raise PrerequisiteError("modo columns exige ||theta_tilde||, ||Sigma_col|| e ||Sigma_nu||")
        if refined:
            inverse_sqrt = np.sqrt(sigma_col_norm) * theta_norm + np.sqrt(sigma_nu_norm)
        else:
            if sigma_col_norm <= 0:
                raise ParameterError("||Sigma_{eps_.j}|| deve ser positiva")
            inverse_sqrt = theta_norm + np.sqrt(sigma_nu_norm / sigma_col_norm)
    if inverse_sqrt <= 0:
        logger.warning("p_eff ilimitado (p_eff^{-1/2} = 0)")
        return float("inf")
    return float(inverse_sqrt ** -2)


@dataclass(frozen=True)
class SimplifiedRateParams:
    """Parâmetros da condição de ponto fixo simplificada"""

    n: int
    p: int
    sigma: float
    p_eff: float
    rank: int
    oracle_error: float
    eta: float
    v: float = 1.0
    c: float = 1.0
    width_mode: WidthMode = WidthMode.L1_BOUND
    l1_radius: float = 1.0
    singular_values: Optional[Tuple[float, ...]] = None
    sigma_convention: str = "row"
    mc_samples: int = 64
    mc_seed: int = 0
    mc_constraint: ConstraintSet = field(default_factory=lambda: ConstraintSet(ConstraintKind.SIMPLEX))
    mc_center: Optional[Tuple[float, ...]] = None
    mc_metric_sqrt: Optional[np.ndarray] = None

    def __post_init__(self):
        if int(self.n) < 1 or int(self.p) < 1:
            raise ParameterError("n e p devem ser positivos")
        if self.sigma < 0 or self.oracle_error < 0 or self.eta < 0:
            raise ParameterError("sigma, oracle_error e eta devem ser não negativos")
        if not self.p_eff > 0:
            raise ParameterError("p_eff deve ser positivo")
        if int(self.rank) < 0:
            raise ParameterError("rank deve ser não negativo")
        if self.v < 1:
            raise ParameterError("v deve ser >= 1")
        if self.c <= 0:
            raise ParameterError("c deve ser positivo")
        if self.sigma_convention not in ("row", "col"):
            raise ParameterError("sigma_convention deve ser 'row' ou 'col'")
        object.__setattr__(self, "width_mode", WidthMode(self.width_mode))
        if self.singular_values is not None:
            object.__setattr__(self, "singular_values", tuple(float(v) for v in self.singular_values))

    def set_descriptor(self, radius_s: float) -> SetDescriptor:
        """Conjunto de desvios usado pela largura Monte Carlo"""
        if self.mc_center is not None:
            center = np.asarray(self.mc_center, dtype=float)
        else:
            center = self.mc_constraint.project(np.zeros(self.p))
        return SetDescriptor(self.mc_constraint, center, radius_s, self.mc_metric_sqrt)


@dataclass(frozen=True)
class RefinedRateParams(SimplifiedRateParams):
    """Parâmetros da condição refinada (K, phi, width_Sigma, p_eff,Sigma)"""

    K: float = 1.0
    phi: float = 1.0
    width_sigma: Optional[float] = None
    p_eff_sigma: Optional[float] = None

    def __post_init__(self):
        super().__post_init__()
        if self.K < 1 or self.phi < 1:
            raise ParameterError("K e phi devem ser >= 1")
        if self.p_eff_sigma is not None and not self.p_eff_sigma > 0:
            raise ParameterError("p_eff_sigma deve ser positivo")

    @property
    def effective_p_eff_sigma(self) -> float:
        if self.p_eff_sigma is not None:
            return float(self.p_eff_sigma)
        return self.p_eff / self.sigma ** 2 if self.sigma > 0 else float("inf")


@dataclass(frozen=True)
class RateReport:
    """Solução do ponto fixo e grandezas associadas"""

    s_star: Optional[float]
    prediction_bound: Optional[float]
    eta_R_sq: float
    R_used: int
    solvable: bool
    probability_exponent: Optional[float]
    reason: Optional[str] = None
    width_mode: str = WidthMode.L1_BOUND.value
    width_at_s: Optional[float] = None
    metric: str = "identity"
    sigma_convention: str = "row"
    constants: Tuple[Tuple[str, float], ...] = ()

    def to_dict(self) -> dict:
        return {
            "s_star": self.s_star,
            "prediction_bound": self.prediction_bound,
            "eta_R_sq": self.eta_R_sq,
            "R_used": self.R_used,
            "solvable": self.solvable,
            "probability_exponent": self.probability_exponent,
            "reason": self.reason,
            "width_mode": self.width_mode,
            "width_at_s": self.width_at_s,
            "metric": self.metric,
            "sigma_convention": self.sigma_convention,
            "constants": dict(self.constants),
        }


def _x_one_half(x: float) -> float:
    """Convenção x^{1,1/2} = x + sqrt(x)"""
    return x + np.sqrt(x)


def _inverse_sqrt(value: float) -> float:
    return 0.0 if np.isinf(value) else value ** -0.5


def _width_function(params: SimplifiedRateParams) -> Callable[[float], float]:
    """width(Theta*_s) como função de s segundo o modo escolhido"""
    if params.width_mode == WidthMode.L1_BOUND:
        constant = params.c * params.l1_radius * np.sqrt(_log_p(params.p))
        return lambda s: constant
    if params.width_mode == WidthMode.EUCLIDEAN_BOUND:
        slope = params.c * np.sqrt(params.p)
        return lambda s: slope * s
    cache = {}

    def monte_carlo(s):
        if s not in cache:
            cache[s] = width_monte_carlo(params.set_descriptor(s), params.mc_samples, params.mc_seed).estimate
        return cache[s]
    return monte_carlo


def _eta_R_sq(params: SimplifiedRateParams, R: int) -> float:
    return max(0.0, params.eta ** 2 - params.c * R / params.n)


def _simplified_rhs(params: SimplifiedRateParams, R: int, width: float) -> float:
    n, sigma, v, c = params.n, params.sigma, params.v, params.c
    eta_R_sq = _eta_R_sq(params, R)
    rank_term = _x_one_half(v ** 2 * sigma ** 2 * R * _inverse_sqrt(params.p_eff) ** 2)
    width_term = v ** 2 * sigma ** 2 * width ** 2 / (min(eta_R_sq, eta_R_sq ** 2) * n)
    cross_term = (v * sigma * params.oracle_error * width
                  + v * sigma ** 2 * np.sqrt(n) * _inverse_sqrt(params.p_eff) * width) / (eta_R_sq * n)
    return float(c * (width_term + rank_term / (eta_R_sq * n) + cross_term))


def _bisect_fixed_point(excess: Callable[[float], float]) -> Optional[float]:
    """Menor s em [S_LOWER, S_UPPER] com s^2 >= RHS(s), por bisseção monótona"""
    if excess(S_LOWER) >= 0:
        return S_LOWER
    if excess(S_UPPER) < 0:
        return None
    lower, upper = S_LOWER, S_UPPER
    while upper - lower > S_RTOL * upper:
        middle = 0.5 * (lower + upper)
        if excess(middle) >= 0:
            upper = middle
        else:
            lower = middle
    return upper


def _probability_exponent(v_sigma_sq_width_sq: float, s: float, v: float, R: int, n: int) -> float:
    first = v_sigma_sq_width_sq / s ** 2 if s > 0 else np.inf
    return float(min(first, v ** 2 * R, n))


def _solve_simplified_at_rank(params: SimplifiedRateParams, R: int,
                              width_of: Callable[[float], float]) -> Tuple[Optional[float], Optional[str]]:
    eta_R_sq = _eta_R_sq(params, R)
    if eta_R_sq <= 0:
        return None, "eta_R vanished"
    if params.width_mode == WidthMode.L1_BOUND:
        return float(np.sqrt(_simplified_rhs(params, R, width_of(0.0)))), None
    if params.width_mode == WidthMode.EUCLIDEAN_BOUND:
        # RHS(s) = a s^2 + b s + d
        d = _simplified_rhs(params, R, 0.0)
        at_one = _simplified_rhs(params, R, width_of(1.0))
        a = params.c * params.v ** 2 * params.sigma ** 2 * width_of(1.0) ** 2 / (
            min(eta_R_sq, eta_R_sq ** 2) * params.n)
        b = at_one - a - d
        if a >= 1.0:
            return None, "width term dominates: p too large for eta^2 n / sigma^2"
        s = (b + np.sqrt(b ** 2 + 4.0 * (1.0 - a) * d)) / (2.0 * (1.0 - a))
        return float(s), None
    s = _bisect_fixed_point(lambda s: s ** 2 - _simplified_rhs(params, R, width_of(s)))
    if s is None:
        return None, "no fixed point below the search bound"
    return s, None


def _select_rank(params: SimplifiedRateParams,
                 solve_at: Callable[[int], Tuple[Optional[float], Optional[str]]],
                 required_rank: Callable[[np.ndarray, float], int]):
    """
    Seleção conjunta de (R, s).

    Sem valores singulares usa R = rank. Caso contrário tenta todo R, mantém os
    pares em que R satisfaz a condição de posto aproximado em s(R) e escolhe o
    menor s.
    """
    if params.singular_values is None:
        s, reason = solve_at(int(params.rank))
        return int(params.rank), s, reason
    values = np.asarray(params.singular_values, dtype=float)
    best = (int(params.rank), None, "no valid approximate rank")
    for R in range(values.size + 1):
        s, _ = solve_at(R)
        if s is None:
            continue
        if R >= required_rank(values, s) and (best[1] is None or s < best[1]):
            best = (R, s, None)
    return best


def _constants(params: SimplifiedRateParams, **extra) -> Tuple[Tuple[str, float], ...]:
    items = {"c": params.c, "v": params.v}
    items.update(extra)
    return tuple(sorted(items.items()))


def solve_fixed_point(params: SimplifiedRateParams) -> RateReport:
    """
    Resolve a condição de ponto fixo simplificada.

    s^2 >= c [v^2 sigma^2 w^2 / (min(eta_R^2, eta_R^4) n) + (v^2 sigma^2 R / p_eff)^{1,1/2} / (eta_R^2 n)
              + (v sigma ||A theta_tilde - b|| w + v sigma^2 sqrt(n / p_eff) w) / (eta_R^2 n)]

    com w = width(Theta*_s) e eta_R^2 = max(0, eta^2 - c R / n).

    Args:
        params (SimplifiedRateParams): Parâmetros

    Returns:
        RateReport: Solução (ou solvable=False com o motivo)
    """
    width_of = _width_function(params)
    R, s, reason = _select_rank(
        params,
        lambda R: _solve_simplified_at_rank(params, R, width_of),
        lambda values, s: approximate_rank(values, s, params.v, params.sigma, params.p_eff,
                                           width_of(s), params.c),
    )
    return _report(params, R, s, reason, _eta_R_sq(params, R), width_of,
                   lambda width: params.v ** 2 * params.sigma ** 2 * width ** 2,
                   _constants(params))


def _report(params, R, s, reason, eta_R_sq, width_of, exponent_numerator, constants) -> RateReport:
    metric = params.set_descriptor(0.0).metric if params.width_mode == WidthMode.MONTE_CARLO else "identity"
    if s is None:
        logger.warning(f"Ponto fixo sem solução (R={R}): {reason}")
        return RateReport(
            s_star=None, prediction_bound=None, eta_R_sq=eta_R_sq, R_used=R, solvable=False,
            probability_exponent=None, reason=reason, width_mode=params.width_mode.value,
            metric=metric, sigma_convention=params.sigma_convention, constants=constants,
        )
    width = float(width_of(s))
    return RateReport(
        s_star=float(s),
        prediction_bound=float(params.eta * np.sqrt(params.n) * s),
        eta_R_sq=eta_R_sq,
        R_used=R,
        solvable=True,
        probability_exponent=_probability_exponent(exponent_numerator(width), s, params.v, R, params.n),
        width_mode=params.width_mode.value,
        width_at_s=width,
        metric=metric,
        sigma_convention=params.sigma_convention,
        constants=constants,
    )


def _refined_eta_R_sq(params: RefinedRateParams, R: int) -> float:
    return max(0.0, params.eta ** 2 - params.c * params.K ** 2 * params.phi ** 2 * R / params.n)


def _refined_rhs(params: RefinedRateParams, R: int, W: float) -> float:
    n, K, v, phi, c = params.n, params.K, params.v, params.phi, params.c
    eta_R_sq = _refined_eta_R_sq(params, R)
    p_eff_sigma_inv = _inverse_sqrt(params.effective_p_eff_sigma) ** 2
    first = K ** 4 * v ** 2 * W ** 2 * (1.0 + phi * np.sqrt(R / n)) ** 2 / (eta_R_sq ** 2 * n)
    second = K ** 2 * v ** 2 * W ** 2 / (eta_R_sq * n)
    third = (K * v * params.oracle_error * W
             + K ** 2 * v * np.sqrt(n * p_eff_sigma_inv) * W
             + _x_one_half(K ** 2 * v ** 2 * R * p_eff_sigma_inv)) / (eta_R_sq * n)
    return float(c * (first + second + third))


def _refined_width_function(params: RefinedRateParams, plain_width: Callable[[float], float]):
    """width_Sigma(Theta*_s): fornecida como constante ou derivada da largura simples"""
    if params.width_sigma is not None:
        constant = float(params.width_sigma)
        return lambda s: constant
    if params.width_mode == WidthMode.EUCLIDEAN_BOUND:
        return plain_width
    return lambda s: params.sigma * plain_width(s)


def solve_fixed_point_refined(params: RefinedRateParams) -> RateReport:
    """
    Resolve a condição de ponto fixo refinada por bisseção monótona em s.

    s^2 >= c [K^4 v^2 W^2 (1 + phi sqrt(R/n))^2 / (eta_R^4 n) + K^2 v^2 W^2 / (eta_R^2 n)
              + (K v ||A theta_tilde - b|| W + K^2 v sqrt(n / p_eff,Sigma) W
                 + (K^2 v^2 R / p_eff,Sigma)^{1,1/2}) / (eta_R^2 n)]

    com W = width_Sigma(Theta*_s) e eta_R^2 = max(0, eta^2 - c K^2 phi^2 R / n).
    """
    plain_width = _width_function(params)
    sigma_width = _refined_width_function(params, plain_width)
    p_eff_sigma_inv_sqrt = _inverse_sqrt(params.effective_p_eff_sigma)

    def solve_at(R):
        if _refined_eta_R_sq(params, R) <= 0:
            return None, "eta_R vanished"
        s = _bisect_fixed_point(lambda s: s ** 2 - _refined_rhs(params, R, sigma_width(s)))
        if s is None:
            return None, "no fixed point below the search bound"
        return s, None

    # R >= c sigma_{R+1} width / (phi s + v p_eff,Sigma^{-1/2})
    R, s, reason = _select_rank(
        params,
        solve_at,
        lambda values, s: approximate_rank(values, s, params.v, p_eff_sigma_inv_sqrt, 1.0,
                                           plain_width(s), params.c, phi=params.phi),
    )
    return _report(params, R, s, reason, _refined_eta_R_sq(params, R), sigma_width,
                   lambda W: params.v ** 2 * params.phi ** -4 * W ** 2,
                   _constants(params, K=params.K, phi=params.phi))


def example_l1_params(**overrides) -> SimplifiedRateParams:
    """Exemplo da bola l1: c=1, eta=1, n=100, sigma=1, p=10, p_eff=4, posto 2"""
    values = dict(n=100, p=10, sigma=1.0, p_eff=4.0, rank=2, oracle_error=0.0, eta=1.0,
                  v=1.0, c=1.0, width_mode=WidthMode.L1_BOUND)
    values.update(overrides)
    return SimplifiedRateParams(**values)


def example_euclidean_params(**overrides) -> SimplifiedRateParams:
    """Exemplo euclidiano com p >= eta^2 n / sigma^2 (sem solução)"""
    values = dict(n=100, p=200, sigma=1.0, p_eff=4.0, rank=0, oracle_error=0.0, eta=1.0,
                  v=1.0, c=1.0, width_mode=WidthMode.EUCLIDEAN_BOUND)
    values.update(overrides)
    return SimplifiedRateParams(**values)


def low_noise_params(sigma: float = 1e-3, **overrides) -> SimplifiedRateParams:
    """Regime de ruído baixo: taxa próxima de n^{-1/2}"""
    values = dict(n=400, p=50, sigma=sigma, p_eff=4.0, rank=3, oracle_error=0.0, eta=1.0,
                  v=1.0, c=1.0, width_mode=WidthMode.L1_BOUND)
    values.update(overrides)
    return SimplifiedRateParams(**values)
