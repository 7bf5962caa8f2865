#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Solver de mínimos quadrados com regularização de Tikhonov e restrições convexas
===============================================================================

Minimiza ||theta0 + M theta - t||^2 + coef * (theta - psi)' Sigma (theta - psi)
sobre Theta0 x Theta, onde coef = n(eta^2 - 1) no modo empírico e n eta^2 no
modo oráculo. Theta pode ser o simplex, uma bola l1, o ortante não negativo ou
todo o R^p; o intercepto é uma coluna de uns sem penalidade.

Funcionalidades:
- Projeções euclidianas exatas no simplex e na bola l1
- Gradiente projetado acelerado com reinício monótono
- Certificado de otimalidade pela desigualdade variacional
- Verificação da identidade algébrica do excesso de perda
"""

import os
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from eiv_errors import (
    DimensionError,
    EmptyInputError,
    InfeasiblePointError,
    ParameterError,
    UnboundedProblemError,
)

# Configuração de logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=[
        logging.FileHandler(os.environ.get("EIV_LOG_FILE", "eiv_workbench.log")),
        logging.StreamHandler()
    ]
)
logger = logging.getLogger("EIVSolver")

# Menor autovalor abaixo de -INDEFINITE_TOL * max(1, L) marca a hessiana como indefinida
INDEFINITE_TOL = 1e-10
# Tolerância de viabilidade usada pelo certificado
FEASIBILITY_TOL = 1e-9
# Frequência (em iterações) do teste de convergência
CHECK_EVERY = 10


class ConstraintKind(str, Enum):
    SIMPLEX = "simplex"
    L1_BALL = "l1_ball"
    NONNEGATIVE = "nonnegative_orthant"
    EUCLIDEAN = "euclidean"


class RegularizationMode(str, Enum):
    EMPIRICAL = "empirical"
    ORACLE = "oracle"


class ConvexityCertificate(str, Enum):
    CONVEX = "convex"
    INDEFINITE_DETECTED = "indefinite_detected"


def project_simplex(v, radius: float = 1.0) -> np.ndarray:
    """
    Projeção euclidiana em {w >= 0, sum(w) = radius} por ordenação.

    Args:
        v: Vetor a projetar
        radius (float): Soma dos pesos (1 para o simplex padrão)

    Returns:
        np.ndarray: Projeção de v
    """
    v = np.asarray(v, dtype=float).ravel()
    if v.size == 0:
        raise EmptyInputError("Não é possível projetar um vetor vazio")
    if radius <= 0:
        raise ParameterError(f"O raio do simplex deve ser positivo, recebido {radius}")
    ordered = np.sort(v)[::-1]
    thresholds = (np.cumsum(ordered) - radius) / np.arange(1, v.size + 1)
    active = np.nonzero(ordered - thresholds > 0)[0][-1]
    return np.maximum(v - thresholds[active], 0.0)


def project_l1_ball(v, radius: float) -> np.ndarray:
    """Projeção euclidiana em {||w||_1 <= radius}; pontos viáveis voltam inalterados"""
    v = np.asarray(v, dtype=float).ravel()
    if radius <= 0:
        raise ParameterError(f"O raio da bola l1 deve ser positivo, recebido {radius}")
    if v.size == 0:
        raise EmptyInputError("Não é possível projetar um vetor vazio")
    if np.sum(np.abs(v)) <= radius:
        return v.copy()
    return np.sign(v) * project_simplex(np.abs(v), radius)


@dataclass(frozen=True)
class ConstraintSet:
    """Conjunto de restrição Theta para os pesos"""

    kind: ConstraintKind
    radius: float = 1.0
    dimension: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ConstraintKind(self.kind))
        object.__setattr__(self, "radius", float(self.radius))
        if self.kind == ConstraintKind.L1_BALL and self.radius <= 0:
            raise ParameterError(f"O raio da bola l1 deve ser positivo, recebido {self.radius}")

    @classmethod
    def parse(cls, text: str) -> "ConstraintSet":
        """
        Lê a notação da linha de comando: simplex, l1:RAIO, nonneg ou euclidean.
        """
        text = str(text).strip().lower()
        if text == "simplex":
            return cls(ConstraintKind.SIMPLEX)
        if text in ("nonneg", "nonnegative", "nonnegative_orthant"):
            return cls(ConstraintKind.NONNEGATIVE)
        if text == "euclidean":
            return cls(ConstraintKind.EUCLIDEAN)
        if text.startswith("l1"):
            _, _, radius = text.partition(":")
            try:
                return cls(ConstraintKind.L1_BALL, float(radius) if radius else 1.0)
            except ValueError:
                raise ParameterError(f"Raio inválido na restrição: {text}")
        raise ParameterError(f"Restrição desconhecida: {text}")

    @property
    def label(self) -> str:
        if self.kind == ConstraintKind.L1_BALL:
            return f"l1:{self.radius:g}"
        if self.kind == ConstraintKind.NONNEGATIVE:
            return "nonneg"
        return self.kind.value

    @property
    def is_compact(self) -> bool:
        return self.kind in (ConstraintKind.SIMPLEX, ConstraintKind.L1_BALL)

    def project(self, v) -> np.ndarray:
        if self.kind == ConstraintKind.SIMPLEX:
            return project_simplex(v)
        if self.kind == ConstraintKind.L1_BALL:
            return project_l1_ball(v, self.radius)
        v = np.asarray(v, dtype=float).ravel()
        if self.kind == ConstraintKind.NONNEGATIVE:
            return np.maximum(v, 0.0)
        return v.copy()

    def contains(self, v, tol: float = FEASIBILITY_TOL) -> bool:
        v = np.asarray(v, dtype=float).ravel()
        if not np.all(np.isfinite(v)):
            return False
        if self.kind == ConstraintKind.SIMPLEX:
            return bool(np.all(v >= -tol) and abs(v.sum() - 1.0) <= tol)
        if self.kind == ConstraintKind.L1_BALL:
            return bool(np.sum(np.abs(v)) <= self.radius * (1.0 + tol))
        if self.kind == ConstraintKind.NONNEGATIVE:
            return bool(np.all(v >= -tol))
        return True

    def vertices(self, p: int) -> np.ndarray:
        """Vértices do conjunto compacto (linhas)"""
        if self.kind == ConstraintKind.SIMPLEX:
            return np.eye(p)
        if self.kind == ConstraintKind.L1_BALL:
            return np.vstack([self.radius * np.eye(p), -self.radius * np.eye(p)])
        raise ParameterError(f"O conjunto {self.label} não tem vértices")

    def linear_max(self, g) -> float:
        """max_{w em Theta} g'w para conjuntos compactos"""
        g = np.asarray(g, dtype=float)
        if self.kind == ConstraintKind.SIMPLEX:
            return float(np.max(g))
        if self.kind == ConstraintKind.L1_BALL:
            return float(self.radius * np.max(np.abs(g)))
        raise ParameterError(f"Maximização linear ilimitada em {self.label}")


@dataclass(frozen=True)
class ProblemSpec:
    """Problema de Tikhonov: design M, alvo t, Sigma, psi, eta, modo, intercepto e Theta"""

    design: np.ndarray
    target: np.ndarray
    sigma_row: np.ndarray
    psi: np.ndarray
    eta: float
    mode: RegularizationMode = RegularizationMode.EMPIRICAL
    intercept: bool = False
    constraint: ConstraintSet = field(default_factory=lambda: ConstraintSet(ConstraintKind.SIMPLEX))

    def __post_init__(self):
        design = np.asarray(self.design, dtype=float)
        target = np.asarray(self.target, dtype=float)
        sigma_row = np.asarray(self.sigma_row, dtype=float)
        psi = np.asarray(self.psi, dtype=float)
        if design.ndim != 2 or target.ndim != 1:
            raise DimensionError("design deve ser matriz e target vetor")
        n, p = design.shape
        if target.shape[0] != n:
            raise DimensionError(f"target tem comprimento {target.shape[0]}, esperado {n}")
        if sigma_row.shape != (p, p):
            raise DimensionError(f"sigma_row deve ser {p}x{p}, recebido {sigma_row.shape}")
        if psi.shape != (p,):
            raise DimensionError(f"psi deve ter comprimento {p}")
        if p == 0:
            raise EmptyInputError("O problema precisa de pelo menos uma unidade de controle")
        if self.constraint.dimension is not None and self.constraint.dimension != p:
            raise DimensionError(f"Restrição em dimensão {self.constraint.dimension}, design com p={p}")
        if not (np.all(np.isfinite(design)) and np.all(np.isfinite(target))):
            raise ParameterError("design e target devem ser finitos")
        if not np.isfinite(self.eta) or self.eta < 0:
            raise ParameterError(f"eta deve ser finito e >= 0, recebido {self.eta}")
        for name, value in (("design", design), ("target", target), ("sigma_row", sigma_row), ("psi", psi)):
            value = value.copy()
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        object.__setattr__(self, "eta", float(self.eta))
        object.__setattr__(self, "mode", RegularizationMode(self.mode))
        object.__setattr__(self, "intercept", bool(self.intercept))

    @property
    def n(self) -> int:
        return self.design.shape[0]

    @property
    def p(self) -> int:
        return self.design.shape[1]

    @property
    def penalty_coefficient(self) -> float:
        if self.mode == RegularizationMode.ORACLE:
            return self.n * self.eta ** 2
        return self.n * (self.eta ** 2 - 1.0)


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-8
    max_iter: int = 100000
    polish_max_dim: int = 20

    def __post_init__(self):
        if self.tol <= 0:
            raise ParameterError("tol deve ser positivo")
        if int(self.max_iter) < 1:
            raise ParameterError("max_iter deve ser pelo menos 1")


@dataclass(frozen=True)
class FitResult:
    """Pesos estimados (theta0, theta) com diagnósticos do solver"""

    theta0: float
    theta: np.ndarray
    loss: float
    optimality_residual: float
    iterations: int
    converged: bool
    convexity_certificate: ConvexityCertificate = ConvexityCertificate.CONVEX
    loss_trace: Tuple[float, ...] = ()

    def to_dict(self) -> dict:
        return {
            "theta0": self.theta0,
            "theta": [float(v) for v in self.theta],
            "loss": self.loss,
            "optimality_residual": self.optimality_residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "convexity_certificate": ConvexityCertificate(self.convexity_certificate).value,
        }


class _Quadratic:
    """Forma quadrática aumentada z'Qz - 2c'z + const, com z = (theta0, theta) ou theta"""

    def __init__(self, problem: ProblemSpec):
        coefficient = problem.penalty_coefficient
        design, sigma, psi = problem.design, problem.sigma_row, problem.psi
        if problem.intercept:
            design = np.column_stack([np.ones(problem.n), design])
            sigma = np.pad(sigma, ((1, 0), (1, 0)))
            psi = np.concatenate([[0.0], psi])
        self.problem = problem
        self.offset = 1 if problem.intercept else 0
        self.Q = design.T @ design + coefficient * sigma
        self.c = design.T @ problem.target + coefficient * (sigma @ psi)
        self.const = float(problem.target @ problem.target + coefficient * (psi @ sigma @ psi))

    def split(self, z: np.ndarray) -> Tuple[float, np.ndarray]:
        if self.offset:
            return float(z[0]), z[1:]
        return 0.0, z

    def join(self, theta0: float, theta: np.ndarray) -> np.ndarray:
        if self.offset:
            return np.concatenate([[theta0], theta])
        return np.asarray(theta, dtype=float)

    def loss(self, z: np.ndarray) -> float:
        return float(z @ (self.Q @ z) - 2.0 * (self.c @ z) + self.const)

    def gradient(self, z: np.ndarray) -> np.ndarray:
        return 2.0 * (self.Q @ z - self.c)

    def project(self, z: np.ndarray) -> np.ndarray:
        theta0, theta = self.split(z)
        return self.join(theta0, self.problem.constraint.project(theta))


def problem_loss(problem: ProblemSpec, theta0: float, theta) -> float:
    """Perda regularizada avaliada diretamente"""
    theta = np.asarray(theta, dtype=float)
    residual = theta0 + problem.design @ theta - problem.target
    deviation = theta - problem.psi
    return float(residual @ residual + problem.penalty_coefficient * (deviation @ problem.sigma_row @ deviation))


def _gap(quadratic: _Quadratic, z: np.ndarray) -> float:
    problem = quadratic.problem
    gradient = quadratic.gradient(z)
    g0, g = quadratic.split(gradient)
    _, theta = quadratic.split(z)
    kind = problem.constraint.kind
    if kind in (ConstraintKind.SIMPLEX, ConstraintKind.L1_BALL):
        gap = max(float(g @ theta) + problem.constraint.linear_max(-g), 0.0)
    else:
        gap = float(np.linalg.norm(theta - problem.constraint.project(theta - g)))
    return gap + abs(g0)


def variational_gap(problem: ProblemSpec, theta0: float, theta) -> float:
    """
    max_{w em Theta0 x Theta} -g'(w - z) truncado em 0, com g o gradiente em z.

    Exato nos conjuntos compactos (vértices); para o ortante e o R^p usa a norma
    do gradiente mapeado. Zero certifica a condição de primeira ordem.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (problem.p,):
        raise DimensionError(f"theta deve ter comprimento {problem.p}")
    if not problem.constraint.contains(theta):
        raise InfeasiblePointError(f"theta fora do conjunto {problem.constraint.label}")
    if not problem.intercept and theta0 != 0:
        raise InfeasiblePointError("theta0 deve ser 0 sem intercepto")
    quadratic = _Quadratic(problem)
    return _gap(quadratic, quadratic.join(theta0, theta))


def optimality_residual(fit: FitResult, problem: ProblemSpec) -> float:
    """Resíduo de otimalidade do ajuste (0 certifica a desigualdade variacional)"""
    return variational_gap(problem, fit.theta0, fit.theta)


class AcceleratedProjectedGradient:
    """
    Gradiente projetado acelerado (FISTA) com reinício monótono.

    O passo é 1/L com L o raio espectral exato da hessiana. Quando a iteração
    acelerada aumentaria a perda, o momento é descartado e um passo de
    gradiente projetado simples é dado a partir do melhor ponto, de modo que a
    sequência de perdas registrada é não crescente.
    """

    def __init__(self, options: Optional[SolverOptions] = None):
        self.options = options or SolverOptions()

    def solve(self, problem: ProblemSpec) -> FitResult:
        quadratic = _Quadratic(problem)
        eigenvalues = np.linalg.eigvalsh(2.0 * quadratic.Q)
        lipschitz = float(np.max(np.abs(eigenvalues)))
        indefinite = bool(eigenvalues[0] < -INDEFINITE_TOL * max(1.0, lipschitz))

        if indefinite and not problem.constraint.is_compact:
            logger.error(f"Hessiana indefinida (menor autovalor {eigenvalues[0]:.3e}) em {problem.constraint.label}")
            raise UnboundedProblemError(
                f"Perda ilimitada inferiormente: hessiana indefinida em conjunto {problem.constraint.label}",
                min_eigenvalue=float(eigenvalues[0]),
            )
        if indefinite:
            logger.warning(f"Hessiana indefinida (eta={problem.eta}); otimalidade global não garantida")
        if lipschitz <= 0:
            lipschitz = 1.0

        z0 = quadratic.project(np.zeros(problem.p + quadratic.offset))
        z, trace, iterations, converged = self._iterate(quadratic, z0, lipschitz, self.options.max_iter)

        if indefinite and problem.p <= self.options.polish_max_dim:
            vertex = self._best_vertex(quadratic)
            if vertex is not None and quadratic.loss(vertex) < trace[-1]:
                logger.info("Polimento por vértices encontrou perda menor; reiniciando do vértice")
                remaining = max(self.options.max_iter - iterations, 1)
                z_v, trace_v, iterations_v, converged_v = self._iterate(quadratic, vertex, lipschitz, remaining)
                if trace_v[-1] < trace[-1]:
                    z, converged = z_v, converged_v
                    trace = trace + trace_v
                    iterations += iterations_v

        theta0, theta = quadratic.split(z)
        loss = problem_loss(problem, theta0, theta)
        residual = _gap(quadratic, z)
        converged = converged or residual <= self.options.tol * (1.0 + abs(loss))
        if not converged:
            logger.warning(
                f"Solver não convergiu em {iterations} iterações (resíduo {residual:.3e})"
            )
        return FitResult(
            theta0=theta0,
            theta=theta,
            loss=loss,
            optimality_residual=residual,
            iterations=iterations,
            converged=converged,
            convexity_certificate=(ConvexityCertificate.INDEFINITE_DETECTED if indefinite
                                   else ConvexityCertificate.CONVEX),
            loss_trace=tuple(trace),
        )

    def _iterate(self, quadratic: _Quadratic, z0: np.ndarray, lipschitz: float, max_iter: int):
        tol = self.options.tol
        z = z0
        loss_z = quadratic.loss(z)
        trace = [loss_z]
        y, t = z.copy(), 1.0
        for k in range(1, max_iter + 1):
            z_new = quadratic.project(y - quadratic.gradient(y) / lipschitz)
            loss_new = quadratic.loss(z_new)
            if loss_new > loss_z:
                # reinício: passo simples a partir do melhor ponto
                z_new = quadratic.project(z - quadratic.gradient(z) / lipschitz)
                loss_new = quadratic.loss(z_new)
                if loss_new > loss_z:
                    z_new, loss_new = z, loss_z
                y, t = z_new.copy(), 1.0
            else:
                t_new = (1.0 + np.sqrt(1.0 + 4.0 * t * t)) / 2.0
                y = z_new + ((t - 1.0) / t_new) * (z_new - z)
                t = t_new
            z, loss_z = z_new, loss_new
            trace.append(loss_z)
            if k % CHECK_EVERY == 0 or k == max_iter:
                if _gap(quadratic, z) <= tol * (1.0 + abs(loss_z)):
                    logger.debug(f"Convergência em {k} iterações")
                    return z, trace, k, True
        return z, trace, max_iter, False

    def _best_vertex(self, quadratic: _Quadratic) -> Optional[np.ndarray]:
        problem = quadratic.problem
        best, best_loss = None, np.inf
        for vertex in problem.constraint.vertices(problem.p):
            theta0 = float(np.mean(problem.target - problem.design @ vertex)) if problem.intercept else 0.0
            candidate = quadratic.join(theta0, vertex)
            loss = quadratic.loss(candidate)
            if loss < best_loss:
                best, best_loss = candidate, loss
        return best


def solve(problem: ProblemSpec, options: Optional[SolverOptions] = None) -> FitResult:
    """
    Minimiza a perda regularizada de `problem`.

    Args:
        problem (ProblemSpec): Problema a resolver
        options (SolverOptions, optional): Tolerância e limite de iterações

    Returns:
        FitResult: Minimizador com resíduo de otimalidade e traço da perda
    """
    return AcceleratedProjectedGradient(options).solve(problem)


def solve_constrained_tikhonov(X, y, sigma_row, psi, eta: float, constraint: ConstraintSet,
                               intercept: bool = False, options: Optional[SolverOptions] = None) -> FitResult:
    """Estimador empírico: penalidade n(eta^2 - 1) sobre os dados observados"""
    problem = ProblemSpec(X, y, sigma_row, psi, eta, RegularizationMode.EMPIRICAL, intercept, constraint)
    return solve(problem, options)


def solve_oracle(A, b, sigma_row, psi, eta: float, constraint: ConstraintSet,
                 intercept: bool = False, options: Optional[SolverOptions] = None) -> FitResult:
    """Pesos oráculo: minimizador da perda esperada, penalidade n eta^2 sobre o sinal"""
    problem = ProblemSpec(A, b, sigma_row, psi, eta, RegularizationMode.ORACLE, intercept, constraint)
    return solve(problem, options)


def excess_loss_identity_check(problem: ProblemSpec, theta_tilde, delta, eps, nu) -> Tuple[float, float]:
    """
    Compara l(theta_tilde + delta) - l(theta_tilde) com a sua expansão em termos de sinal e ruído.

    Args:
        problem (ProblemSpec): Problema empírico sem intercepto (design X, alvo y)
        theta_tilde: Ponto de referência
        delta: Desvio
        eps: Ruído das covariáveis, X - A
        nu: Ruído do alvo, y - b

    Returns:
        tuple: (lhs, rhs), iguais a menos de arredondamento
    """
    if problem.mode != RegularizationMode.EMPIRICAL:
        raise ParameterError("A identidade vale para o modo empírico")
    if problem.intercept:
        raise ParameterError("A identidade vale sem intercepto")
    theta_tilde = np.asarray(theta_tilde, dtype=float)
    delta = np.asarray(delta, dtype=float)
    eps = np.asarray(eps, dtype=float)
    nu = np.asarray(nu, dtype=float)
    n, p = problem.n, problem.p
    if theta_tilde.shape != (p,) or delta.shape != (p,):
        raise DimensionError(f"theta_tilde e delta devem ter comprimento {p}")
    if eps.shape != (n, p) or nu.shape != (n,):
        raise DimensionError("eps deve ser n x p e nu de comprimento n")

    lhs = problem_loss(problem, 0.0, theta_tilde + delta) - problem_loss(problem, 0.0, theta_tilde)

    X, Sigma, psi, eta = problem.design, problem.sigma_row, problem.psi, problem.eta
    A = X - eps
    b = problem.target - nu
    signal_residual = A @ theta_tilde - b
    A_delta = A @ delta
    eps_delta = eps @ delta
    X_delta = X @ delta
    centered = theta_tilde - psi

    rhs = (
        X_delta @ X_delta
        + n * (eta ** 2 - 1.0) * (delta @ Sigma @ delta)
        + 2.0 * (signal_residual @ A_delta + n * eta ** 2 * (centered @ Sigma @ delta))
        + 2.0 * ((eps @ theta_tilde - nu) @ A_delta)
        + 2.0 * (signal_residual @ eps_delta)
        + 2.0 * ((eps @ psi - nu) @ eps_delta)
        + 2.0 * (centered @ ((eps.T @ eps - n * Sigma) @ delta))
    )
    return float(lhs), float(rhs)
