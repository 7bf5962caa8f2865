#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Modelo de dados de painel para o workbench de controle sintético
================================================================

Este módulo define as observações de painel, a verdade de simulação e a
especificação do ruído, além dos geradores sintéticos e da leitura de painéis
reais em CSV.

Funcionalidades:
- Painel observado (X, y, x_e, y_e) com séries tratadas desagregadas opcionais
- Verdade de simulação (A, b, a_e, b_e, tau) e especificação do ruído
- Geração de sinal de posto baixo com valores singulares exatos
- Geração de painéis com ruído gaussiano ou mistura de Rademacher escalada
- Leitura e escrita de painéis em CSV
- Estimativa aproximada da especificação do ruído
"""

import os
import re
import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from eiv_errors import (
    DecompositionError,
    DimensionError,
    EmptyInputError,
    ParameterError,
    PanelFormatError,
    PrerequisiteError,
)
from eiv_random import make_rng

# Configuração de logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=[
        logging.FileHandler(os.environ.get("EIV_LOG_FILE", "eiv_workbench.log")),
        logging.StreamHandler()
    ]
)
logger = logging.getLogger("EIVPanelData")

# Tolerância relativa para o agregado das séries tratadas
AGGREGATE_RTOL = 1e-12
# Autovalores em [-PSD_CLAMP, 0) são tratados como zero
PSD_CLAMP = 1e-12
# Escala da mistura de Rademacher: sqrt(1 + MIXTURE_SPREAD * r) * g
MIXTURE_SPREAD = 0.5


class Orientation(str, Enum):
    """Enquadramento do estimador: controle sintético ou previsão contrafactual"""
    COLUMNS_ARE_UNITS = "columns_are_units"
    ROWS_ARE_UNITS = "rows_are_units"


class IndependenceAxis(str, Enum):
    ROWS = "rows"
    COLUMNS = "columns"


class NoiseDistribution(str, Enum):
    GAUSSIAN = "gaussian"
    SCALED_RADEMACHER_MIXTURE = "scaled_rademacher_mixture"


class FactorStyle(str, Enum):
    RANDOM_ORTHONORMAL = "random_orthonormal"
    COMMON_TRENDS = "common_trends"


class PostPeriodStyle(str, Enum):
    """Como a média pós-tratamento dos controles a_e se relaciona com as linhas de A"""
    TYPICAL_ROW = "typical_row"
    TOP_SINGULAR_ALIGNED = "top_singular_aligned"
    ORTHOGONAL_TO_ROWSPACE = "orthogonal_to_rowspace"


class NoiseEstimationMethod(str, Enum):
    KNOWN = "known"
    RESIDUAL_PLUGIN = "residual_plugin"


def _readonly(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float, copy=True)
    array.setflags(write=False)
    return array


def _as_matrix(value, name: str) -> np.ndarray:
    matrix = np.asarray(value, dtype=float)
    if matrix.ndim != 2:
        raise DimensionError(f"{name} deve ser uma matriz, recebido ndim={matrix.ndim}")
    return matrix


def _as_vector(value, name: str) -> np.ndarray:
    vector = np.asarray(value, dtype=float)
    if vector.ndim != 1:
        raise DimensionError(f"{name} deve ser um vetor, recebido ndim={vector.ndim}")
    return vector


def _check_symmetric(matrix: np.ndarray, name: str) -> None:
    scale = max(1.0, float(np.max(np.abs(matrix)))) if matrix.size else 1.0
    if not np.allclose(matrix, matrix.T, rtol=0.0, atol=1e-10 * scale):
        raise DecompositionError(f"{name} não é simétrica")


def psd_sqrt(matrix) -> np.ndarray:
    """
    Raiz quadrada simétrica de uma matriz semidefinida positiva.

    Autovalores negativos dentro da tolerância numérica são zerados; valores
    abaixo disso indicam uma matriz indefinida.

    Args:
        matrix: Matriz simétrica semidefinida positiva

    Returns:
        np.ndarray: Matriz S com S @ S = matrix
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.size == 0:
        return matrix.copy()
    _check_symmetric(matrix, "covariância")
    eigenvalues, eigenvectors = np.linalg.eigh((matrix + matrix.T) / 2.0)
    tolerance = PSD_CLAMP * max(1.0, float(np.max(np.abs(eigenvalues))))
    if np.any(eigenvalues < -tolerance):
        raise DecompositionError(
            f"Covariância não é semidefinida positiva (menor autovalor {eigenvalues.min():.3e})"
        )
    eigenvalues = np.clip(eigenvalues, 0.0, None)
    return (eigenvectors * np.sqrt(eigenvalues)) @ eigenvectors.T


def aggregate_treated(series) -> Tuple[np.ndarray, float]:
    """
    Agrega as séries tratadas desagregadas pela média aritmética por linha.

    Args:
        series: Matriz (n+1) x p_e com uma série por coluna

    Returns:
        tuple: (y, y_e) com y de comprimento n e y_e o agregado da última linha
    """
    series = np.asarray(series, dtype=float)
    if series.ndim != 2:
        raise DimensionError("As séries tratadas devem formar uma matriz (n+1) x p_e")
    if series.shape[1] == 0:
        raise EmptyInputError("Nenhuma série tratada para agregar (p_e = 0)")
    if series.shape[0] < 2:
        raise DimensionError("As séries tratadas precisam de pelo menos 2 períodos")
    means = series.mean(axis=1)
    return means[:-1].copy(), float(means[-1])


@dataclass(frozen=True)
class PanelObservation:
    """
    Painel observado: X (n x p) e y (n) pré-tratamento, x_e (p) e y_e pós-tratamento.

    As matrizes são sempre armazenadas com linhas = períodos e colunas = unidades;
    `orientation` escolhe o enquadramento do estimador.
    """

    X: np.ndarray
    y: np.ndarray
    x_e: np.ndarray
    y_e: float
    treated_series: Optional[np.ndarray] = None
    orientation: Orientation = Orientation.COLUMNS_ARE_UNITS

    def __post_init__(self):
        X = _as_matrix(self.X, "X")
        y = _as_vector(self.y, "y")
        x_e = _as_vector(self.x_e, "x_e")
        if X.shape[0] != y.shape[0]:
            raise DimensionError(f"X tem {X.shape[0]} linhas mas y tem comprimento {y.shape[0]}")
        if X.shape[1] != x_e.shape[0]:
            raise DimensionError(f"X tem {X.shape[1]} colunas mas x_e tem comprimento {x_e.shape[0]}")
        y_e = float(self.y_e)

        if self.treated_series is not None:
            series = _as_matrix(self.treated_series, "treated_series")
            if series.shape[1] < 1:
                raise EmptyInputError("treated_series precisa de pelo menos uma coluna (p_e >= 1)")
            if series.shape[0] != X.shape[0] + 1:
                raise DimensionError(
                    f"treated_series tem {series.shape[0]} linhas, esperado {X.shape[0] + 1}"
                )
            agg_y, agg_y_e = aggregate_treated(series)
            scale = max(1.0, float(np.max(np.abs(series))))
            if (np.max(np.abs(agg_y - y), initial=0.0) > AGGREGATE_RTOL * scale
                    or abs(agg_y_e - y_e) > AGGREGATE_RTOL * scale):
                raise DimensionError("A média das séries tratadas não reproduz (y, y_e)")
            object.__setattr__(self, "treated_series", _readonly(series))

        object.__setattr__(self, "X", _readonly(X))
        object.__setattr__(self, "y", _readonly(y))
        object.__setattr__(self, "x_e", _readonly(x_e))
        object.__setattr__(self, "y_e", y_e)
        object.__setattr__(self, "orientation", Orientation(self.orientation))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def p_e(self) -> Optional[int]:
        return None if self.treated_series is None else self.treated_series.shape[1]

    def full_matrix(self) -> np.ndarray:
        """Matriz (n+1) x (p+1) [[X, y], [x_e', y_e]]"""
        top = np.column_stack([self.X, self.y])
        bottom = np.append(self.x_e, self.y_e)
        return np.vstack([top, bottom])

    def regression_view(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float]:
        """
        Retorna (design, target, x_post, y_post) no enquadramento do estimador.

        Controle sintético usa (X, y, x_e, y_e); previsão contrafactual transpõe
        os papéis e usa (X', x_e, y, y_e).
        """
        if self.orientation == Orientation.ROWS_ARE_UNITS:
            return self.X.T, self.x_e, self.y, self.y_e
        return self.X, self.y, self.x_e, self.y_e

    def with_orientation(self, orientation) -> "PanelObservation":
        return replace(self, orientation=Orientation(orientation))


@dataclass(frozen=True)
class NoiseSpec:
    """
    Especificação do ruído [eps, nu; eps_e, nu_e].

    sigma_row = n^-1 E eps'eps (p x p), sigma_col = p^-1 E eps eps' (n x n),
    sigma_nu = E nu nu' (n x n), psi prediz nu a partir das linhas de eps,
    psi_col (comprimento n) prediz eps_e a partir das colunas de eps.
    """

    independence_axis: IndependenceAxis
    sigma_row: np.ndarray
    sigma_col: np.ndarray
    sigma_nu: np.ndarray
    psi: np.ndarray
    psi_col: np.ndarray
    sigma_e: float
    p_e: int = 1
    distribution: NoiseDistribution = NoiseDistribution.GAUSSIAN

    def __post_init__(self):
        sigma_row = _as_matrix(self.sigma_row, "sigma_row")
        sigma_col = _as_matrix(self.sigma_col, "sigma_col")
        sigma_nu = _as_matrix(self.sigma_nu, "sigma_nu")
        psi = _as_vector(self.psi, "psi")
        psi_col = _as_vector(self.psi_col, "psi_col")
        p, n = sigma_row.shape[0], sigma_col.shape[0]
        if sigma_row.shape != (p, p) or sigma_col.shape != (n, n) or sigma_nu.shape != (n, n):
            raise DimensionError("Covariâncias com dimensões inconsistentes")
        if psi.shape[0] != p:
            raise DimensionError(f"psi deve ter comprimento p={p}")
        if psi_col.shape[0] != n:
            raise DimensionError(f"psi_col deve ter comprimento n={n}")
        for name, matrix in (("sigma_row", sigma_row), ("sigma_col", sigma_col), ("sigma_nu", sigma_nu)):
            _check_symmetric(matrix, name)
        if float(self.sigma_e) < 0:
            raise ParameterError("sigma_e deve ser não negativo")
        if int(self.p_e) < 1 or int(self.p_e) != self.p_e:
            raise ParameterError("p_e deve ser um inteiro positivo")

        object.__setattr__(self, "independence_axis", IndependenceAxis(self.independence_axis))
        object.__setattr__(self, "distribution", NoiseDistribution(self.distribution))
        object.__setattr__(self, "sigma_row", _readonly(sigma_row))
        object.__setattr__(self, "sigma_col", _readonly(sigma_col))
        object.__setattr__(self, "sigma_nu", _readonly(sigma_nu))
        object.__setattr__(self, "psi", _readonly(psi))
        object.__setattr__(self, "psi_col", _readonly(psi_col))
        object.__setattr__(self, "sigma_e", float(self.sigma_e))
        object.__setattr__(self, "p_e", int(self.p_e))

    @classmethod
    def isotropic(cls, n: int, p: int, sigma: float, p_e: int = 1, sigma_e: Optional[float] = None,
                  independence_axis=IndependenceAxis.COLUMNS,
                  distribution=NoiseDistribution.GAUSSIAN) -> "NoiseSpec":
        """
        Ruído iid com variância sigma^2 por elemento.

        Args:
            n (int): Períodos pré-tratamento
            p (int): Unidades de controle
            sigma (float): Desvio padrão de um elemento de eps
            p_e (int): Número de séries tratadas agregadas
            sigma_e (float, optional): Desvio padrão de eps_e (padrão: sigma)

        Returns:
            NoiseSpec: Especificação isotrópica
        """
        variance = float(sigma) ** 2
        return cls(
            independence_axis=independence_axis,
            sigma_row=variance * np.eye(p),
            sigma_col=variance * np.eye(n),
            sigma_nu=(variance / p_e) * np.eye(n),
            psi=np.zeros(p),
            psi_col=np.zeros(n),
            sigma_e=float(sigma) if sigma_e is None else float(sigma_e),
            p_e=p_e,
            distribution=distribution,
        )

    def with_post_autocorrelation(self, rho: float) -> "NoiseSpec":
        """Ruído pós-tratamento previsto pelo último período pré-tratamento: psi_col = rho * e_n"""
        psi_col = np.zeros(self.n)
        if self.n:
            psi_col[-1] = rho
        spec = replace(self, psi_col=psi_col)
        if spec.post_residual_variance < -PSD_CLAMP * max(1.0, self.sigma_e ** 2):
            raise DecompositionError("rho grande demais para sigma_e: variância residual negativa")
        return spec

    @property
    def n(self) -> int:
        return self.sigma_col.shape[0]

    @property
    def p(self) -> int:
        return self.sigma_row.shape[0]

    @property
    def sigma_sq_row(self) -> float:
        """||Sigma_{eps_i.}|| (norma de operador)"""
        return float(np.linalg.norm(self.sigma_row, 2)) if self.p else 0.0

    @property
    def sigma_sq_col(self) -> float:
        """||Sigma_{eps_.j}|| (norma de operador)"""
        return float(np.linalg.norm(self.sigma_col, 2)) if self.n else 0.0

    @property
    def post_residual_variance(self) -> float:
        return self.sigma_e ** 2 - float(self.psi_col @ self.sigma_col @ self.psi_col)

    @property
    def post_residual_sd(self) -> float:
        """||eps_ej - psi_col' eps_.j||_{L2}"""
        return float(np.sqrt(max(self.post_residual_variance, 0.0)))

    @property
    def psi_col_term(self) -> float:
        """||psi_col' Sigma_{eps_.j}^{1/2}||"""
        return float(np.sqrt(max(float(self.psi_col @ self.sigma_col @ self.psi_col), 0.0)))

    def iid_columns_row_covariance(self) -> np.ndarray:
        """Sigma_{eps_i.} implícita por colunas iid: n^-1 trace(Sigma_{eps_.j}) I"""
        return (np.trace(self.sigma_col) / max(self.n, 1)) * np.eye(self.p)


@dataclass(frozen=True)
class SignalSpec:
    """Especificação do componente sistemático de posto baixo"""

    rank: int
    singular_values: Tuple[float, ...] = ()
    factor_style: FactorStyle = FactorStyle.RANDOM_ORTHONORMAL
    a_e_style: PostPeriodStyle = PostPeriodStyle.TYPICAL_ROW
    misspecification: float = 0.0

    def __post_init__(self):
        values = tuple(float(v) for v in self.singular_values)
        if int(self.rank) < 0:
            raise ParameterError("rank deve ser não negativo")
        if len(values) != int(self.rank):
            raise ParameterError(
                f"singular_values tem {len(values)} entradas, esperado rank={self.rank}"
            )
        if any(v < 0 for v in values):
            raise ParameterError("singular_values devem ser não negativos")
        if any(a < b for a, b in zip(values, values[1:])):
            raise ParameterError("singular_values devem ser não crescentes")
        object.__setattr__(self, "rank", int(self.rank))
        object.__setattr__(self, "singular_values", values)
        object.__setattr__(self, "factor_style", FactorStyle(self.factor_style))
        object.__setattr__(self, "a_e_style", PostPeriodStyle(self.a_e_style))
        object.__setattr__(self, "misspecification", float(self.misspecification))


@dataclass(frozen=True)
class GroundTruth:
    """Verdade de simulação: componente sistemático, efeito tau e ruído"""

    A: np.ndarray
    b: np.ndarray
    a_e: np.ndarray
    b_e: float
    tau: float
    noise: NoiseSpec
    theta_star: Optional[np.ndarray] = None

    def __post_init__(self):
        A = _as_matrix(self.A, "A")
        b = _as_vector(self.b, "b")
        a_e = _as_vector(self.a_e, "a_e")
        n, p = A.shape
        if b.shape[0] != n or a_e.shape[0] != p:
            raise DimensionError("A, b e a_e com dimensões inconsistentes")
        if self.noise.n != n or self.noise.p != p:
            raise DimensionError(
                f"NoiseSpec é {self.noise.n}x{self.noise.p} mas o sinal é {n}x{p}"
            )
        object.__setattr__(self, "A", _readonly(A))
        object.__setattr__(self, "b", _readonly(b))
        object.__setattr__(self, "a_e", _readonly(a_e))
        object.__setattr__(self, "b_e", float(self.b_e))
        object.__setattr__(self, "tau", float(self.tau))
        if self.theta_star is not None:
            object.__setattr__(self, "theta_star", _readonly(_as_vector(self.theta_star, "theta_star")))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def p(self) -> int:
        return self.A.shape[1]


def _left_factors(style: FactorStyle, n: int, rank: int, rng: np.random.Generator) -> np.ndarray:
    """Fatores temporais (n+1) x rank, incluindo o período pós-tratamento"""
    if style == FactorStyle.COMMON_TRENDS:
        t = np.arange(n + 1) / float(n + 1)
        columns = [t - 0.5]
        harmonic = 1
        while len(columns) < rank:
            columns.append(np.sin(2 * np.pi * harmonic * t))
            if len(columns) < rank:
                columns.append(np.cos(2 * np.pi * harmonic * t))
            harmonic += 1
        trends = np.column_stack(columns[:rank])
        # tendências ficam linearmente independentes mesmo com n pequeno
        return trends + 0.05 * rng.standard_normal((n + 1, rank))
    return rng.standard_normal((n + 1, rank))


def _generate_signal(spec: SignalSpec, n: int, p: int, seed: int):
    if spec.rank > min(n, p):
        raise DimensionError(f"rank={spec.rank} excede min(n, p)={min(n, p)}")
    rng = make_rng(seed)
    theta_star = rng.dirichlet(np.ones(p))

    if spec.rank == 0:
        A = np.zeros((n, p))
        a_e = np.zeros(p)
    else:
        values = np.asarray(spec.singular_values)
        left_full = _left_factors(spec.factor_style, n, spec.rank, rng)
        left, triangular = np.linalg.qr(left_full[:n])
        right, _ = np.linalg.qr(rng.standard_normal((p, spec.rank)))
        A = (left * values) @ right.T
        row_scale = np.linalg.norm(A) / np.sqrt(n)

        if spec.a_e_style == PostPeriodStyle.TYPICAL_ROW:
            # mesma transformação que levou left_full[:n] a left
            post_loading = np.linalg.solve(triangular.T, left_full[n])
            a_e = right @ (values * post_loading)
        elif spec.a_e_style == PostPeriodStyle.TOP_SINGULAR_ALIGNED:
            a_e = row_scale * right[:, 0]
        else:
            z = rng.standard_normal(p)
            for _ in range(2):
                z = z - right @ (right.T @ z)
            norm = np.linalg.norm(z)
            a_e = np.zeros(p) if norm < 1e-12 else (row_scale / norm) * z

    b = A @ theta_star
    b_e = float(a_e @ theta_star)
    if spec.misspecification:
        b = b + spec.misspecification * rng.standard_normal(n)
    return A, b, a_e, b_e, theta_star


def generate_signal(spec: SignalSpec, n: int, p: int, seed: int):
    """
    Gera o componente sistemático com os valores singulares pedidos.

    A = U diag(sigma) V' com U e V ortonormais; b = A theta* e b_e = a_e' theta*
    para um peso theta* sorteado uniformemente no simplex.

    Args:
        spec (SignalSpec): Especificação do sinal
        n (int): Períodos pré-tratamento
        p (int): Unidades de controle
        seed (int): Semente

    Returns:
        tuple: (A, b, a_e, b_e)
    """
    A, b, a_e, b_e, _ = _generate_signal(spec, n, p, seed)
    return A, b, a_e, b_e


def build_truth(spec: SignalSpec, noise: NoiseSpec, tau: float, seed: int) -> GroundTruth:
    """Gera o sinal nas dimensões de `noise` e monta a GroundTruth"""
    A, b, a_e, b_e, theta_star = _generate_signal(spec, noise.n, noise.p, seed)
    logger.debug(f"Verdade gerada: n={noise.n}, p={noise.p}, rank={spec.rank}")
    return GroundTruth(A=A, b=b, a_e=a_e, b_e=b_e, tau=tau, noise=noise, theta_star=theta_star)


def _standard_draws(rng: np.random.Generator, shape, distribution: NoiseDistribution) -> np.ndarray:
    gaussian = rng.standard_normal(shape)
    if distribution == NoiseDistribution.SCALED_RADEMACHER_MIXTURE:
        signs = 2.0 * rng.integers(0, 2, size=shape) - 1.0
        return np.sqrt(1.0 + MIXTURE_SPREAD * signs) * gaussian
    return gaussian


def generate_panel(truth: GroundTruth, seed: int) -> PanelObservation:
    """
    Gera um painel: componente sistemático + tau na célula tratada pós + ruído.

    Args:
        truth (GroundTruth): Verdade de simulação
        seed (int): Semente

    Returns:
        PanelObservation: Painel com as p_e séries tratadas desagregadas
    """
    noise = truth.noise
    n, p, p_e = truth.n, truth.p, noise.p_e
    rng = make_rng(seed)
    dist = noise.distribution

    z_controls = _standard_draws(rng, (n, p), dist)
    z_controls_post = _standard_draws(rng, p, dist)
    z_treated = _standard_draws(rng, (n, p_e), dist)
    z_treated_post = _standard_draws(rng, p_e, dist)

    if noise.independence_axis == IndependenceAxis.COLUMNS:
        residual_variance = noise.post_residual_variance
        if residual_variance < -PSD_CLAMP * max(1.0, noise.sigma_e ** 2):
            raise DecompositionError("Covariância conjunta das colunas [eps; eps_e] não é PSD")
        residual_sd = np.sqrt(max(residual_variance, 0.0))
        eps = psd_sqrt(noise.sigma_col) @ z_controls
        eps_e = noise.psi_col @ eps + residual_sd * z_controls_post
        treated_noise = psd_sqrt(p_e * noise.sigma_nu) @ z_treated
        treated_noise_post = noise.psi_col @ treated_noise + residual_sd * z_treated_post
    else:
        row_sqrt = psd_sqrt(noise.sigma_row)
        eps = z_controls @ row_sqrt
        eps_e = row_sqrt @ z_controls_post
        explained = float(noise.psi @ noise.sigma_row @ noise.psi)
        residual_variance = float(np.trace(noise.sigma_nu)) / max(n, 1) - explained
        if residual_variance < -PSD_CLAMP * max(1.0, explained):
            raise DecompositionError("Covariância conjunta das linhas [eps, nu] não é PSD")
        series_sd = np.sqrt(p_e * max(residual_variance, 0.0))
        post_variance = noise.sigma_e ** 2 - explained
        if post_variance < -PSD_CLAMP * max(1.0, noise.sigma_e ** 2):
            raise DecompositionError("Variância pós de cada série tratada menor que a parte explicada por psi")
        post_sd = np.sqrt(max(post_variance, 0.0))
        treated_noise = (eps @ noise.psi)[:, None] + series_sd * z_treated
        # cada série tratada tem variância pós sigma_e^2
        treated_noise_post = float(eps_e @ noise.psi) + post_sd * z_treated_post

    series = np.vstack([
        truth.b[:, None] + treated_noise,
        (truth.b_e + truth.tau + treated_noise_post)[None, :],
    ])
    y, y_e = aggregate_treated(series)
    return PanelObservation(
        X=truth.A + eps,
        y=y,
        x_e=truth.a_e + eps_e,
        y_e=y_e,
        treated_series=series,
    )


@dataclass(frozen=True)
class LayoutConfig:
    """Descrição das colunas e linhas de um painel em CSV"""

    treated_column: Optional[str] = None
    control_columns: Optional[Tuple[str, ...]] = None
    time_column: Optional[str] = None
    treated_series_columns: Optional[Tuple[str, ...]] = None
    post_rows: int = 1
    orientation: Orientation = Orientation.COLUMNS_ARE_UNITS

    def __post_init__(self):
        if int(self.post_rows) < 1:
            raise ParameterError("post_rows deve ser pelo menos 1")
        for name in ("control_columns", "treated_series_columns"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, tuple(str(v) for v in value))
        object.__setattr__(self, "post_rows", int(self.post_rows))
        object.__setattr__(self, "orientation", Orientation(self.orientation))

    @classmethod
    def from_dict(cls, data: dict) -> "LayoutConfig":
        return cls(**data)

    def to_dict(self) -> dict:
        return {
            "treated_column": self.treated_column,
            "control_columns": None if self.control_columns is None else list(self.control_columns),
            "time_column": self.time_column,
            "treated_series_columns": (None if self.treated_series_columns is None
                                       else list(self.treated_series_columns)),
            "post_rows": self.post_rows,
            "orientation": self.orientation.value,
        }


_RAGGED_PATTERN = re.compile(r"Expected (\d+) fields in line (\d+), saw (\d+)")


def _read_raw_csv(path: str) -> pd.DataFrame:
    if not os.path.exists(path):
        raise PanelFormatError(f"Arquivo de painel não encontrado: {path}", reason="missing_file")
    try:
        return pd.read_csv(path, header=None, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise PanelFormatError(f"Arquivo de painel vazio: {path}", reason="empty_file")
    except pd.errors.ParserError as e:
        match = _RAGGED_PATTERN.search(str(e))
        row = int(match.group(2)) if match else None
        raise PanelFormatError(f"Linha com número irregular de campos (linha {row}): {e}",
                               row=row, reason="ragged_rows")


def load_panel_csv(path: str, layout: Optional[LayoutConfig] = None) -> PanelObservation:
    """
    Carrega um painel de um CSV (UTF-8, vírgula, cabeçalho, linhas = tempo).

    Args:
        path (str): Caminho do arquivo
        layout (LayoutConfig, optional): Papel de cada coluna e número de linhas pós

    Returns:
        PanelObservation: Painel lido
    """
    layout = layout or LayoutConfig()
    raw = _read_raw_csv(path)

    missing = raw.isna().to_numpy()
    if missing.any():
        i = int(np.argwhere(missing)[0][0])
        raise PanelFormatError(f"Linha {i + 1} com campos faltando", row=i + 1, reason="ragged_rows")

    header = [str(h).strip() for h in raw.iloc[0]]
    if len(set(header)) != len(header):
        raise PanelFormatError("Cabeçalho com nomes de coluna repetidos", row=1)
    data = raw.iloc[1:].reset_index(drop=True)
    data.columns = header
    if len(data) < 2:
        raise PanelFormatError(f"O painel precisa de pelo menos 2 períodos, encontrado {len(data)}",
                               reason="too_few_rows")
    if layout.post_rows >= len(data):
        raise PanelFormatError("post_rows deixa o painel sem períodos pré-tratamento", reason="too_few_rows")

    candidates = [h for h in header if h != layout.time_column]
    for name in (layout.time_column, layout.treated_column):
        if name is not None and name not in header:
            raise PanelFormatError(f"Coluna não encontrada no cabeçalho: {name}", row=1)
    series_columns = list(layout.treated_series_columns or [])
    treated = layout.treated_column
    if treated is None and not series_columns:
        treated = candidates[-1]
    excluded = set(series_columns) | ({treated} if treated else set())
    controls = list(layout.control_columns) if layout.control_columns is not None else [
        h for h in candidates if h not in excluded
    ]
    used = controls + ([treated] if treated else []) + series_columns
    for name in used:
        if name not in header:
            raise PanelFormatError(f"Coluna não encontrada no cabeçalho: {name}", row=1)
    if not controls:
        raise PanelFormatError("Nenhuma coluna de controle no painel")

    numeric = data[used].apply(lambda col: pd.to_numeric(col.str.strip(), errors="coerce"))
    values = numeric.to_numpy(dtype=float)
    bad = ~np.isfinite(values)
    if bad.any():
        i, j = (int(k) for k in np.argwhere(bad)[0])
        row, column = i + 2, header.index(used[j]) + 1
        raise PanelFormatError(
            f"Valor não numérico na posição ({row}, {column}): {data[used[j]].iloc[i]!r}",
            row=row, column=column, reason="non_numeric",
        )

    n = len(data) - layout.post_rows

    def split(block: np.ndarray):
        return block[:n], block[n:].mean(axis=0)

    X, x_e = split(values[:, :len(controls)])
    treated_series = None
    if series_columns:
        pre, post = split(values[:, len(used) - len(series_columns):])
        treated_series = np.vstack([pre, post[None, :]])
        y, y_e = aggregate_treated(treated_series)
        if treated:
            given_y, given_y_e = split(values[:, len(controls)])
            scale = max(1.0, float(np.max(np.abs(treated_series))))
            if np.max(np.abs(given_y - y)) > 1e-9 * scale or abs(given_y_e - y_e) > 1e-9 * scale:
                raise PanelFormatError(f"A coluna {treated} não é a média das séries tratadas")
    else:
        y, y_e = split(values[:, len(controls)])

    logger.info(f"Painel carregado de {path}: n={n}, p={len(controls)}")
    return PanelObservation(X=X, y=y, x_e=x_e, y_e=float(y_e), treated_series=treated_series,
                            orientation=layout.orientation)


def write_panel_csv(panel: PanelObservation, path: str,
                    control_names: Optional[Sequence[str]] = None) -> LayoutConfig:
    """
    Escreve um painel em CSV com precisão total.

    Returns:
        LayoutConfig: Layout que lê o arquivo de volta
    """
    names = list(control_names) if control_names is not None else [f"control_{j + 1}" for j in range(panel.p)]
    if len(names) != panel.p:
        raise DimensionError("control_names deve ter p nomes")
    frame = pd.DataFrame(np.vstack([panel.X, panel.x_e[None, :]]), columns=names)
    frame["treated"] = np.append(panel.y, panel.y_e)
    series_names = None
    if panel.treated_series is not None:
        series_names = [f"treated_{k + 1}" for k in range(panel.p_e)]
        for k, name in enumerate(series_names):
            frame[name] = panel.treated_series[:, k]
    frame.to_csv(path, index=False, float_format="%.17g")
    logger.info(f"Painel salvo em {path}")
    return LayoutConfig(treated_column="treated", control_columns=tuple(names),
                        treated_series_columns=None if series_names is None else tuple(series_names),
                        orientation=panel.orientation)


def estimate_noise_spec(panel: PanelObservation, method=NoiseEstimationMethod.RESIDUAL_PLUGIN,
                        known: Optional[NoiseSpec] = None) -> NoiseSpec:
    """
    Obtém a especificação do ruído de um painel.

    `known` repassa a especificação fornecida. `residual_plugin` é uma
    aproximação: sigma^2 = média das variâncias das primeiras diferenças das
    colunas de controle dividida por 2, com psi = 0 e psi_col = 0. Supõe
    curvatura fraca do sinal.

    Args:
        panel (PanelObservation): Painel observado
        method (NoiseEstimationMethod): known ou residual_plugin
        known (NoiseSpec, optional): Especificação fornecida pelo usuário

    Returns:
        NoiseSpec: Especificação do ruído
    """
    method = NoiseEstimationMethod(method)
    if method == NoiseEstimationMethod.KNOWN:
        if known is None:
            raise PrerequisiteError("method=known exige uma NoiseSpec fornecida")
        return known
    if panel.n < 4:
        raise PrerequisiteError(f"residual_plugin exige n >= 4, recebido n={panel.n}")
    differences = np.diff(panel.X, axis=0)
    sigma_sq = float(np.mean(np.var(differences, axis=0, ddof=1)) / 2.0)
    logger.info(f"Ruído estimado por diferenças: sigma^2={sigma_sq:.6g}")
    return NoiseSpec.isotropic(panel.n, panel.p, np.sqrt(sigma_sq), p_e=panel.p_e or 1)
