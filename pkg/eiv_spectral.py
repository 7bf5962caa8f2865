#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Utilitários espectrais: SVD, valor mínimo da regressão ridge, resumo de
tipicidade D e seleção do posto aproximado.
"""

import os
import logging
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np

from eiv_errors import DimensionError, ParameterError

# Configuração de logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=[
        logging.FileHandler(os.environ.get("EIV_LOG_FILE", "eiv_workbench.log")),
        logging.StreamHandler()
    ]
)
logger = logging.getLogger("EIVSpectral")


@dataclass(frozen=True)
class SvdDecomposition:
    """
    SVD completa A = U diag(sigma) V'.

    left_vectors é n x n e right_vectors é p x p (bases ortonormais completas);
    singular_values tem min(n, p) entradas não crescentes.
    """

    singular_values: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray

    @property
    def shape(self) -> Tuple[int, int]:
        return self.left_vectors.shape[0], self.right_vectors.shape[0]

    def rank(self, tol: float = None) -> int:
        """Número de valores singulares acima de tol (padrão: max(n, p) * eps * sigma_1)"""
        if self.singular_values.size == 0:
            return 0
        if tol is None:
            tol = max(self.shape) * np.finfo(float).eps * float(self.singular_values[0])
        return int(np.sum(self.singular_values > tol))

    def reconstruct(self) -> np.ndarray:
        k = self.singular_values.size
        return (self.left_vectors[:, :k] * self.singular_values) @ self.right_vectors[:, :k].T

    def to_dict(self) -> dict:
        return {"singular_values": [float(v) for v in self.singular_values], "rank": self.rank()}


def svd(A) -> SvdDecomposition:
    """
    Decomposição em valores singulares completa.

    Args:
        A: Matriz real n x p com entradas finitas

    Returns:
        SvdDecomposition: Valores singulares e bases ortonormais completas
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise DimensionError(f"svd espera uma matriz, recebido ndim={A.ndim}")
    if not np.all(np.isfinite(A)):
        raise ParameterError("A matriz contém entradas não finitas")
    left, values, right_t = np.linalg.svd(A, full_matrices=True)
    for array in (values, left, right_t):
        array.setflags(write=False)
    return SvdDecomposition(singular_values=values, left_vectors=left, right_vectors=right_t.T)


def ridge_min_value(A, b, alpha: float, beta: float) -> float:
    """
    min_x alpha^2 ||Ax - b||^2 + beta^2 ||x||^2 em forma fechada.

    Soma alpha^2 (u_k'b)^2 / (1 + sigma_k^2 alpha^2 / beta^2) sobre uma base
    esquerda completa, com sigma_k = 0 nas direções do núcleo.
    """
    if alpha <= 0 or beta <= 0:
        raise ParameterError(f"alpha e beta devem ser positivos, recebido alpha={alpha}, beta={beta}")
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or b.shape != (A.shape[0],):
        raise DimensionError("b deve ter o mesmo número de linhas de A")
    decomposition = svd(A)
    projections = decomposition.left_vectors.T @ b
    values = np.zeros(A.shape[0])
    values[:decomposition.singular_values.size] = decomposition.singular_values
    return float(alpha ** 2 * np.sum(projections ** 2 / (1.0 + values ** 2 * alpha ** 2 / beta ** 2)))


@dataclass(frozen=True)
class TypicalityReport:
    """Resumo D da semelhança entre a_e e as linhas de A, e D_tilde = D + resíduo pós"""

    D: float
    D_tilde: float
    per_component: Tuple[Tuple[int, float, float], ...]
    out_of_rowspace_sq: float

    def to_dict(self) -> dict:
        return {
            "D": self.D,
            "D_tilde": self.D_tilde,
            "out_of_rowspace_sq": self.out_of_rowspace_sq,
            "per_component": [
                {"k": k, "projection": projection, "damping": damping}
                for k, projection, damping in self.per_component
            ],
        }


def typicality_D(a_e, decomposition: SvdDecomposition, sigma: float, eta: float, n: int,
                 post_residual_sd: float = 0.0) -> TypicalityReport:
    """
    Calcula D^2 = sum_k (a_e'v_k)^2 / (1 + sigma_k^2 / (sigma^2 eta^2 n)).

    A soma percorre uma base ortonormal completa de R^p: direções do núcleo
    têm amortecimento 1.

    Args:
        a_e: Média pós-tratamento dos controles (comprimento p)
        decomposition (SvdDecomposition): SVD de A
        sigma (float): Nível de ruído
        eta (float): Parâmetro de regularização
        n (int): Períodos pré-tratamento
        post_residual_sd (float): ||eps_ej - psi_col' eps_.j||_{L2}

    Returns:
        TypicalityReport: D, D_tilde e a contribuição de cada componente
    """
    if sigma <= 0 or eta <= 0:
        raise ParameterError(f"D exige sigma > 0 e eta > 0, recebido sigma={sigma}, eta={eta}")
    if n < 1:
        raise ParameterError("n deve ser positivo")
    a_e = np.asarray(a_e, dtype=float)
    if a_e.shape != (decomposition.right_vectors.shape[0],):
        raise DimensionError("a_e deve ter o comprimento da base direita")

    rank = decomposition.rank()
    values = decomposition.singular_values[:rank]
    projections = decomposition.right_vectors[:, :rank].T @ a_e
    damping = 1.0 / (1.0 + values ** 2 / (sigma ** 2 * eta ** 2 * n))
    total_sq = float(a_e @ a_e)
    in_rowspace_sq = float(np.sum(projections ** 2))
    D_sq = max(total_sq - float(np.sum(projections ** 2 * (1.0 - damping))), 0.0)
    D = float(np.sqrt(D_sq))
    return TypicalityReport(
        D=D,
        D_tilde=D + float(post_residual_sd),
        per_component=tuple(
            (k + 1, float(projections[k]), float(damping[k])) for k in range(rank)
        ),
        out_of_rowspace_sq=max(total_sq - in_rowspace_sq, 0.0),
    )


def psi_col_norm(psi_col, sigma_col) -> float:
    """||psi_col' Sigma_{eps_.j}^{1/2}||"""
    psi_col = np.asarray(psi_col, dtype=float)
    return float(np.sqrt(max(float(psi_col @ np.asarray(sigma_col, dtype=float) @ psi_col), 0.0)))


def approximate_rank(decomposition: Union[SvdDecomposition, Sequence[float]], s: float, v: float,
                     sigma: float, p_eff: float, width: float, c: float = 1.0,
                     phi: float = 1.0) -> int:
    """
    Menor R >= 0 com R >= c sigma_{R+1} width / (phi s + v sigma p_eff^{-1/2}).

    sigma_{R+1} = 0 além do posto, de modo que R = posto sempre satisfaz.
    Aceita uma SvdDecomposition ou diretamente os valores singulares.
    """
    if width < 0:
        raise ParameterError("width deve ser não negativa")
    if p_eff <= 0:
        raise ParameterError("p_eff deve ser positivo")
    values = (decomposition.singular_values if isinstance(decomposition, SvdDecomposition)
              else np.asarray(decomposition, dtype=float))
    denominator = phi * s + v * sigma / np.sqrt(p_eff)
    for R in range(values.size + 1):
        next_value = float(values[R]) if R < values.size else 0.0
        numerator = c * next_value * width
        if numerator == 0.0:
            return R
        if denominator > 0 and R >= numerator / denominator:
            return R
    return int(values.size)
