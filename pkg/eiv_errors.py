#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Exceções do workbench de controle sintético com erro nas variáveis.

Cada exceção carrega um `kind` legível por máquina (usado no error.json da CLI)
e a flag `numerical`, que separa falhas numéricas (código de saída 2) de erros
de uso (código de saída 1).
"""

from typing import Any, Dict, Optional


class EIVError(Exception):
    """Classe base de todos os erros do workbench"""

    kind = "eiv_error"
    numerical = False

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> Dict[str, Any]:
        """Representação serializável do erro"""
        return {"kind": self.kind, "message": self.message, "details": self.details}


class DimensionError(EIVError, ValueError):
    kind = "dimension_error"


class EmptyInputError(EIVError, ValueError):
    kind = "empty_input"


class ParameterError(EIVError, ValueError):
    kind = "invalid_parameter"


class PrerequisiteError(EIVError, ValueError):
    kind = "prerequisite_unmet"


class InfeasiblePointError(EIVError, ValueError):
    kind = "infeasible_point"


class PanelFormatError(EIVError, ValueError):
    """Erro de leitura de painel; linha e coluna são coordenadas 1-based do arquivo"""

    kind = "panel_format"

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[int] = None, **details: Any):
        super().__init__(message, row=row, column=column, **details)
        self.row = row
        self.column = column


class ConfigError(EIVError, ValueError):
    """Erro de configuração com o caminho da chave (ex.: solver.eta)"""

    kind = "config_error"

    def __init__(self, message: str, key_path: Optional[str] = None, **details: Any):
        super().__init__(message, key_path=key_path, **details)
        self.key_path = key_path


class DecompositionError(EIVError, ValueError):
    kind = "matrix_decomposition"
    numerical = True


class UnboundedProblemError(EIVError, ValueError):
    kind = "unbounded_problem"
    numerical = True


class ConvergenceError(EIVError, RuntimeError):
    kind = "non_convergence"
    numerical = True


class RateUnsolvableError(EIVError, RuntimeError):
    kind = "rate_unsolvable"
    numerical = True


class InvariantViolation(EIVError, RuntimeError):
    kind = "invariant_violation"
    numerical = True
