#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Gráficos do simlab
==================

Histograma da estatística z contra a densidade normal padrão e reta
log-log do desvio dos coeficientes ao longo de uma grade em n.
"""

import os
import logging
from typing import List, Optional

import numpy as np
from scipy import stats
from matplotlib.figure import Figure
from matplotlib.backends.backend_agg import FigureCanvasAgg as FigureCanvas

from eiv_simlab import ReplicationTable, rate_slope

# Configuração de logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=[
        logging.FileHandler(os.environ.get("EIV_LOG_FILE", "eiv_workbench.log")),
        logging.StreamHandler()
    ]
)
logger = logging.getLogger("EIVCharts")


def z_histogram_chart(table: ReplicationTable, path: str, width: int = 800, height: int = 400) -> Optional[str]:
    """
    Gera o histograma de z = (tau_hat - E tau_tilde) / sigma_tau, com sigma_tau o
    desvio verdadeiro calculado com os pesos do oráculo.

    Args:
        table (ReplicationTable): Tabela de replicações
        path (str): Arquivo PNG de saída
        width (int): Largura em pixels
        height (int): Altura em pixels

    Returns:
        str: Caminho do gráfico ou None sem estatísticas z suficientes
    """
    z = table.frame["z"].dropna().to_numpy(dtype=float)
    if z.size < 2:
        logger.warning("Sem estatísticas z suficientes para o histograma")
        return None

    fig = Figure(figsize=(width / 100, height / 100), dpi=100)
    canvas = FigureCanvas(fig)
    ax = fig.add_subplot(111)

    ax.hist(z, bins=min(50, max(10, z.size // 20)), density=True, color='#3b82f6', alpha=0.7)
    grid = np.linspace(min(-4.0, z.min()), max(4.0, z.max()), 200)
    ax.plot(grid, stats.norm.pdf(grid), color='#ef4444', linewidth=2)

    ax.set_title("Estatística z contra N(0, 1)", fontsize=14)
    ax.set_xlabel("z", fontsize=12)
    ax.set_ylabel("Densidade", fontsize=12)
    ax.grid(True, linestyle='--', alpha=0.7)
    fig.tight_layout()

    canvas.print_png(path)
    logger.info(f"Histograma de z gravado em {path}")
    return path


def rate_scaling_chart(table: ReplicationTable, path: str, x_field: str = "n", y_field: str = "coef_dev",
                       width: int = 800, height: int = 400) -> Optional[str]:
    """
    Gera o gráfico log-log das medianas por ponto da grade com a reta ajustada.

    Returns:
        str: Caminho do gráfico ou None com menos de 3 valores distintos de x
    """
    frame = table.frame
    if frame[x_field].nunique() < 3:
        logger.warning(f"Grade com menos de 3 valores de {x_field}, gráfico de taxa omitido")
        return None

    medians = frame.groupby(x_field)[y_field].median()
    slope, _ = rate_slope(table, x_field, y_field)
    x = medians.index.to_numpy(dtype=float)
    y = medians.to_numpy(dtype=float)
    intercept = float(np.mean(np.log(y) - slope * np.log(x)))

    fig = Figure(figsize=(width / 100, height / 100), dpi=100)
    canvas = FigureCanvas(fig)
    ax = fig.add_subplot(111)

    ax.loglog(x, y, marker='o', linestyle='', color='#3b82f6', markersize=6)
    ax.loglog(x, np.exp(intercept) * x ** slope, linestyle='--', color='#10b981', linewidth=2,
              label=f"inclinação {slope:.3f}")

    ax.set_title(f"Mediana de {y_field} por {x_field}", fontsize=14)
    ax.set_xlabel(x_field, fontsize=12)
    ax.set_ylabel(y_field, fontsize=12)
    ax.grid(True, which='both', linestyle='--', alpha=0.7)
    ax.legend()
    fig.tight_layout()

    canvas.print_png(path)
    logger.info(f"Gráfico de taxa gravado em {path}")
    return path


def write_simulation_charts(table: ReplicationTable, output_dir: str) -> List[str]:
    """Grava os gráficos aplicáveis à tabela e devolve os caminhos gerados"""
    charts = [
        z_histogram_chart(table, os.path.join(output_dir, "z_histogram.png")),
        rate_scaling_chart(table, os.path.join(output_dir, "rate_scaling.png")),
    ]
    return [path for path in charts if path]
