#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Geração de números aleatórios com semente explícita.

Todas as operações estocásticas recebem uma semente e constroem o seu próprio
gerador Philox (baseado em contador, chave de 64 bits). Nenhum estado global
do numpy é usado.
"""

import os

import numpy as np

MASK64 = (1 << 64) - 1

# Constantes do finalizador splitmix64
SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
SPLITMIX_MUL1 = 0xBF58476D1CE4E5B9
SPLITMIX_MUL2 = 0x94D049BB133111EB

# Fluxo reservado para a verdade de cada ponto da grade
TRUTH_STREAM = MASK64


def splitmix64(x: int) -> int:
    """Mistura de 64 bits (splitmix64)"""
    z = (int(x) + SPLITMIX_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * SPLITMIX_MUL1) & MASK64
    z = ((z ^ (z >> 27)) * SPLITMIX_MUL2) & MASK64
    return z ^ (z >> 31)


def replication_seed(base_seed: int, grid_index: int, rep: int) -> int:
    """Semente da replicação `rep` no ponto `grid_index`: base XOR hash(grade, rep)"""
    return (int(base_seed) & MASK64) ^ splitmix64(splitmix64(grid_index) ^ (int(rep) & MASK64))


def truth_seed(base_seed: int, grid_index: int) -> int:
    """Semente da verdade (sinal) de um ponto da grade"""
    return replication_seed(base_seed, grid_index, TRUTH_STREAM)


def make_rng(seed: int) -> np.random.Generator:
    """Cria um gerador Philox independente para a semente dada"""
    return np.random.Generator(np.random.Philox(key=int(seed) & MASK64))


def worker_count(default: int = 1) -> int:
    """Número de threads de trabalho (variável de ambiente EIV_WORKERS)"""
    value = os.environ.get("EIV_WORKERS")
    if not value:
        return default
    try:
        return max(int(value), 1)
    except ValueError:
        return default
