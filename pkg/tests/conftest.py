# -*- coding: utf-8 -*-

"""Fixtures compartilhadas dos testes da bancada"""

import os
import sys
import tempfile

import numpy as np
import pytest

# Log dos testes fora do diretório do projeto
os.environ.setdefault("EIV_LOG_FILE", os.path.join(tempfile.gettempdir(), "eiv_workbench_tests.log"))

# Layout plano: os módulos ficam na raiz do repositório
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from eiv_paneldata import NoiseSpec, SignalSpec, build_truth, generate_panel  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_truth():
    """Sinal de posto 2, n=30, p=8, duas séries tratadas"""
    noise = NoiseSpec.isotropic(30, 8, 0.5, p_e=2)
    signal = SignalSpec(rank=2, singular_values=(12.0, 6.0))
    return build_truth(signal, noise, tau=1.5, seed=7)


@pytest.fixture
def small_panel(small_truth):
    return generate_panel(small_truth, seed=11)


@pytest.fixture
def zero_noise_truth():
    noise = NoiseSpec.isotropic(20, 5, 0.0, p_e=1)
    signal = SignalSpec(rank=2, singular_values=(8.0, 3.0))
    return build_truth(signal, noise, tau=3.0, seed=3)
