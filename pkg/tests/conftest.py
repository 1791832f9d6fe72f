"""
Fixtures compartidas de la batería de pruebas.
"""

import numpy as np
import pytest

from app.models.kernels import KernelFamily, KernelSpec
from app.services.kernels import Dataset


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def gaussian_kernel():
    return KernelSpec(family=KernelFamily.GAUSSIAN, sigma=1.0)


@pytest.fixture
def poly_kernel():
    return KernelSpec(family=KernelFamily.POLYNOMIAL, gamma=1.0, offset=1.0, degree=2)


def make_spd(rng, n, cond=10.0):
    """Matriz SPD n×n con espectro logarítmico entre 1 y cond."""
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    values = np.logspace(0, np.log10(cond), n)
    return (q * values) @ q.T


def two_blobs(n, seed=0, separation=3.0, d=2):
    """Dos nubes gaussianas etiquetadas ±1 y separadas `separation` en el primer eje."""
    gen = np.random.default_rng(seed)
    labels = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    X = gen.standard_normal((n, d)) * 0.6
    X[:, 0] += 0.5 * separation * labels
    return Dataset(X, labels.reshape(-1, 1))


def smooth_regression(n, seed=0, d=2, noise=0.1):
    """Objetivo suave sin(x₁) + x₂²/2 con ruido gaussiano."""
    gen = np.random.default_rng(seed)
    X = gen.uniform(-2.0, 2.0, size=(n, d))
    y = np.sin(X[:, 0]) + 0.5 * X[:, 1] ** 2 + noise * gen.standard_normal(n)
    return Dataset(X, y.reshape(-1, 1))
