"""
Definiciones de kernel, ensamblado de la matriz de Gram y utilidades
de dimensión estadística.

El kernel polinómico no homogéneo (γ·xᵀz + c)^q se reduce al caso
homogéneo con la representación aumentada [√γ·x ; √c]; esa misma
representación alimenta gram_matrix y TensorSketch, de modo que kernel y
sketch coinciden exactamente.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.spatial.distance import cdist

from app.models.kernels import KernelSpec
from app.models.model_file import LabelMap
from app.models.reports import StatdimReport
from app.services.errors import (
    DimensionMismatchError,
    InvalidDeltaError,
    NonPositiveLambdaError,
)
from app.services.numerics import DenseMatrix, as_matrix, symmetric_eigen

logger = logging.getLogger(__name__)

_SNAP_RTOL = 16 * np.finfo(np.float64).eps


@dataclass(frozen=True)
class Dataset:
    """
    Conjunto de entrenamiento o evaluación.

    X es n×d; y es n×t (t = número de lados derechos). En clasificación y
    contiene las etiquetas originales (t = 1) y label_map su codificación.
    """
    X: DenseMatrix
    y: DenseMatrix
    label_map: Optional[LabelMap] = None

    def __post_init__(self) -> None:
        if self.X.ndim != 2 or self.y.ndim != 2:
            raise DimensionMismatchError("X e y deben ser matrices 2D")
        if self.X.shape[0] != self.y.shape[0]:
            raise DimensionMismatchError(
                f"X tiene {self.X.shape[0]} filas pero y tiene {self.y.shape[0]}"
            )
        if self.X.shape[0] < 1 or self.y.shape[1] < 1:
            raise ValueError("el conjunto de datos debe tener n ≥ 1 y t ≥ 1")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise ValueError("el conjunto de datos contiene valores no finitos")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def subset(self, rows: NDArray[np.intp]) -> "Dataset":
        return Dataset(self.X[rows], self.y[rows], self.label_map)


# ---------------------------------------------------------------------------
# Evaluación del kernel
# ---------------------------------------------------------------------------

def kernel_eval(spec: KernelSpec, x: ArrayLike, z: ArrayLike) -> float:
    """
    Evalúa k(x, z) para dos vectores.
    """
    xv = np.asarray(x, dtype=np.float64).ravel()
    zv = np.asarray(z, dtype=np.float64).ravel()
    if xv.shape != zv.shape:
        raise DimensionMismatchError(f"dim(x)={xv.size} distinta de dim(z)={zv.size}")

    if spec.is_gaussian:
        diff = xv - zv
        return float(np.exp(-np.dot(diff, diff) / (2.0 * spec.sigma ** 2)))
    return float((spec.gamma * np.dot(xv, zv) + spec.offset) ** spec.degree)


def sketch_inputs(spec: KernelSpec, X: ArrayLike) -> DenseMatrix:
    """
    Representación aumentada [√γ·x ; √c] del kernel polinómico.

    Para c = 0 no se añade la columna constante. Para el kernel gaussiano
    devuelve X sin cambios.
    """
    mat = as_matrix(X, "X")
    if spec.is_gaussian:
        return mat
    scaled = math.sqrt(spec.gamma) * mat
    if spec.offset == 0.0:
        return scaled
    const = np.full((mat.shape[0], 1), math.sqrt(spec.offset))
    return np.hstack([scaled, const])


def cross_kernel(spec: KernelSpec, Xq: ArrayLike, X: ArrayLike) -> DenseMatrix:
    """
    Matriz m×n de evaluaciones k(xq_i, x_j).
    """
    q_mat = as_matrix(Xq, "Xq")
    x_mat = as_matrix(X, "X")
    if q_mat.shape[1] != x_mat.shape[1]:
        raise DimensionMismatchError(
            f"las consultas tienen d={q_mat.shape[1]} pero el modelo d={x_mat.shape[1]}"
        )
    if q_mat.shape[0] == 0 or x_mat.shape[0] == 0:
        return np.zeros((q_mat.shape[0], x_mat.shape[0]))

    if spec.is_gaussian:
        sq_dist = cdist(q_mat, x_mat, metric="sqeuclidean")
        return np.exp(-sq_dist / (2.0 * spec.sigma ** 2))
    inner = sketch_inputs(spec, q_mat) @ sketch_inputs(spec, x_mat).T
    return inner ** spec.degree


def gram_matrix(spec: KernelSpec, X: ArrayLike) -> DenseMatrix:
    """
    Matriz de Gram K_ij = k(x_i, x_j) por el algoritmo directo Θ(n²d).

    La simetría es exacta: se conserva el triángulo superior y se refleja.
    """
    full = cross_kernel(spec, X, X)
    upper = np.triu(full)
    gram = upper + np.triu(full, 1).T
    logger.debug("Matriz de Gram %dx%d ensamblada (%s).", gram.shape[0], gram.shape[1], spec.describe())
    return gram


# ---------------------------------------------------------------------------
# Dimensión estadística
# ---------------------------------------------------------------------------

def statistical_dimension(eigenvalues: ArrayLike, lam: float) -> float:
    """
    s_λ(K) = Tr((K + λI)⁻¹K) = Σ λ_i / (λ_i + λ).

    Recibe los autovalores ya calculados para que la descomposición
    espectral, que es lo caro, quede explícita en el llamador.
    """
    if not lam > 0:
        raise NonPositiveLambdaError(f"lambda debe ser > 0 (recibido {lam})")
    values = np.clip(np.asarray(eigenvalues, dtype=np.float64), 0.0, None)
    return float(np.sum(values / (values + lam)))


def theoretical_sketch_size(
    q: int,
    s_lambda: float,
    delta: float,
    levels: int = 1,
) -> int:
    """
    Tamaño de sketch suficiente según las cotas de TensorSketch.

    Un nivel: ⌈4(2+3^q)·s_λ²/δ⌉. Dos niveles (TensorSketch seguido de SRHT):
    la primera etapa necesita ⌈32(2+3^q)·s_λ²/δ⌉.
    """
    if not 0.0 < delta <= 1.0:
        raise InvalidDeltaError(f"delta debe estar en (0, 1] (recibido {delta})")
    if s_lambda < 0:
        raise ValueError("s_lambda debe ser ≥ 0")
    if levels not in (1, 2):
        raise ValueError("levels debe ser 1 o 2")

    factor = 4 if levels == 1 else 32
    value = factor * (2 + 3 ** q) * s_lambda ** 2 / delta
    # solo el ruido de redondeo (unos ulp) se absorbe: 3960.0000000000005 -> 3960
    nearest = round(value)
    if math.isclose(value, nearest, rel_tol=_SNAP_RTOL):
        return int(nearest)
    return int(math.ceil(value))


def statdim_report(spec: KernelSpec, X: ArrayLike, lam: float, delta: float = 1.0) -> StatdimReport:
    """
    Ensambla K, calcula s_λ(K) y, para el kernel polinómico, los tamaños de
    sketch de uno y dos niveles.
    """
    if not 0.0 < delta <= 1.0:
        raise InvalidDeltaError(f"delta debe estar en (0, 1] (recibido {delta})")
    eig = symmetric_eigen(gram_matrix(spec, X))
    s_lambda = statistical_dimension(eig.eigenvalues, lam)
    report = StatdimReport(
        n=eig.eigenvalues.shape[0],
        lam=lam,
        s_lambda=s_lambda,
        delta=delta,
        top_eigenvalues=[float(v) for v in eig.eigenvalues[:10]],
    )
    if not spec.is_gaussian:
        report.degree = spec.degree
        report.sketch_size_one_level = theoretical_sketch_size(spec.degree, s_lambda, delta, levels=1)
        report.sketch_size_two_level = theoretical_sketch_size(spec.degree, s_lambda, delta, levels=2)
    logger.info("s_lambda=%.4f con lambda=%.3g (n=%d).", s_lambda, lam, report.n)
    return report
