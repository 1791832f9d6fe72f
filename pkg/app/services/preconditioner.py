"""
Precondicionador de random features y test de calidad adaptativo.

Incluye:
- Preconditioner: aplica (ZZᵀ + λ_p·I)⁻¹ mediante la identidad de Woodbury.
- build_preconditioner: Cholesky de ZᵀZ + λ_p·I y U = L⁻¹Zᵀ.
- quality_test: condiciones de calidad sobre la proyección P.
- adaptive_build: duplica s hasta que el test de calidad se cumple.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from app.models.kernels import KernelSpec
from app.models.precond import QualityReport
from app.models.solver import ChainSpec
from app.services.errors import (
    BudgetExhaustedError,
    DimensionMismatchError,
    NonPositiveLambdaError,
    NotPositiveDefiniteError,
)
from app.services.numerics import (
    DenseMatrix,
    as_matrix,
    cholesky,
    power_iteration_spectral_norm,
    symmetric_eigen,
    triangular_solve,
)
from app.services.sketches import SketchChain, build_chain

logger = logging.getLogger(__name__)

RETAIN_FACTOR = 0.05
COND1_FACTOR = 0.1
RATIO_BAND = (0.9, 1.1)
_SINGULAR_FLOOR = 1e-10
_JITTER_FACTOR = 1e-12


@dataclass(frozen=True)
class Preconditioner:
    """
    Factor U (s×n) y λ_p; apply(x) = λ_p⁻¹(x − Uᵀ(Ux)) = (ZZᵀ + λ_p·I)⁻¹x.
    """
    factor: DenseMatrix
    lambda_p: float

    @property
    def s(self) -> int:
        return self.factor.shape[0]

    @property
    def n(self) -> int:
        return self.factor.shape[1]

    def apply(self, x: ArrayLike) -> NDArray[np.float64]:
        vec = np.asarray(x, dtype=np.float64)
        if vec.shape[0] != self.n:
            raise DimensionMismatchError(
                f"el precondicionador es de orden {self.n} pero x tiene {vec.shape[0]} filas"
            )
        return (vec - self.factor.T @ (self.factor @ vec)) / self.lambda_p

    __call__ = apply


def build_preconditioner(Z: ArrayLike, lambda_p: float) -> Preconditioner:
    """
    Construye el precondicionador a partir de Z (n×s).

    LLᵀ = ZᵀZ + λ_p·I_s y U = L⁻¹Zᵀ, de modo que UᵀU = Z(ZᵀZ + λ_p·I)⁻¹Zᵀ.
    Si Cholesky falla se reintenta una única vez sumando 1e-12·traza/s a la
    diagonal; un segundo fallo se propaga.
    """
    if not lambda_p > 0:
        raise NonPositiveLambdaError(f"lambda_p debe ser > 0 (recibido {lambda_p})")
    z_mat = as_matrix(Z, "Z")
    n, s = z_mat.shape
    if s == 0:
        return Preconditioner(np.zeros((0, n)), float(lambda_p))

    gram = z_mat.T @ z_mat
    gram = 0.5 * (gram + gram.T)
    gram[np.diag_indices(s)] += lambda_p
    try:
        l_factor = cholesky(gram)
    except NotPositiveDefiniteError:
        jitter = _JITTER_FACTOR * float(np.trace(gram)) / s
        logger.warning(
            "Cholesky de ZᵀZ + λ_p·I falló (s=%d); reintento con jitter %.3e.", s, jitter
        )
        gram[np.diag_indices(s)] += jitter
        l_factor = cholesky(gram)

    factor = triangular_solve(l_factor, z_mat.T, lower=True)
    logger.debug("Precondicionador construido (n=%d, s=%d, lambda_p=%.3g).", n, s, lambda_p)
    return Preconditioner(factor, float(lambda_p))


def precond_apply(p: Preconditioner, x: ArrayLike) -> NDArray[np.float64]:
    """Forma funcional de Preconditioner.apply."""
    return p.apply(x)


# ---------------------------------------------------------------------------
# Test de calidad
# ---------------------------------------------------------------------------

def projection_basis(Z: ArrayLike, lam: float) -> Tuple[DenseMatrix, NDArray[np.float64]]:
    """
    Base ortonormal B (n×k) de P y los σ² correspondientes de ZZᵀ.

    Se retienen los vectores singulares izquierdos con σ² > 0.05·λ; los
    valores singulares por debajo de 1e-10·σ_max cuentan como cero. La SVD
    fina se obtiene de la menor de ZᵀZ y ZZᵀ.
    """
    z_mat = as_matrix(Z, "Z")
    n, s = z_mat.shape
    if n == 0 or s == 0:
        return np.zeros((n, 0)), np.zeros(0)

    if s <= n:
        small = z_mat.T @ z_mat
        eig = symmetric_eigen(0.5 * (small + small.T))
    else:
        big = z_mat @ z_mat.T
        eig = symmetric_eigen(0.5 * (big + big.T))

    sigma2 = eig.eigenvalues
    top = max(float(sigma2[0]), 0.0)
    keep = (sigma2 > RETAIN_FACTOR * lam) & (sigma2 > (_SINGULAR_FLOOR ** 2) * top)
    sigma2 = sigma2[keep]
    if s <= n:
        basis = (z_mat @ eig.eigenvectors[:, keep]) / np.sqrt(sigma2)
    else:
        basis = eig.eigenvectors[:, keep]
    return basis, sigma2


def quality_test(
    K: ArrayLike,
    Z: ArrayLike,
    lam: float,
    *,
    tol: float = 1e-4,
    max_iter: int = 500,
    seed: int = 0,
) -> QualityReport:
    """
    Evalúa si ZZᵀ + λI es un buen precondicionador para K + λI.

    La condición 1 se estima por iteración de potencia sobre x ↦ (I-P)K(I-P)x.
    La condición 2 se evalúa de forma exacta en range(P): los autovalores de
    Σ⁻¹(BᵀKB)Σ⁻¹ deben caer en [0.9, 1.1].
    """
    if not lam > 0:
        raise NonPositiveLambdaError(f"lambda debe ser > 0 (recibido {lam})")
    k_mat = as_matrix(K, "K")
    z_mat = as_matrix(Z, "Z")
    n = k_mat.shape[0]
    if z_mat.shape[0] != n:
        raise DimensionMismatchError(f"K es {n}x{n} pero Z tiene {z_mat.shape[0]} filas")

    basis, sigma2 = projection_basis(z_mat, lam)

    def project_out(x: NDArray[np.float64]) -> NDArray[np.float64]:
        return x - basis @ (basis.T @ x)

    cond1 = power_iteration_spectral_norm(
        lambda x: project_out(k_mat @ project_out(x)), n, tol=tol, max_iter=max_iter, seed=seed
    )

    rank = basis.shape[1]
    if rank:
        scale = 1.0 / np.sqrt(sigma2)
        pencil = (basis.T @ k_mat @ basis) * scale[:, None] * scale[None, :]
        ratios = np.linalg.eigvalsh(0.5 * (pencil + pencil.T))
        low, high = float(ratios[0]), float(ratios[-1])
    else:
        low = high = 1.0

    threshold = COND1_FACTOR * lam
    passed = cond1.value <= threshold and RATIO_BAND[0] <= low and high <= RATIO_BAND[1]
    return QualityReport(
        passed=passed,
        sketch_size=z_mat.shape[1],
        rank_of_p=rank,
        cond1_value=cond1.value,
        cond1_converged=cond1.converged,
        cond2_ratio_low=low,
        cond2_ratio_high=high,
        cond1_threshold=threshold,
        retain_threshold=RETAIN_FACTOR * lam,
        ratio_band=RATIO_BAND,
    )


# ---------------------------------------------------------------------------
# Dimensionado adaptativo
# ---------------------------------------------------------------------------

@dataclass
class AdaptiveResult:
    """
    Resultado del bucle adaptativo: el intento aceptado y todo el historial.
    """
    preconditioner: Preconditioner
    Z: DenseMatrix
    chain: SketchChain
    history: List[QualityReport] = field(default_factory=list)

    @property
    def last_report(self) -> QualityReport:
        return self.history[-1]


def default_initial_size(n: int) -> int:
    """s0 = max(64, ⌈n/64⌉), acotado por n."""
    return max(1, min(n, max(64, math.ceil(n / 64))))


def attempt_seed(seed: int, attempt: int) -> int:
    """Semilla nueva y reproducible para cada intento del bucle adaptativo."""
    return int(np.random.SeedSequence([seed, attempt]).generate_state(1)[0])


def adaptive_build(
    K: ArrayLike,
    X: ArrayLike,
    kernel: KernelSpec,
    template: ChainSpec,
    lam: float,
    lambda_p: Optional[float] = None,
    s0: Optional[int] = None,
    s_max: Optional[int] = None,
    seed: int = 0,
) -> AdaptiveResult:
    """
    Empieza con un s pequeño, genera Z y lo evalúa; si no es suficiente,
    duplica s y genera un Z nuevo con otra semilla.

    Lanza BudgetExhaustedError al fallar el intento con s_max; el error lleva
    el AdaptiveResult de ese intento en `fallback`.
    """
    k_mat = as_matrix(K, "K")
    x_mat = as_matrix(X, "X")
    n = k_mat.shape[0]
    lambda_p = lam if lambda_p is None else lambda_p
    s_max = n if s_max is None else s_max
    s0 = min(default_initial_size(n), s_max) if s0 is None else s0
    if s0 < 1 or s0 > s_max:
        raise ValueError(f"se requiere 1 ≤ s0 ≤ s_max (s0={s0}, s_max={s_max})")
    if s_max > n:
        logger.warning("s_max=%d supera n=%d; se permite pero no es lo previsto.", s_max, n)

    history: List[QualityReport] = []
    s = s0
    attempt = 0
    while True:
        start = time.time()
        current_seed = attempt_seed(seed, attempt)
        chain = build_chain(kernel, template.scaled_to(s), x_mat.shape[1], current_seed)
        z_mat = chain.apply(x_mat)
        report = quality_test(k_mat, z_mat, lam, seed=current_seed)
        history.append(report)
        logger.info(
            "Intento adaptativo %d: s=%d, rango(P)=%d, cond1=%.3g (umbral %.3g), "
            "cocientes=[%.3f, %.3f], ok=%s (%.2fs)",
            attempt, s, report.rank_of_p, report.cond1_value, report.cond1_threshold,
            report.cond2_ratio_low, report.cond2_ratio_high, report.passed,
            time.time() - start,
        )

        if report.passed or s >= s_max:
            result = AdaptiveResult(build_preconditioner(z_mat, lambda_p), z_mat, chain, history)
            if report.passed:
                return result
            raise BudgetExhaustedError(
                f"ningún tamaño hasta s_max={s_max} superó el test de calidad",
                last_report=report,
                history=history,
                fallback=result,
            )

        s = min(2 * s, s_max)
        attempt += 1
