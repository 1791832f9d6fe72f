"""
Servicio de resolución de kernel ridge regression.

Incluye:
- pcg_solve: gradiente conjugado precondicionado desde el vector cero.
- Codificación RLSC (uno contra todos, ±1) y su decodificación.
- KrrSolverService: entrenamiento completo (Gram + sketch + precondicionador
  + PCG por lado derecho), predicción y la línea base sketch-and-solve.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from app.models.kernels import KernelSpec
from app.models.model_file import LabelMap
from app.models.precond import QualityReport
from app.models.solver import PcgReport, RhsReport, SolverConfig, Task
from app.services import kernels
from app.services.errors import (
    BreakdownDetectedError,
    BudgetExhaustedError,
    DimensionMismatchError,
    UnknownLabelError,
)
from app.services.kernels import Dataset
from app.services.numerics import DenseMatrix, cholesky, triangular_solve
from app.services.preconditioner import (
    AdaptiveResult,
    Preconditioner,
    adaptive_build,
    build_preconditioner,
)
from app.services.sketches import SketchChain, build_chain

logger = logging.getLogger(__name__)

Operator = Callable[[NDArray[np.float64]], NDArray[np.float64]]


# ---------------------------------------------------------------------------
# PCG
# ---------------------------------------------------------------------------

def pcg_solve(
    apply_a: Operator,
    y: ArrayLike,
    preconditioner: Optional[Operator] = None,
    tau: float = 1e-5,
    max_iter: int = 1000,
    callback: Optional[Callable[[NDArray[np.float64]], None]] = None,
) -> Tuple[NDArray[np.float64], RhsReport]:
    """
    PCG de libro sobre A c = y partiendo del vector cero.

    Se detiene cuando ‖y - A c‖ ≤ τ‖y‖ o al agotar max_iter. Cuando el residuo
    recursivo cruza la tolerancia se recalcula el residuo verdadero y solo
    este declara la convergencia. `callback` recibe el iterado tras cada paso.
    """
    rhs = np.asarray(y, dtype=np.float64)
    c = np.zeros_like(rhs)
    y_norm = float(np.linalg.norm(rhs))
    if y_norm == 0.0:
        return c, RhsReport(iterations=0, residual=0.0, converged=True)

    precond = preconditioner if preconditioner is not None else (lambda v: v)
    r = rhs.copy()
    z = precond(r)
    p = z.copy()
    rz = float(r @ z)
    history: List[float] = []
    residual = 1.0
    converged = False
    iterations = 0

    for iterations in range(1, max_iter + 1):
        q = apply_a(p)
        curvature = float(p @ q)
        if curvature <= 0.0:
            raise BreakdownDetectedError(
                f"pᵀAp = {curvature:.3e} ≤ 0 en la iteración {iterations}"
            )
        alpha = rz / curvature
        c += alpha * p
        r -= alpha * q
        residual = float(np.linalg.norm(r)) / y_norm

        if residual <= tau:
            r = rhs - apply_a(c)
            residual = float(np.linalg.norm(r)) / y_norm
            if residual <= tau:
                history.append(residual)
                converged = True
                if callback is not None:
                    callback(c)
                break
        history.append(residual)
        if callback is not None:
            callback(c)

        z = precond(r)
        rz_next = float(r @ z)
        p = z + (rz_next / rz) * p
        rz = rz_next

    return c, RhsReport(
        iterations=iterations,
        residual=residual,
        converged=converged,
        residual_history=history,
    )


def energy_norm_error(
    c: ArrayLike,
    c_ref: ArrayLike,
    K: ArrayLike,
    lam: float,
) -> float:
    """
    ‖c − c_ref‖ en la norma de K + λI: √((c−c_ref)ᵀ(K+λI)(c−c_ref)).
    """
    diff = np.asarray(c, dtype=np.float64) - np.asarray(c_ref, dtype=np.float64)
    k_mat = np.asarray(K, dtype=np.float64)
    if k_mat.shape[0] != diff.shape[0]:
        raise DimensionMismatchError("c y K tienen dimensiones incompatibles")
    return math.sqrt(max(float(np.sum(diff * (k_mat @ diff + lam * diff))), 0.0))


# ---------------------------------------------------------------------------
# RLSC
# ---------------------------------------------------------------------------

def rlsc_encode(labels: ArrayLike, t: int) -> DenseMatrix:
    """
    Codificación uno contra todos: +1 en la clase verdadera y −1 en el resto.
    """
    if t < 2:
        raise ValueError("RLSC requiere al menos dos clases")
    idx = np.asarray(labels).astype(np.int64).ravel()
    if idx.size and (idx.min() < 0 or idx.max() >= t):
        raise UnknownLabelError(f"índices de clase fuera de [0, {t})")
    encoded = -np.ones((idx.size, t))
    encoded[np.arange(idx.size), idx] = 1.0
    return encoded


def rlsc_decode(scores: ArrayLike, label_map: Optional[LabelMap] = None) -> NDArray:
    """
    Argmax por filas (los empates van al índice más bajo). Con label_map se
    devuelven las etiquetas originales.
    """
    mat = np.atleast_2d(np.asarray(scores, dtype=np.float64))
    indices = np.argmax(mat, axis=1)
    if label_map is None:
        return indices
    if mat.shape[1] != label_map.num_classes:
        raise UnknownLabelError(
            f"{mat.shape[1]} columnas de puntuación para {label_map.num_classes} clases"
        )
    return np.asarray(label_map.classes)[indices]


def encode_labels(label_map: LabelMap, labels: ArrayLike) -> NDArray[np.int64]:
    """
    Índices de clase de unas etiquetas originales.
    """
    lookup = {value: i for i, value in enumerate(label_map.classes)}
    try:
        return np.array([lookup[float(v)] for v in np.asarray(labels).ravel()], dtype=np.int64)
    except KeyError as exc:
        raise UnknownLabelError(f"etiqueta {exc.args[0]} no está en el mapa de clases") from exc


# ---------------------------------------------------------------------------
# Modelos entrenados
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KrrModel:
    """
    Modelo f(x) = Σ_i C_i· k(x_i, x) con sus entradas de soporte.
    """
    kernel: KernelSpec
    X: DenseMatrix
    coef: DenseMatrix
    lam: float
    task: Task = Task.REGRESS
    label_map: Optional[LabelMap] = None
    seed: int = 0
    iterations: Tuple[int, ...] = ()
    converged: bool = True

    def __post_init__(self) -> None:
        if self.X.shape[0] != self.coef.shape[0]:
            raise DimensionMismatchError("X y C deben tener el mismo número de filas")

    @property
    def d(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class RandomFeaturesModel:
    """
    Modelo sketch-and-solve f(x) = φ(x)ᵀW con la cadena ya realizada.
    """
    chain: SketchChain
    weights: DenseMatrix
    task: Task = Task.REGRESS
    label_map: Optional[LabelMap] = None


@dataclass
class TrainResult:
    """
    Modelo entrenado, informe de PCG e historial del test de calidad.
    """
    model: KrrModel
    report: PcgReport
    quality_history: List[QualityReport] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Servicio
# ---------------------------------------------------------------------------

class KrrSolverService:
    """
    Orquesta el entrenamiento y la predicción.

    K y el precondicionador se construyen una vez y se comparten entre los
    lados derechos, que se resuelven de forma secuencial.
    """

    # -------------------- API pública --------------------

    def train(self, dataset: Dataset, kernel: KernelSpec, config: SolverConfig) -> TrainResult:
        """
        Entrena un modelo KRR resolviendo (K + λI)C = Y con PCG.

        La falta de convergencia de algún lado derecho queda en el informe;
        el modelo se devuelve igualmente.
        """
        start = time.time()
        label_map, targets = self._targets(dataset, config)
        k_mat = kernels.gram_matrix(kernel, dataset.X)

        preconditioner: Optional[Preconditioner] = None
        sketch_size: Optional[int] = None
        quality_history: List[QualityReport] = []
        quality_passed: Optional[bool] = None

        if config.use_preconditioner:
            if config.adaptive:
                adaptive = self._adaptive(k_mat, dataset, kernel, config)
                quality_history = adaptive.history
                quality_passed = adaptive.last_report.passed
                preconditioner = adaptive.preconditioner
                sketch_size = adaptive.chain.output_dim
            else:
                chain = build_chain(kernel, config.chain, dataset.d, config.seed)
                preconditioner = build_preconditioner(chain.apply(dataset.X), config.lambda_p)
                sketch_size = chain.output_dim
        setup_time = time.time() - start

        coef, report = self.solve(k_mat, config.lam, targets, preconditioner, config.tau, config.max_iter)
        report.setup_time_sec = setup_time
        report.sketch_size = sketch_size
        report.quality_passed = quality_passed

        if not report.converged:
            logger.warning(
                "PCG no convergió para todos los lados derechos (tau=%.1e, max_iter=%d).",
                config.tau, config.max_iter,
            )
        logger.info(
            "Entrenamiento completado: n=%d, t=%d, s=%s, iteraciones=%s, setup=%.3fs, pcg=%.3fs",
            dataset.n, targets.shape[1], sketch_size,
            [r.iterations for r in report.per_rhs], setup_time, report.wall_time_sec,
        )

        model = KrrModel(
            kernel=kernel,
            X=dataset.X,
            coef=coef,
            lam=config.lam,
            task=config.task,
            label_map=label_map,
            seed=config.seed,
            iterations=tuple(r.iterations for r in report.per_rhs),
            converged=report.converged,
        )
        return TrainResult(model, report, quality_history)

    def solve(
        self,
        k_mat: DenseMatrix,
        lam: float,
        targets: DenseMatrix,
        preconditioner: Optional[Preconditioner],
        tau: float,
        max_iter: int,
    ) -> Tuple[DenseMatrix, PcgReport]:
        """
        PCG secuencial por columna de `targets`, compartiendo K y el precondicionador.
        """
        matvecs = 0

        def apply_a(v: NDArray[np.float64]) -> NDArray[np.float64]:
            nonlocal matvecs
            matvecs += 1
            return k_mat @ v + lam * v

        start = time.time()
        coef = np.zeros_like(targets)
        per_rhs: List[RhsReport] = []
        for j in range(targets.shape[1]):
            coef[:, j], rhs_report = pcg_solve(
                apply_a, targets[:, j], preconditioner, tau=tau, max_iter=max_iter
            )
            per_rhs.append(rhs_report)

        return coef, PcgReport(
            per_rhs=per_rhs,
            matvecs=matvecs,
            wall_time_sec=time.time() - start,
            preconditioned=preconditioner is not None,
        )

    def predict(self, model: KrrModel, Xq: ArrayLike) -> DenseMatrix:
        """
        Puntuaciones K(Xq, X)·C (m×t).
        """
        return kernels.cross_kernel(model.kernel, Xq, model.X) @ model.coef

    def classify(self, model: KrrModel, Xq: ArrayLike) -> NDArray:
        """
        Etiquetas originales: argmax de las puntuaciones a través del mapa de clases.
        """
        return rlsc_decode(self.predict(model, Xq), model.label_map)

    def train_random_features_baseline(
        self,
        dataset: Dataset,
        kernel: KernelSpec,
        config: SolverConfig,
    ) -> RandomFeaturesModel:
        """
        Sketch-and-solve: W = (ZᵀZ + λI_s)⁻¹ZᵀY por Cholesky.

        La cadena realizada se guarda en el modelo para aplicar exactamente el
        mismo mapa a las consultas.
        """
        label_map, targets = self._targets(dataset, config)
        chain = build_chain(kernel, config.chain, dataset.d, config.seed)
        z_mat = chain.apply(dataset.X)
        gram = z_mat.T @ z_mat
        gram = 0.5 * (gram + gram.T)
        gram[np.diag_indices(gram.shape[0])] += config.lam
        l_factor = cholesky(gram)
        half = triangular_solve(l_factor, z_mat.T @ targets, lower=True)
        weights = triangular_solve(l_factor, half, lower=True, transpose=True)
        logger.info("Línea base de random features entrenada (s=%d).", chain.output_dim)
        return RandomFeaturesModel(chain, weights, config.task, label_map)

    def predict_baseline(self, model: RandomFeaturesModel, Xq: ArrayLike) -> DenseMatrix:
        return model.chain.apply(Xq) @ model.weights

    def classify_baseline(self, model: RandomFeaturesModel, Xq: ArrayLike) -> NDArray:
        return rlsc_decode(self.predict_baseline(model, Xq), model.label_map)

    # -------------------- Helpers internos --------------------

    def _targets(self, dataset: Dataset, config: SolverConfig) -> Tuple[Optional[LabelMap], DenseMatrix]:
        """
        Lados derechos del sistema: y tal cual en regresión, RLSC en clasificación.
        """
        if config.task == Task.REGRESS:
            return None, dataset.y
        if dataset.label_map is None and np.unique(dataset.y[:, 0]).size < 2:
            raise ValueError("la clasificación necesita al menos dos clases distintas")
        label_map = dataset.label_map or LabelMap.from_labels(dataset.y[:, 0])
        indices = encode_labels(label_map, dataset.y[:, 0])
        return label_map, rlsc_encode(indices, label_map.num_classes)

    def _adaptive(
        self,
        k_mat: DenseMatrix,
        dataset: Dataset,
        kernel: KernelSpec,
        config: SolverConfig,
    ) -> AdaptiveResult:
        try:
            return adaptive_build(
                k_mat,
                dataset.X,
                kernel,
                config.chain,
                config.lam,
                lambda_p=config.lambda_p,
                s0=config.s0,
                s_max=config.s_max,
                seed=config.seed,
            )
        except BudgetExhaustedError as exc:
            logger.warning("%s; se continúa con el último intento (s=%d).", exc, exc.last_report.sketch_size)
            return exc.fallback


# Instancia "singleton" sencilla y función de dependencia para FastAPI
_solver_service = KrrSolverService()


def get_solver_service() -> KrrSolverService:
    """
    Función usada por FastAPI para inyectar KrrSolverService mediante Depends().
    """
    return _solver_service
