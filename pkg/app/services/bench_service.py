"""
Benchmark de métodos de resolución y cálculo de métricas.

Compara, sobre una misma partición entrenamiento/prueba:
- PCG con precondicionador de random features.
- CG sin precondicionar.
- La línea base sketch-and-solve.

Opcionalmente añade filas por factor de λ_p y por tolerancia, mide la
memoria RSS de cada fila con psutil y perfila la ejecución con cProfile.
"""

from __future__ import annotations

import cProfile
import io
import logging
import pstats
import time
from typing import Callable, List, Optional, Sequence, Tuple, TypeVar

import numpy as np
import psutil
from numpy.typing import ArrayLike

from app.models.kernels import KernelSpec
from app.models.reports import BenchReport, BenchRow, Metrics, ResourceUsageSample
from app.models.solver import SolverConfig, Task
from app.services.kernels import Dataset
from app.services.solver_service import KrrModel, KrrSolverService, get_solver_service

logger = logging.getLogger(__name__)

T = TypeVar("T")

PROFILE_TOP_FUNCTIONS = 40


def compute_metrics(task: Task, y_true: ArrayLike, predicted: ArrayLike) -> Metrics:
    """
    Tasa de error (clasificación, sobre etiquetas) o MSE (regresión, sobre
    todas las columnas).
    """
    truth = np.asarray(y_true, dtype=np.float64)
    pred = np.asarray(predicted, dtype=np.float64)
    if task == Task.CLASSIFY:
        truth = truth.ravel()
        pred = pred.ravel()
        error_rate = float(np.mean(pred != truth)) if truth.size else 0.0
        return Metrics(task=task, n=truth.size, error_rate=error_rate)
    pred = pred.reshape(truth.shape)
    mse = float(np.mean((pred - truth) ** 2)) if truth.size else 0.0
    return Metrics(task=task, n=truth.shape[0], mse=mse)


def evaluate_model(solver: KrrSolverService, model: KrrModel, dataset: Dataset) -> Metrics:
    """
    Métrica de un modelo KRR sobre un conjunto de datos.
    """
    start = time.time()
    if model.task == Task.CLASSIFY:
        metrics = compute_metrics(model.task, dataset.y[:, 0], solver.classify(model, dataset.X))
    else:
        metrics = compute_metrics(model.task, dataset.y, solver.predict(model, dataset.X))
    metrics.iterations = list(model.iterations)
    metrics.wall_time_sec = time.time() - start
    return metrics


class BenchService:
    """
    Ejecuta la comparativa y devuelve un BenchReport.
    """

    def __init__(self, solver: KrrSolverService) -> None:
        self._solver = solver

    # -------------------- API pública --------------------

    def run(
        self,
        train: Dataset,
        test: Dataset,
        kernel: KernelSpec,
        config: SolverConfig,
        lambda_p_factors: Sequence[float] = (),
        tau_grid: Sequence[float] = (),
        profile: bool = False,
    ) -> BenchReport:
        profiler = cProfile.Profile() if profile else None
        start = time.time()
        rows: List[BenchRow] = []

        logger.info(
            "Iniciando benchmark (n_train=%d, n_test=%d, %s, lambda=%.3g)...",
            train.n, test.n, kernel.describe(), config.lam,
        )
        try:
            if profiler is not None:
                profiler.enable()

            rows.append(self._krr_row("pcg", train, test, kernel, config))
            rows.append(
                self._krr_row("cg", train, test, kernel, config.model_copy(update={"use_preconditioner": False}))
            )
            rows.append(self._baseline_row(train, test, kernel, config))
            for factor in lambda_p_factors:
                variant = config.model_copy(update={"lambda_p": factor * config.lam})
                rows.append(self._krr_row(f"pcg lambda_p={factor:g}*lambda", train, test, kernel, variant))
            for tau in tau_grid:
                variant = config.model_copy(update={"tau": tau})
                rows.append(self._krr_row(f"pcg tau={tau:g}", train, test, kernel, variant))
        finally:
            if profiler is not None:
                profiler.disable()

        stats_text = self._finalize_profile(profiler, start) if profiler is not None else None
        return BenchReport(
            task=config.task,
            n_train=train.n,
            n_test=test.n,
            metric_name="error_rate" if config.task == Task.CLASSIFY else "mse",
            rows=rows,
            stats_text=stats_text,
        )

    # -------------------- Helpers internos --------------------

    def _krr_row(
        self,
        method: str,
        train: Dataset,
        test: Dataset,
        kernel: KernelSpec,
        config: SolverConfig,
    ) -> BenchRow:
        result, elapsed, resources = _measure(lambda: self._solver.train(train, kernel, config))
        train_metric = evaluate_model(self._solver, result.model, train)
        test_metric = evaluate_model(self._solver, result.model, test)
        logger.info(
            "Fila '%s': iteraciones=%d, convergió=%s, tiempo=%.3fs",
            method, result.report.max_iterations, result.report.converged, elapsed,
        )
        return BenchRow(
            method=method,
            iterations=result.report.max_iterations,
            converged=result.report.converged,
            sketch_size=result.report.sketch_size,
            lambda_p=config.lambda_p if config.use_preconditioner else None,
            tau=config.tau,
            time_sec=elapsed,
            train_metric=train_metric.value,
            test_metric=test_metric.value,
            resources=resources,
        )

    def _baseline_row(
        self,
        train: Dataset,
        test: Dataset,
        kernel: KernelSpec,
        config: SolverConfig,
    ) -> BenchRow:
        model, elapsed, resources = _measure(
            lambda: self._solver.train_random_features_baseline(train, kernel, config)
        )
        if config.task == Task.CLASSIFY:
            train_metric = compute_metrics(config.task, train.y[:, 0], self._solver.classify_baseline(model, train.X))
            test_metric = compute_metrics(config.task, test.y[:, 0], self._solver.classify_baseline(model, test.X))
        else:
            train_metric = compute_metrics(config.task, train.y, self._solver.predict_baseline(model, train.X))
            test_metric = compute_metrics(config.task, test.y, self._solver.predict_baseline(model, test.X))
        return BenchRow(
            method="random_features",
            sketch_size=model.chain.output_dim,
            time_sec=elapsed,
            train_metric=train_metric.value,
            test_metric=test_metric.value,
            resources=resources,
        )

    def _finalize_profile(self, profiler: cProfile.Profile, start_time: float) -> str:
        """
        Genera el texto de estadísticas de cProfile (top por tiempo acumulado).
        """
        buffer = io.StringIO()
        stats = pstats.Stats(profiler, stream=buffer).sort_stats("cumtime")
        stats.print_stats(PROFILE_TOP_FUNCTIONS)
        logger.info("Benchmark perfilado en %.3fs.", time.time() - start_time)
        return buffer.getvalue()


def _measure(func: Callable[[], T]) -> Tuple[T, float, ResourceUsageSample]:
    """
    Ejecuta func midiendo tiempo y RSS del proceso antes y después.
    """
    proc = psutil.Process()
    mem_before = proc.memory_info().rss
    start = time.time()
    result = func()
    elapsed = time.time() - start
    mem_after = proc.memory_info().rss
    return result, elapsed, ResourceUsageSample(
        mem_rss_before=mem_before,
        mem_rss_after=mem_after,
        mem_rss_delta=mem_after - mem_before,
    )


def format_bench_table(report: BenchReport) -> str:
    """
    Tabla de texto: una fila por método.
    """
    header = f"{'method':<28} {'iters':>6} {'conv':>5} {'s':>6} {'time_s':>9} {'train_' + report.metric_name:>16} {'test_' + report.metric_name:>16}"
    lines = [header, "-" * len(header)]
    for row in report.rows:
        sketch = "-" if row.sketch_size is None else str(row.sketch_size)
        lines.append(
            f"{row.method:<28} {row.iterations:>6} {('yes' if row.converged else 'no'):>5} {sketch:>6} "
            f"{row.time_sec:>9.3f} {row.train_metric:>16.6g} {row.test_metric:>16.6g}"
        )
    return "\n".join(lines)


_bench_service: Optional[BenchService] = None


def get_bench_service() -> BenchService:
    """
    Instancia compartida de BenchService sobre el solver global.
    """
    global _bench_service
    if _bench_service is None:
        _bench_service = BenchService(get_solver_service())
    return _bench_service
