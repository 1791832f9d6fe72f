"""
Modelos Pydantic de informes: métricas, benchmark, dimensión estadística
y salida JSON de la línea de comandos.
"""

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from app.models.precond import QualityReport
from app.models.solver import RhsReport, Task


class Metrics(BaseModel):
    """
    Métrica de evaluación de un modelo sobre un conjunto de datos.

    En clasificación se informa la tasa de error (fracción mal clasificada);
    en regresión el error cuadrático medio.
    """
    task: Task
    n: int = Field(..., ge=0, description="Número de muestras evaluadas.")
    error_rate: Optional[float] = Field(
        None,
        ge=0.0,
        le=1.0,
        description="Fracción de muestras mal clasificadas (solo clasificación).",
    )
    mse: Optional[float] = Field(
        None,
        ge=0.0,
        description="Error cuadrático medio (solo regresión).",
    )
    iterations: Optional[List[int]] = Field(None, description="Iteraciones de PCG del modelo, si se conocen.")
    wall_time_sec: Optional[float] = Field(None, description="Tiempo de la evaluación, en segundos.")

    @property
    def value(self) -> float:
        return self.error_rate if self.task == Task.CLASSIFY else self.mse


class ResourceUsageSample(BaseModel):
    """
    Uso de memoria del proceso alrededor de una ejecución del benchmark.
    """
    mem_rss_before: int = Field(..., description="Memoria RSS antes de la ejecución (bytes).")
    mem_rss_after: int = Field(..., description="Memoria RSS después de la ejecución (bytes).")
    mem_rss_delta: int = Field(..., description="mem_rss_after - mem_rss_before (bytes).")


class BenchRow(BaseModel):
    """
    Una fila de la comparativa de métodos.
    """
    method: str = Field(..., description="Nombre del método (pcg, cg, random_features, ...).")
    iterations: int = Field(0, ge=0, description="Máximo de iteraciones entre lados derechos.")
    converged: bool = Field(True, description="Convergencia para todos los lados derechos.")
    sketch_size: Optional[int] = Field(None, description="Tamaño del sketch, si aplica.")
    lambda_p: Optional[float] = Field(None, description="λ_p del precondicionador, si aplica.")
    tau: Optional[float] = Field(None, description="Tolerancia de PCG, si aplica.")
    time_sec: float = Field(..., ge=0, description="Tiempo de entrenamiento.")
    train_metric: float = Field(..., description="Métrica sobre el conjunto de entrenamiento.")
    test_metric: float = Field(..., description="Métrica sobre el conjunto de prueba.")
    resources: Optional[ResourceUsageSample] = None


class BenchReport(BaseModel):
    """
    Resultado completo del benchmark.
    """
    task: Task
    n_train: int
    n_test: int
    metric_name: str = Field(..., description="error_rate o mse.")
    rows: List[BenchRow]
    stats_text: Optional[str] = Field(
        None,
        description="Salida de pstats ordenada por tiempo acumulado (con --profile).",
    )


class StatdimReport(BaseModel):
    """
    Dimensión estadística s_λ(K) y tamaños de sketch teóricos.
    """
    n: int
    lam: float
    s_lambda: float
    delta: float
    degree: Optional[int] = None
    sketch_size_one_level: Optional[int] = None
    sketch_size_two_level: Optional[int] = None
    top_eigenvalues: List[float] = Field(default_factory=list)


class CommandReport(BaseModel):
    """
    Esquema JSON común de la salida de la CLI (--json).
    """
    command: str
    config: Dict[str, Any] = Field(default_factory=dict)
    per_rhs: List[RhsReport] = Field(default_factory=list)
    metric: Optional[Metrics] = None
    wall_time_sec: float = 0.0
    quality_history: List[QualityReport] = Field(default_factory=list)
    extra: Dict[str, Any] = Field(default_factory=dict)
