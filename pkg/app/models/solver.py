"""
Modelos Pydantic de configuración del solver y de sus informes.
"""

import math
from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class Task(str, Enum):
    """
    Tarea de aprendizaje.
    """
    CLASSIFY = "classify"
    REGRESS = "regress"


class FeatureMapKind(str, Enum):
    """
    Primera etapa de la cadena de sketches.
    """
    RFF = "rff"
    TENSORSKETCH = "tensorsketch"


DEFAULT_TAU = {Task.CLASSIFY: 1e-3, Task.REGRESS: 1e-5}


class ChainSpec(BaseModel):
    """
    Plantilla de cadena de sketches (algoritmo multinivel).

    s2 = 0 omite la etapa SRHT y s3 = 0 omite la etapa gaussiana.
    """
    model_config = ConfigDict(frozen=True)

    feature_map: FeatureMapKind = Field(
        FeatureMapKind.RFF,
        description="Transformación aleatoria de la primera etapa.",
    )
    s1: int = Field(256, ge=1, description="Tamaño de la primera etapa.")
    s2: int = Field(0, ge=0, description="Tamaño de la etapa SRHT (0 = omitir).")
    s3: int = Field(0, ge=0, description="Tamaño de la etapa gaussiana (0 = omitir).")

    @model_validator(mode="after")
    def _check_sizes(self) -> "ChainSpec":
        previous = self.s1
        for name, size in (("s2", self.s2), ("s3", self.s3)):
            if size == 0:
                continue
            if size > previous:
                raise ValueError(f"{name}={size} no puede superar la etapa anterior ({previous})")
            previous = size
        return self

    @property
    def output_size(self) -> int:
        """Tamaño s de la última etapa presente."""
        return self.s3 or self.s2 or self.s1

    def scaled_to(self, s: int) -> "ChainSpec":
        """
        Reescala la plantilla para que su salida sea s, conservando las
        proporciones entre niveles.
        """
        factor = s / self.output_size
        sizes = []
        previous = None
        for size in (self.s1, self.s2, self.s3):
            if size == 0:
                sizes.append(0)
                continue
            scaled = max(1, math.ceil(size * factor))
            if previous is not None:
                scaled = min(scaled, previous)
            sizes.append(scaled)
            previous = scaled
        # la última etapa presente es exactamente s
        last = max(i for i, size in enumerate(sizes) if size)
        sizes[last] = s
        for i in range(last):
            if sizes[i]:
                sizes[i] = max(sizes[i], s)
        return self.model_copy(update={"s1": sizes[0], "s2": sizes[1], "s3": sizes[2]})


class SolverConfig(BaseModel):
    """
    Configuración completa de un entrenamiento.

    tau toma por defecto 1e-3 en clasificación y 1e-5 en regresión;
    lambda_p toma por defecto el valor de lam (el caso cubierto por la teoría).
    """
    task: Task = Field(Task.REGRESS, description="Clasificación (RLSC) o regresión.")
    lam: float = Field(..., gt=0, description="Parámetro de regularización λ.")
    lambda_p: Optional[float] = Field(
        None,
        gt=0,
        description="λ_p del precondicionador; por defecto igual a lam.",
    )
    tau: Optional[float] = Field(
        None,
        gt=0,
        description="Tolerancia relativa del residuo ‖y - (K+λI)c‖ ≤ τ‖y‖.",
    )
    max_iter: int = Field(1000, ge=1, description="Máximo de iteraciones de PCG por lado derecho.")
    chain: ChainSpec = Field(default_factory=ChainSpec, description="Cadena de sketches.")
    adaptive: bool = Field(False, description="Dimensionar s con el test de calidad y duplicación.")
    s0: Optional[int] = Field(None, ge=1, description="Tamaño inicial del bucle adaptativo.")
    s_max: Optional[int] = Field(None, ge=1, description="Tamaño máximo del bucle adaptativo.")
    use_preconditioner: bool = Field(
        True,
        description="False resuelve con CG sin precondicionar (comparativa).",
    )
    seed: int = Field(0, description="Semilla maestra; fija toda la aleatoriedad.")

    @model_validator(mode="after")
    def _fill_defaults(self) -> "SolverConfig":
        if self.tau is None:
            self.tau = DEFAULT_TAU[self.task]
        if self.lambda_p is None:
            self.lambda_p = self.lam
        return self


class RhsReport(BaseModel):
    """
    Resultado de PCG para un lado derecho.
    """
    iterations: int = Field(..., ge=0, description="Iteraciones realizadas.")
    residual: float = Field(..., ge=0, description="Residuo relativo final ‖y - Ac‖/‖y‖.")
    converged: bool = Field(..., description="Si se alcanzó la tolerancia.")
    residual_history: List[float] = Field(
        default_factory=list,
        description="Residuo relativo tras cada iteración.",
    )


class PcgReport(BaseModel):
    """
    Informe agregado de un entrenamiento (uno o varios lados derechos).
    """
    per_rhs: List[RhsReport] = Field(default_factory=list)
    matvecs: int = Field(0, ge=0, description="Productos con K+λI realizados.")
    wall_time_sec: float = Field(0.0, ge=0, description="Tiempo total de resolución.")
    setup_time_sec: float = Field(0.0, ge=0, description="Tiempo de Gram + sketch + precondicionador.")
    preconditioned: bool = Field(True, description="Si se usó precondicionador.")
    sketch_size: Optional[int] = Field(None, description="Tamaño s del sketch usado.")
    quality_passed: Optional[bool] = Field(
        None,
        description="Resultado del test de calidad (solo en modo adaptativo).",
    )

    @property
    def converged(self) -> bool:
        """Convergencia para todos los lados derechos."""
        return all(r.converged for r in self.per_rhs)

    @property
    def max_iterations(self) -> int:
        return max((r.iterations for r in self.per_rhs), default=0)
