"""
Cuerpos de petición y respuesta de la API HTTP.
"""

from typing import List, Optional

from pydantic import BaseModel, Field

from app.models.kernels import KernelSpec
from app.models.solver import SolverConfig


class PredictRequest(BaseModel):
    inputs: List[List[float]] = Field(..., min_length=1, description="Consultas (m×d).")


class PredictResponse(BaseModel):
    model: str
    scores: List[List[float]] = Field(..., description="Puntuaciones K(Xq, X)·C (m×t).")
    labels: Optional[List[float]] = Field(
        None,
        description="Etiquetas originales (solo modelos de clasificación).",
    )


class TrainRequest(BaseModel):
    """
    Entrenamiento vía HTTP; el modelo resultante se registra como `name`.
    """
    name: str = Field(..., min_length=1, description="Nombre con el que registrar el modelo.")
    inputs: List[List[float]] = Field(..., min_length=1, description="Entradas de entrenamiento (n×d).")
    targets: List[float] = Field(..., min_length=1, description="Etiquetas u objetivos (n).")
    kernel: KernelSpec = Field(default_factory=KernelSpec)
    config: SolverConfig


class StatdimRequest(BaseModel):
    inputs: List[List[float]] = Field(..., min_length=1, description="Entradas (n×d).")
    kernel: KernelSpec = Field(default_factory=KernelSpec)
    lam: float = Field(..., gt=0, description="Parámetro de regularización λ.")
    delta: float = Field(1.0, gt=0, le=1, description="Probabilidad de fallo δ.")


class HealthResponse(BaseModel):
    status: str
    time: float
