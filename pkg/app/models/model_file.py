"""
Modelos Pydantic persistidos en el fichero de modelo (cabecera JSON).
"""

from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.models.kernels import KernelSpec
from app.models.solver import Task


class LabelMap(BaseModel):
    """
    Correspondencia entre etiquetas originales y índices de clase 0..t-1.
    """
    model_config = ConfigDict(frozen=True)

    classes: List[float] = Field(
        ...,
        min_length=2,
        description="Etiquetas originales ordenadas; la posición es el índice de clase.",
    )

    @field_validator("classes")
    @classmethod
    def _sorted_unique(cls, value: List[float]) -> List[float]:
        if len(set(value)) != len(value):
            raise ValueError("las etiquetas de clase deben ser únicas")
        return sorted(value)

    @classmethod
    def from_labels(cls, labels: np.ndarray) -> "LabelMap":
        return cls(classes=[float(c) for c in np.unique(labels)])

    @property
    def num_classes(self) -> int:
        return len(self.classes)


class ModelMetadata(BaseModel):
    """
    Metadatos JSON del fichero de modelo (KRRM).
    """
    kernel: KernelSpec
    lam: float = Field(..., gt=0, description="Parámetro de regularización λ.")
    n: int = Field(..., ge=1, description="Número de puntos de soporte.")
    d: int = Field(..., ge=1, description="Dimensión de la entrada.")
    t: int = Field(..., ge=1, description="Número de columnas de coeficientes.")
    task: Task = Field(Task.REGRESS, description="Tarea con la que se entrenó el modelo.")
    label_map: Optional[LabelMap] = Field(
        None,
        description="Mapa de clases (solo clasificación).",
    )
    seed: int = Field(0, description="Semilla maestra del entrenamiento.")
    iterations: List[int] = Field(
        default_factory=list,
        description="Iteraciones de PCG por lado derecho.",
    )
    converged: bool = Field(True, description="Si PCG convergió para todos los lados derechos.")
    tool_version: str = Field(..., description="Versión de SketchKRR que escribió el fichero.")
