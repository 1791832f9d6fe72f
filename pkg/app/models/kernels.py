"""
Modelos Pydantic relacionados con la definición de kernels.
"""

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field


class KernelFamily(str, Enum):
    """
    Familias de kernel soportadas.
    """
    GAUSSIAN = "gaussian"
    POLYNOMIAL = "polynomial"


class KernelSpec(BaseModel):
    """
    Familia de kernel y sus hiperparámetros.

    - Gaussiano: k(x, z) = exp(-‖x - z‖² / 2σ²).
    - Polinómico: k(x, z) = (γ·xᵀz + c)^q.

    Los campos que no aplican a la familia elegida se ignoran.
    """
    model_config = ConfigDict(frozen=True)

    family: KernelFamily = Field(
        KernelFamily.GAUSSIAN,
        description="Familia del kernel.",
    )
    sigma: float = Field(
        1.0,
        gt=0,
        description="Ancho de banda del kernel gaussiano (unidades de la entrada).",
    )
    gamma: float = Field(
        1.0,
        gt=0,
        description="Escala del producto escalar en el kernel polinómico.",
    )
    offset: float = Field(
        0.0,
        ge=0,
        description="Término constante c del kernel polinómico.",
    )
    degree: int = Field(
        2,
        ge=1,
        description="Grado q del kernel polinómico.",
    )

    @property
    def is_gaussian(self) -> bool:
        return self.family == KernelFamily.GAUSSIAN

    def describe(self) -> str:
        if self.is_gaussian:
            return f"gaussian(sigma={self.sigma:g})"
        return f"poly(gamma={self.gamma:g}, c={self.offset:g}, q={self.degree})"
