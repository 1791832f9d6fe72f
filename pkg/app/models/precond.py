"""
Modelos Pydantic del test de calidad del precondicionador.
"""

from typing import Tuple

from pydantic import BaseModel, Field


class QualityReport(BaseModel):
    """
    Resultado del test de calidad sobre (K, Z).

    - Condición 1: ‖(I-P)K(I-P)‖ ≤ 0.1·λ, estimada por iteración de potencia.
    - Condición 2: autovalores extremos de Σ⁻¹(BᵀKB)Σ⁻¹ dentro de [0.9, 1.1].

    P proyecta sobre los vectores singulares izquierdos de Z con σ² > 0.05·λ.
    Con P = 0 la condición 2 es vacía y ambos cocientes valen 1.
    """
    passed: bool = Field(..., description="Ambas condiciones se cumplen.")
    sketch_size: int = Field(..., ge=0, description="Número de columnas de Z.")
    rank_of_p: int = Field(..., ge=0, description="Rango de la proyección P.")
    cond1_value: float = Field(..., description="Estimación de ‖(I-P)K(I-P)‖.")
    cond1_converged: bool = Field(True, description="Si la iteración de potencia convergió.")
    cond2_ratio_low: float = Field(..., description="Menor autovalor generalizado en range(P).")
    cond2_ratio_high: float = Field(..., description="Mayor autovalor generalizado en range(P).")
    cond1_threshold: float = Field(..., description="Umbral 0.1·λ de la condición 1.")
    retain_threshold: float = Field(..., description="Umbral 0.05·λ para retener direcciones.")
    ratio_band: Tuple[float, float] = Field((0.9, 1.1), description="Banda de la condición 2.")
