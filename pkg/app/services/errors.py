"""
Jerarquía de errores de dominio de SketchKRR.

Los servicios lanzan estas excepciones; los routers las traducen a
HTTPException y la CLI a códigos de salida. Ningún servicio conoce HTTP.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Any, List, Optional

if TYPE_CHECKING:  # pragma: no cover
    from app.models.precond import QualityReport


class KrrError(Exception):
    """
    Error base de la aplicación.
    """


# -------------------- Numéricos --------------------


class NotPositiveDefiniteError(KrrError):
    """Pivote no positivo durante la factorización de Cholesky."""


class SingularTriangularError(KrrError):
    """Diagonal (casi) nula en un sistema triangular."""


class LengthNotPowerOfTwoError(KrrError):
    """La longitud de entrada de la FWHT no es potencia de dos."""


class NoConvergenceError(KrrError):
    """Un método iterativo agotó su límite de iteraciones."""


class DimensionMismatchError(KrrError):
    """Dimensiones incompatibles entre operandos."""


class BreakdownDetectedError(KrrError):
    """PCG encontró pᵀAp ≤ 0: operador no definido positivo o redondeo fatal."""


# -------------------- Kernels y sketches --------------------


class NonPositiveLambdaError(KrrError):
    """El parámetro de regularización debe ser estrictamente positivo."""


class InvalidDeltaError(KrrError):
    """Probabilidad de fallo fuera de (0, 1]."""


class IncompatibleSketchError(KrrError):
    """La transformación aleatoria no corresponde a la familia de kernel."""


# -------------------- Precondicionador --------------------


class BudgetExhaustedError(KrrError):
    """
    El bucle adaptativo alcanzó s_max sin superar el test de calidad.

    Transporta el último informe, el historial completo y el precondicionador
    del último intento, para que el llamador decida si continúa con él.
    """

    def __init__(
        self,
        message: str,
        last_report: "QualityReport",
        history: List["QualityReport"],
        fallback: Optional[Any] = None,
    ) -> None:
        super().__init__(message)
        self.last_report = last_report
        self.history = history
        self.fallback = fallback


# -------------------- Datos y modelos --------------------


class UnknownLabelError(KrrError):
    """Etiqueta que no figura en el mapa de clases."""


class ParseError(KrrError):
    """
    Línea mal formada en un fichero de datos.
    """

    def __init__(self, message: str, line_number: int) -> None:
        super().__init__(f"línea {line_number}: {message}")
        self.line_number = line_number


class EmptyFileError(KrrError):
    """El fichero de datos no contiene ninguna muestra."""


class ModelFormatError(KrrError):
    """Fichero de modelo corrupto o de versión desconocida."""


class ModelNotFoundError(KrrError):
    """No hay ningún modelo registrado con ese nombre."""
