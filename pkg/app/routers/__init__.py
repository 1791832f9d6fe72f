"""
Routers de FastAPI agrupados por dominio:
- krr_router: entrenamiento, predicción y dimensión estadística.
- misc_router: endpoints auxiliares (/health, /).
"""

from .krr_router import router as krr_router
from .misc_router import router as misc_router

__all__ = [
    "krr_router",
    "misc_router",
]
