"""
Router con endpoints auxiliares:
- /health: verificación de salud.
- /: información básica de la API.
"""

import time

from fastapi import APIRouter

from app import __app_name__, __version__
from app.models.api import HealthResponse

router = APIRouter(tags=["misc"])


@router.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    """
    Endpoint de salud simple para verificar que la API está viva.
    """
    return HealthResponse(status="ok", time=time.time())


@router.get("/")
def root():
    """
    Información básica de la API y endpoints principales.
    """
    return {
        "title": __app_name__,
        "version": __version__,
        "description": "Kernel ridge regression con PCG precondicionado por sketches de random features.",
        "endpoints": {
            "models": "/models",
            "predict": "/models/{name}/predict",
            "train": "/train",
            "statdim": "/statdim",
            "health": "/health",
        },
        "note": (
            "Los modelos se cargan al arrancar desde KRR_MODEL_PATHS "
            "(ficheros KRRM separados por os.pathsep) o se entrenan con POST /train."
        ),
    }
