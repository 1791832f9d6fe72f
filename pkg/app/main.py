"""
Punto de entrada HTTP de SketchKRR.

Se encarga de:
- Crear la instancia de FastAPI.
- Incluir los routers de KRR y utilidades.
- Registrar en el arranque los modelos listados en KRR_MODEL_PATHS.
"""

import logging
import os
from contextlib import asynccontextmanager
from pathlib import Path
from typing import AsyncIterator, Dict, Optional

from fastapi import FastAPI

from app import __app_name__, __version__
from app.routers.krr_router import router as krr_router
from app.routers.misc_router import router as misc_router
from app.services.model_store_service import get_model_registry, load_model

logger = logging.getLogger(__name__)

MODEL_PATHS_ENV = "KRR_MODEL_PATHS"


def model_paths_from_env() -> Dict[str, str]:
    """
    Lee KRR_MODEL_PATHS; cada entrada es PATH o NAME=PATH. Sin nombre se usa
    el nombre del fichero sin extensión.
    """
    paths: Dict[str, str] = {}
    for entry in os.environ.get(MODEL_PATHS_ENV, "").split(os.pathsep):
        entry = entry.strip()
        if not entry:
            continue
        name, sep, path = entry.partition("=")
        if not sep:
            name, path = Path(entry).stem, entry
        paths[name] = path
    return paths


def create_app(models: Optional[Dict[str, str]] = None) -> FastAPI:
    """
    Crea y configura la aplicación FastAPI.

    `models` (nombre -> ruta) se suma a lo indicado en KRR_MODEL_PATHS.
    """
    to_load = {**model_paths_from_env(), **(models or {})}

    @asynccontextmanager
    async def lifespan(_: FastAPI) -> AsyncIterator[None]:
        registry = get_model_registry()
        for name, path in to_load.items():
            try:
                registry.register(name, load_model(path))
            except Exception:
                logger.exception("No se pudo cargar el modelo '%s' desde '%s'.", name, path)
        yield

    app = FastAPI(
        title=__app_name__,
        version=__version__,
        description=(
            "API para entrenar y consultar modelos de kernel ridge regression. "
            "El sistema (K + λI)c = y se resuelve con gradiente conjugado "
            "precondicionado por sketches de random features."
        ),
        lifespan=lifespan,
    )

    app.include_router(krr_router)
    app.include_router(misc_router)
    return app


# Instancia global utilizada por Uvicorn
app = create_app()
