"""
Persistencia de modelos (formato KRRM) y registro en memoria de modelos
cargados para la API.

Formato del fichero:
- "KRRM" (4 bytes), versión u32 = 1, longitud u32 de los metadatos.
- Metadatos JSON en UTF-8 (ModelMetadata).
- X (n×d) y C (n×t) como float64 little-endian en orden fila.
"""

from __future__ import annotations

import logging
import struct
from pathlib import Path
from typing import Dict, List, Union

import numpy as np
from pydantic import ValidationError

from app import __version__
from app.models.model_file import ModelMetadata
from app.services.errors import ModelFormatError, ModelNotFoundError
from app.services.solver_service import KrrModel

logger = logging.getLogger(__name__)

MAGIC = b"KRRM"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sII")
_FLOAT = np.dtype("<f8")


def save_model(path: Union[str, Path], model: KrrModel) -> None:
    """
    Escribe el modelo en `path`.
    """
    n, d = model.X.shape
    metadata = ModelMetadata(
        kernel=model.kernel,
        lam=model.lam,
        n=n,
        d=d,
        t=model.coef.shape[1],
        task=model.task,
        label_map=model.label_map,
        seed=model.seed,
        iterations=list(model.iterations),
        converged=model.converged,
        tool_version=__version__,
    )
    meta_bytes = metadata.model_dump_json().encode("utf-8")
    with open(path, "wb") as handle:
        handle.write(_HEADER.pack(MAGIC, FORMAT_VERSION, len(meta_bytes)))
        handle.write(meta_bytes)
        handle.write(np.ascontiguousarray(model.X, dtype=_FLOAT).tobytes())
        handle.write(np.ascontiguousarray(model.coef, dtype=_FLOAT).tobytes())
    logger.info("Modelo guardado en '%s' (n=%d, d=%d, t=%d).", path, n, d, metadata.t)


def load_model(path: Union[str, Path]) -> KrrModel:
    """
    Lee un modelo; lanza ModelFormatError si la cabecera o los tamaños no cuadran.
    """
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ModelFormatError("fichero demasiado corto para la cabecera")
    magic, version, meta_len = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise ModelFormatError(f"firma desconocida {magic!r}")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"versión de formato {version} no soportada")

    meta_end = _HEADER.size + meta_len
    try:
        metadata = ModelMetadata.model_validate_json(data[_HEADER.size:meta_end])
    except ValidationError as exc:
        raise ModelFormatError(f"metadatos inválidos: {exc}") from exc

    x_count = metadata.n * metadata.d
    c_count = metadata.n * metadata.t
    expected = meta_end + (x_count + c_count) * _FLOAT.itemsize
    if len(data) != expected:
        raise ModelFormatError(f"tamaño {len(data)} bytes, se esperaban {expected}")

    payload = np.frombuffer(data, dtype=_FLOAT, offset=meta_end).astype(np.float64)
    X = payload[:x_count].reshape(metadata.n, metadata.d)
    coef = payload[x_count:].reshape(metadata.n, metadata.t)
    return KrrModel(
        kernel=metadata.kernel,
        X=X,
        coef=coef,
        lam=metadata.lam,
        task=metadata.task,
        label_map=metadata.label_map,
        seed=metadata.seed,
        iterations=tuple(metadata.iterations),
        converged=metadata.converged,
    )


class ModelRegistry:
    """
    Registro de modelos disponibles para la API.

    Los modelos se registran al arrancar (ficheros KRRM) o tras un
    entrenamiento vía HTTP.
    """

    def __init__(self) -> None:
        self._models: Dict[str, KrrModel] = {}

    def register(self, name: str, model: KrrModel) -> None:
        """
        Registra un modelo. Si el nombre ya existe se sobrescribe, dejando constancia en logs.
        """
        if name in self._models:
            logger.warning("El modelo '%s' ya estaba registrado; será sobrescrito.", name)
        self._models[name] = model
        logger.info("Modelo '%s' registrado (n=%d, d=%d).", name, model.X.shape[0], model.d)

    def get(self, name: str) -> KrrModel:
        try:
            return self._models[name]
        except KeyError as exc:
            raise ModelNotFoundError(f"No existe un modelo registrado con el nombre '{name}'.") from exc

    def list_models(self) -> List[str]:
        """
        Lista alfabéticamente los nombres de los modelos registrados.
        """
        return sorted(self._models.keys())


_registry = ModelRegistry()


def get_model_registry() -> ModelRegistry:
    """
    Dependencia de FastAPI para inyectar el registro de modelos.
    """
    return _registry
