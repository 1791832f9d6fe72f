"""
Router con los endpoints de entrenamiento, predicción y dimensión estadística.

Los servicios lanzan errores de dominio; aquí se traducen a HTTPException.
"""

from typing import List

import numpy as np
from fastapi import APIRouter, Depends, HTTPException

from app.models.api import PredictRequest, PredictResponse, StatdimRequest, TrainRequest
from app.models.reports import StatdimReport
from app.models.solver import PcgReport, Task
from app.services.errors import KrrError, ModelNotFoundError
from app.services.kernels import Dataset, statdim_report
from app.services.model_store_service import ModelRegistry, get_model_registry
from app.services.solver_service import KrrSolverService, get_solver_service

router = APIRouter(tags=["krr"])


def _as_matrix(rows: List[List[float]]) -> np.ndarray:
    if len({len(row) for row in rows}) != 1:
        raise HTTPException(status_code=422, detail="Todas las filas de inputs deben tener la misma longitud.")
    return np.asarray(rows, dtype=np.float64)


@router.get("/models", response_model=List[str])
def list_models(registry: ModelRegistry = Depends(get_model_registry)) -> List[str]:
    """
    Lista los nombres de los modelos registrados.
    """
    return registry.list_models()


@router.post("/models/{name}/predict", response_model=PredictResponse)
def predict(
    name: str,
    req: PredictRequest,
    registry: ModelRegistry = Depends(get_model_registry),
    solver: KrrSolverService = Depends(get_solver_service),
) -> PredictResponse:
    """
    Puntuaciones (y etiquetas en clasificación) de un modelo registrado.
    """
    try:
        model = registry.get(name)
        queries = _as_matrix(req.inputs)
        scores = solver.predict(model, queries)
        labels = None
        if model.task == Task.CLASSIFY:
            labels = solver.classify(model, queries).tolist()
    except ModelNotFoundError as exc:
        raise HTTPException(status_code=404, detail=str(exc)) from exc
    except KrrError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return PredictResponse(model=name, scores=scores.tolist(), labels=labels)


@router.post("/train", response_model=PcgReport)
def train(
    req: TrainRequest,
    registry: ModelRegistry = Depends(get_model_registry),
    solver: KrrSolverService = Depends(get_solver_service),
) -> PcgReport:
    """
    Entrena un modelo y lo registra con el nombre indicado.
    """
    X = _as_matrix(req.inputs)
    if len(req.targets) != X.shape[0]:
        raise HTTPException(status_code=422, detail="inputs y targets deben tener el mismo número de filas.")
    try:
        dataset = Dataset(X, np.asarray(req.targets, dtype=np.float64).reshape(-1, 1))
        result = solver.train(dataset, req.kernel, req.config)
    except (KrrError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    registry.register(req.name, result.model)
    return result.report


@router.post("/statdim", response_model=StatdimReport)
def statdim(req: StatdimRequest) -> StatdimReport:
    """
    Dimensión estadística s_λ(K) y tamaños de sketch teóricos.
    """
    try:
        return statdim_report(req.kernel, _as_matrix(req.inputs), req.lam, req.delta)
    except KrrError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
