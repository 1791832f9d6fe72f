"""
Servicios de dominio de SketchKRR.

Aquí se reexportan los servicios principales y funciones de dependencia
para FastAPI.
"""

from .bench_service import BenchService, get_bench_service
from .model_store_service import ModelRegistry, get_model_registry, load_model, save_model
from .solver_service import KrrSolverService, get_solver_service

__all__ = [
    "BenchService",
    "get_bench_service",
    "ModelRegistry",
    "get_model_registry",
    "load_model",
    "save_model",
    "KrrSolverService",
    "get_solver_service",
]
