"""
Modelos de datos (Pydantic) usados por SketchKRR.

Este módulo reexporta los modelos más importantes para facilitar los imports.
"""

from .kernels import KernelFamily, KernelSpec
from .model_file import LabelMap, ModelMetadata
from .precond import QualityReport
from .reports import (
    BenchReport,
    BenchRow,
    CommandReport,
    Metrics,
    ResourceUsageSample,
    StatdimReport,
)
from .solver import ChainSpec, FeatureMapKind, PcgReport, RhsReport, SolverConfig, Task

__all__ = [
    "KernelFamily",
    "KernelSpec",
    "LabelMap",
    "ModelMetadata",
    "QualityReport",
    "BenchReport",
    "BenchRow",
    "CommandReport",
    "Metrics",
    "ResourceUsageSample",
    "StatdimReport",
    "ChainSpec",
    "FeatureMapKind",
    "PcgReport",
    "RhsReport",
    "SolverConfig",
    "Task",
]
