"""
Lectura y escritura de conjuntos de datos.

Formatos:
- LIBSVM/SVMLight: "etiqueta idx:valor idx:valor ..." con índices desde 1.
  Las filas dispersas se densifican a d = índice máximo.
- CSV: la primera columna es el objetivo y el resto las features; sin
  cabecera salvo que se indique `header`.
"""

from __future__ import annotations

import logging
import math
from enum import Enum
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from app.models.solver import Task
from app.services.errors import DimensionMismatchError, EmptyFileError, ParseError
from app.services.kernels import Dataset
from app.services.numerics import DenseMatrix

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class DataFormat(str, Enum):
    LIBSVM = "libsvm"
    CSV = "csv"


def _parse_float(token: str, line_number: int) -> float:
    try:
        value = float(token)
    except ValueError as exc:
        raise ParseError(f"valor no numérico '{token}'", line_number) from exc
    if not math.isfinite(value):
        raise ParseError(f"valor no finito '{token}'", line_number)
    return value


def _data_lines(path: PathLike):
    with open(path, encoding="utf-8") as handle:
        for line_number, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                yield line_number, line


def parse_libsvm(
    path: PathLike,
    task: Task = Task.REGRESS,
    n_features: Optional[int] = None,
) -> Dataset:
    """
    Lee un fichero LIBSVM.

    Con `n_features` la dimensión queda fijada (rellenando con ceros); un
    índice mayor lanza DimensionMismatchError.
    """
    labels: List[float] = []
    rows: List[Tuple[List[int], List[float]]] = []
    max_index = 0

    for line_number, line in _data_lines(path):
        tokens = line.split()
        labels.append(_parse_float(tokens[0], line_number))
        indices: List[int] = []
        values: List[float] = []
        for token in tokens[1:]:
            index_text, sep, value_text = token.partition(":")
            if not sep:
                raise ParseError(f"se esperaba 'índice:valor', recibido '{token}'", line_number)
            try:
                index = int(index_text)
            except ValueError as exc:
                raise ParseError(f"índice no entero '{index_text}'", line_number) from exc
            if index < 1:
                raise ParseError(f"los índices empiezan en 1 (recibido {index})", line_number)
            indices.append(index - 1)
            values.append(_parse_float(value_text, line_number))
            max_index = max(max_index, index)
        rows.append((indices, values))

    if not rows:
        raise EmptyFileError(f"{path} no contiene muestras")

    d = max_index if n_features is None else n_features
    if max_index > d:
        raise DimensionMismatchError(f"el fichero usa el índice {max_index} pero d={d}")

    X = np.zeros((len(rows), d))
    for i, (indices, values) in enumerate(rows):
        X[i, indices] = values
    y = np.asarray(labels).reshape(-1, 1)
    logger.info("LIBSVM '%s' leído: n=%d, d=%d, tarea=%s.", path, X.shape[0], d, task.value)
    return Dataset(X, y)


def parse_csv(
    path: PathLike,
    task: Task = Task.REGRESS,
    header: bool = False,
) -> Dataset:
    """
    Lee un CSV numérico (objetivo en la primera columna).
    """
    records: List[List[float]] = []
    width: Optional[int] = None
    for line_number, line in _data_lines(path):
        if header and not records and width is None:
            width = -1
            continue
        fields = [field.strip() for field in line.split(",")]
        values = [_parse_float(field, line_number) for field in fields]
        if width not in (None, -1) and len(values) != width:
            raise ParseError(f"{len(values)} columnas, se esperaban {width}", line_number)
        width = len(values)
        records.append(values)

    if not records:
        raise EmptyFileError(f"{path} no contiene muestras")
    if width < 2:
        raise ParseError("se necesita al menos una columna de features", 1)

    table = np.asarray(records)
    logger.info("CSV '%s' leído: n=%d, d=%d, tarea=%s.", path, table.shape[0], table.shape[1] - 1, task.value)
    return Dataset(table[:, 1:], table[:, :1])


def load_dataset(
    path: PathLike,
    fmt: DataFormat = DataFormat.LIBSVM,
    task: Task = Task.REGRESS,
    header: bool = False,
    n_features: Optional[int] = None,
) -> Dataset:
    """
    Punto de entrada único de la ingesta; valida d contra `n_features` si se da.
    """
    if fmt == DataFormat.LIBSVM:
        return parse_libsvm(path, task, n_features)
    dataset = parse_csv(path, task, header)
    if n_features is not None and dataset.d != n_features:
        raise DimensionMismatchError(f"el CSV tiene d={dataset.d} pero se esperaba d={n_features}")
    return dataset


def write_libsvm(path: PathLike, X: DenseMatrix, y: DenseMatrix) -> None:
    """
    Escribe en formato LIBSVM solo las entradas no nulas, con repr exacto.
    """
    with open(path, "w", encoding="utf-8") as handle:
        for row, label in zip(np.asarray(X), np.asarray(y).reshape(len(X), -1)[:, 0]):
            nonzero = np.flatnonzero(row)
            pairs = " ".join(f"{j + 1}:{float(row[j])!r}" for j in nonzero)
            handle.write(f"{float(label)!r} {pairs}".rstrip() + "\n")


def train_test_split(dataset: Dataset, test_fraction: float, seed: int = 0) -> Tuple[Dataset, Dataset]:
    """
    Partición con permutación reproducible; ambos lados conservan al menos una muestra.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction debe estar en (0, 1)")
    if dataset.n < 2:
        raise ValueError("se necesitan al menos 2 muestras para separar entrenamiento y prueba")
    order = np.random.default_rng(seed).permutation(dataset.n)
    n_test = min(dataset.n - 1, max(1, int(round(test_fraction * dataset.n))))
    return dataset.subset(order[n_test:]), dataset.subset(order[:n_test])
