"""
Transformaciones aleatorias y sketches, individuales y encadenados.

- RffMap: random Fourier features para el kernel gaussiano.
- TensorSketchMap: CountSketch del producto tensorial v_q(x) vía FFT.
- SrhtMap: Walsh-Hadamard aleatorizado y submuestreado, S = (1/√s)·P·H·D.
- GaussianMap: proyección gaussiana densa (tercer nivel).
- SketchChain: composición de etapas (primera etapa RFF o TensorSketch,
  luego SRHT y/o gaussiana).

Todos los mapas son inmutables y reproducibles a partir de su semilla.
Cada etapa de una cadena recibe una semilla (seed, offset) independiente.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np
import scipy.sparse
from numpy.typing import ArrayLike, NDArray

from app.models.kernels import KernelSpec
from app.models.solver import ChainSpec, FeatureMapKind
from app.services import kernels
from app.services.errors import DimensionMismatchError, IncompatibleSketchError
from app.services.numerics import DenseMatrix, fft_real, fwht, ifft_real, next_power_of_two

logger = logging.getLogger(__name__)

# Desplazamientos fijos de semilla por posición de etapa en la cadena.
STAGE_SEED_OFFSETS = (0, 1, 2)


def stage_rng(seed: int, offset: int) -> np.random.Generator:
    """Generador independiente para la etapa `offset` de la semilla maestra."""
    return np.random.default_rng([seed, offset])


def _rows(x: ArrayLike, input_dim: int) -> Tuple[DenseMatrix, bool]:
    """
    Normaliza la entrada a matriz n×d; indica si era un vector.
    """
    arr = np.asarray(x, dtype=np.float64)
    is_vector = arr.ndim == 1
    mat = arr.reshape(1, -1) if is_vector else arr
    if mat.ndim != 2 or mat.shape[1] != input_dim:
        raise DimensionMismatchError(
            f"se esperaba dimensión {input_dim}, recibido forma {arr.shape}"
        )
    return mat, is_vector


def _restore(out: DenseMatrix, is_vector: bool) -> NDArray[np.float64]:
    return out[0] if is_vector else out


# ---------------------------------------------------------------------------
# CountSketch
# ---------------------------------------------------------------------------

def countsketch_matrix(hashes: NDArray[np.int64], signs: NDArray[np.float64], s: int) -> scipy.sparse.csr_matrix:
    """
    Matriz dispersa d×s con una única entrada g(j) en la columna h(j) de cada fila j.
    """
    d = hashes.shape[0]
    return scipy.sparse.csr_matrix(
        (signs.astype(np.float64), (np.arange(d), hashes)), shape=(d, s)
    )


def countsketch_apply(
    hashes: ArrayLike,
    signs: ArrayLike,
    x: ArrayLike,
    s: int,
) -> NDArray[np.float64]:
    """
    CountSketch: la coordenada i de la salida es Σ_{j | h(j)=i} g(j)·x_j.

    Acepta un vector de R^d o una matriz n×d (una fila por punto).
    """
    h = np.asarray(hashes, dtype=np.int64)
    g = np.asarray(signs, dtype=np.float64)
    if h.shape != g.shape or h.ndim != 1:
        raise DimensionMismatchError("las tablas h y g deben ser vectores de igual longitud")
    if h.size and (h.min() < 0 or h.max() >= s):
        raise ValueError(f"los valores hash deben estar en [0, {s})")
    mat, is_vector = _rows(x, h.shape[0])
    out = np.asarray(mat @ countsketch_matrix(h, g, s))
    return _restore(out, is_vector)


# ---------------------------------------------------------------------------
# Mapas individuales
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RffMap:
    """
    Random Fourier features: φ_i(x) = √(2/s)·cos(W_i·x + b_i).

    W tiene entradas Normal(0, σ⁻²) y b es uniforme en [0, 2π). El factor
    √(2/s) hace que E[φ(x)ᵀφ(z)] = exp(-‖x-z‖²/2σ²) exactamente.
    """
    weights: DenseMatrix
    offsets: NDArray[np.float64]
    seed: int = 0

    @classmethod
    def create(cls, d: int, s: int, sigma: float, seed: int = 0, offset: int = 0) -> "RffMap":
        if s < 1:
            raise ValueError("el número de features debe ser ≥ 1")
        rng = stage_rng(seed, offset)
        weights = rng.standard_normal((s, d)) / sigma
        offsets = rng.uniform(0.0, 2.0 * math.pi, size=s)
        return cls(weights, offsets, seed)

    @property
    def input_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def output_dim(self) -> int:
        return self.weights.shape[0]

    def apply(self, x: ArrayLike) -> NDArray[np.float64]:
        mat, is_vector = _rows(x, self.input_dim)
        out = math.sqrt(2.0 / self.output_dim) * np.cos(mat @ self.weights.T + self.offsets)
        return _restore(out, is_vector)


@dataclass(frozen=True)
class TensorSketchMap:
    """
    TensorSketch de grado q: CountSketch de v_q(x) = x ⊗ … ⊗ x.

    Las tablas h_j: [d] → [s] y g_j: [d] → {±1} se guardan como arrays
    explícitos (filas j = 0..q-1), independientes entre sí.
    """
    hashes: NDArray[np.int64]
    signs: NDArray[np.float64]
    s: int
    seed: int = 0

    @classmethod
    def create(cls, d: int, s: int, q: int, seed: int = 0, offset: int = 0) -> "TensorSketchMap":
        if s < 1 or q < 1:
            raise ValueError("TensorSketch requiere s ≥ 1 y q ≥ 1")
        rng = stage_rng(seed, offset)
        hashes = rng.integers(0, s, size=(q, d), dtype=np.int64)
        signs = rng.choice(np.array([-1.0, 1.0]), size=(q, d))
        return cls(hashes, signs, s, seed)

    @property
    def degree(self) -> int:
        return self.hashes.shape[0]

    @property
    def input_dim(self) -> int:
        return self.hashes.shape[1]

    @property
    def output_dim(self) -> int:
        return self.s

    def apply(self, x: ArrayLike) -> NDArray[np.float64]:
        """
        CountSketch por modo, FFT de cada uno, producto elemento a elemento y FFT inversa.
        """
        mat, is_vector = _rows(x, self.input_dim)
        spectrum = None
        for mode in range(self.degree):
            sketched = countsketch_apply(self.hashes[mode], self.signs[mode], mat, self.s)
            transformed = fft_real(sketched, axis=-1)
            spectrum = transformed if spectrum is None else spectrum * transformed
        out = ifft_real(spectrum, axis=-1)
        return _restore(out, is_vector)


@dataclass(frozen=True)
class SrhtMap:
    """
    SRHT S = (1/√s)·P·H·D sobre entradas rellenadas con ceros hasta m = 2^k.

    P muestrea s filas de forma uniforme con reemplazo.
    """
    input_dim: int
    signs: NDArray[np.float64]
    rows: NDArray[np.int64]
    seed: int = 0

    @classmethod
    def create(cls, input_dim: int, s: int, seed: int = 0, offset: int = 1) -> "SrhtMap":
        if s < 1:
            raise ValueError("el tamaño de salida de la SRHT debe ser ≥ 1")
        m = next_power_of_two(input_dim)
        rng = stage_rng(seed, offset)
        signs = rng.choice(np.array([-1.0, 1.0]), size=m)
        rows = rng.integers(0, m, size=s, dtype=np.int64)
        return cls(input_dim, signs, rows, seed)

    @property
    def padded_dim(self) -> int:
        return self.signs.shape[0]

    @property
    def output_dim(self) -> int:
        return self.rows.shape[0]

    def apply(self, x: ArrayLike) -> NDArray[np.float64]:
        mat, is_vector = _rows(x, self.input_dim)
        padded = np.zeros((mat.shape[0], self.padded_dim))
        padded[:, : self.input_dim] = mat
        mixed = fwht(padded * self.signs, axis=-1)
        out = mixed[:, self.rows] / math.sqrt(self.output_dim)
        return _restore(out, is_vector)


@dataclass(frozen=True)
class GaussianMap:
    """
    Proyección densa x ↦ (1/√s₃)·S₃·x con S₃ de entradas normales estándar.
    """
    matrix: DenseMatrix
    seed: int = 0

    @classmethod
    def create(cls, input_dim: int, s: int, seed: int = 0, offset: int = 2) -> "GaussianMap":
        if s < 1:
            raise ValueError("el tamaño de salida de la proyección gaussiana debe ser ≥ 1")
        rng = stage_rng(seed, offset)
        return cls(rng.standard_normal((s, input_dim)), seed)

    @property
    def input_dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def output_dim(self) -> int:
        return self.matrix.shape[0]

    def apply(self, x: ArrayLike) -> NDArray[np.float64]:
        mat, is_vector = _rows(x, self.input_dim)
        out = (mat @ self.matrix.T) / math.sqrt(self.output_dim)
        return _restore(out, is_vector)


FeatureStage = Union[RffMap, TensorSketchMap]
CompressionStage = Union[SrhtMap, GaussianMap]


# ---------------------------------------------------------------------------
# Cadenas
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SketchChain:
    """
    Cadena de etapas que realiza φ: primero RFF o TensorSketch y después
    cero o más etapas SRHT/gaussianas.

    Si `kernel` es polinómico las entradas se aumentan a [√γ·x ; √c] antes
    de la primera etapa.
    """
    stages: Tuple[Union[FeatureStage, CompressionStage], ...]
    kernel: Optional[KernelSpec] = None
    sizes: Tuple[int, ...] = field(init=False)

    def __post_init__(self) -> None:
        if not self.stages:
            raise ValueError("una cadena necesita al menos una etapa")
        if not isinstance(self.stages[0], (RffMap, TensorSketchMap)):
            raise IncompatibleSketchError("la primera etapa debe ser RFF o TensorSketch")
        for previous, stage in zip(self.stages, self.stages[1:]):
            if not isinstance(stage, (SrhtMap, GaussianMap)):
                raise IncompatibleSketchError("las etapas posteriores deben ser SRHT o gaussianas")
            if stage.input_dim != previous.output_dim:
                raise DimensionMismatchError(
                    f"la etapa espera {stage.input_dim} entradas pero la anterior produce {previous.output_dim}"
                )
        object.__setattr__(self, "sizes", tuple(stage.output_dim for stage in self.stages))

    @property
    def input_dim(self) -> int:
        return self.stages[0].input_dim

    @property
    def output_dim(self) -> int:
        return self.sizes[-1]

    def apply(self, X: ArrayLike) -> DenseMatrix:
        """
        Z (n×s): la fila i es la composición de etapas aplicada a x_i.
        """
        mat = np.asarray(X, dtype=np.float64)
        if mat.ndim != 2:
            raise DimensionMismatchError("chain_apply espera una matriz n×d")
        if self.kernel is not None and isinstance(self.stages[0], TensorSketchMap):
            mat = kernels.sketch_inputs(self.kernel, mat) if mat.shape[0] else np.zeros(
                (0, self.input_dim)
            )
        if mat.shape[0] == 0:
            return np.zeros((0, self.output_dim))
        for stage in self.stages:
            mat = stage.apply(mat)
        return mat


def chain_apply(chain: SketchChain, X: ArrayLike) -> DenseMatrix:
    """Forma funcional de SketchChain.apply."""
    return chain.apply(X)


def build_chain(kernel: KernelSpec, spec: ChainSpec, d: int, seed: int = 0) -> SketchChain:
    """
    Realiza una plantilla de cadena para entradas de dimensión d.

    RFF exige kernel gaussiano y TensorSketch kernel polinómico.
    """
    if spec.feature_map == FeatureMapKind.RFF:
        if not kernel.is_gaussian:
            raise IncompatibleSketchError("random Fourier features requiere el kernel gaussiano")
        first: FeatureStage = RffMap.create(d, spec.s1, kernel.sigma, seed, STAGE_SEED_OFFSETS[0])
    else:
        if kernel.is_gaussian:
            raise IncompatibleSketchError("TensorSketch requiere el kernel polinómico")
        augmented_dim = d + (1 if kernel.offset > 0 else 0)
        first = TensorSketchMap.create(
            augmented_dim, spec.s1, kernel.degree, seed, STAGE_SEED_OFFSETS[0]
        )

    stages: list = [first]
    if spec.s2:
        stages.append(SrhtMap.create(stages[-1].output_dim, spec.s2, seed, STAGE_SEED_OFFSETS[1]))
    if spec.s3:
        stages.append(GaussianMap.create(stages[-1].output_dim, spec.s3, seed, STAGE_SEED_OFFSETS[2]))

    chain = SketchChain(tuple(stages), kernel)
    logger.debug("Cadena de sketches construida: %s (seed=%d).", chain.sizes, seed)
    return chain
