"""
Primitivas de álgebra lineal densa y transformadas.

Todo el resto de servicios se apoya en este módulo. No contiene semántica
de dominio: solo Cholesky, sistemas triangulares, FWHT, FFT, descomposición
espectral simétrica y estimación de norma espectral por iteración de potencia.

Todas las operaciones trabajan en float64 y son funciones puras. Los productos
matriciales delegan en BLAS (numpy/scipy); el resultado es determinista para
un número fijo de hilos de BLAS, no de forma absoluta.
"""

from __future__ import annotations

import logging
from typing import Callable, NamedTuple

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from app.services.errors import (
    DimensionMismatchError,
    LengthNotPowerOfTwoError,
    NoConvergenceError,
    NotPositiveDefiniteError,
    SingularTriangularError,
)

logger = logging.getLogger(__name__)

DenseMatrix = NDArray[np.float64]

# Tamaño máximo pensado para la descomposición espectral densa (escala "de escritorio").
EIGEN_DESK_SCALE = 4096

_SINGULAR_DIAGONAL = 1e-300


class EigenResult(NamedTuple):
    """
    Autovalores en orden descendente y autovectores ortonormales por columnas.
    """
    eigenvalues: NDArray[np.float64]
    eigenvectors: DenseMatrix


class PowerIterationResult(NamedTuple):
    """
    Estimación de la norma espectral junto con su diagnóstico.

    `converged` es False cuando se agotó max_iter; `value` es entonces la
    mejor estimación disponible.
    """
    value: float
    iterations: int
    converged: bool


def as_matrix(a: ArrayLike, name: str = "A") -> DenseMatrix:
    """
    Convierte la entrada a matriz float64 2D y comprueba que sea finita.
    """
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionMismatchError(f"{name} debe ser una matriz 2D (ndim={arr.ndim})")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contiene valores no finitos")
    return arr


def _require_square(a: DenseMatrix, name: str) -> None:
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"{name} debe ser cuadrada, forma={a.shape}")


# ---------------------------------------------------------------------------
# Factorizaciones
# ---------------------------------------------------------------------------

def cholesky(a: ArrayLike) -> DenseMatrix:
    """
    Factor de Cholesky inferior L con LLᵀ = A.

    No aplica jitter: si aparece un pivote ≤ 0 lanza NotPositiveDefiniteError
    y es el llamador quien decide la política de reintento.
    """
    mat = as_matrix(a)
    _require_square(mat, "A")
    if mat.shape[0] == 0:
        return np.zeros((0, 0))
    try:
        return scipy.linalg.cholesky(mat, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(
            f"la matriz {mat.shape[0]}x{mat.shape[0]} no es numéricamente definida positiva"
        ) from exc


def triangular_solve(
    l_factor: ArrayLike,
    b: ArrayLike,
    *,
    lower: bool = True,
    transpose: bool = False,
) -> NDArray[np.float64]:
    """
    Resuelve L·X = B (o Lᵀ·X = B si `transpose`) por sustitución.
    """
    mat = as_matrix(l_factor, "L")
    _require_square(mat, "L")
    rhs = np.asarray(b, dtype=np.float64)
    if rhs.shape[0] != mat.shape[0]:
        raise DimensionMismatchError(
            f"B tiene {rhs.shape[0]} filas pero L es {mat.shape[0]}x{mat.shape[0]}"
        )
    if mat.shape[0] == 0:
        return rhs.copy()

    diag = np.abs(np.diag(mat))
    if diag.min() < _SINGULAR_DIAGONAL:
        raise SingularTriangularError(
            f"entrada diagonal {diag.min():.3e} en la posición {int(diag.argmin())}"
        )
    return scipy.linalg.solve_triangular(
        mat, rhs, lower=lower, trans="T" if transpose else "N", check_finite=False
    )


# ---------------------------------------------------------------------------
# Transformadas
# ---------------------------------------------------------------------------

def is_power_of_two(m: int) -> bool:
    return m >= 1 and (m & (m - 1)) == 0


def next_power_of_two(m: int) -> int:
    return 1 if m <= 1 else 1 << (int(m) - 1).bit_length()


def fwht(x: ArrayLike, axis: int = -1) -> NDArray[np.float64]:
    """
    Transformada rápida de Walsh-Hadamard sin normalizar, H_m·x.

    H_m sigue la recursión de Sylvester H_2m = [[H_m, H_m], [H_m, -H_m]].
    Se aplica a lo largo de `axis`, de modo que una matriz n×m se transforma
    fila a fila en O(n·m·log m).
    """
    arr = np.moveaxis(np.array(x, dtype=np.float64, copy=True), axis, -1)
    m = arr.shape[-1]
    if not is_power_of_two(m):
        raise LengthNotPowerOfTwoError(f"la longitud {m} no es potencia de dos")

    lead = arr.shape[:-1]
    h = 1
    while h < m:
        blocks = arr.reshape(*lead, m // (2 * h), 2, h)
        top = blocks[..., 0, :].copy()
        bottom = blocks[..., 1, :]
        blocks[..., 0, :] = top + bottom
        blocks[..., 1, :] = top - bottom
        arr = blocks.reshape(*lead, m)
        h *= 2
    return np.moveaxis(arr, -1, axis)


def fft_real(x: ArrayLike, n: int | None = None, axis: int = -1) -> NDArray[np.complex128]:
    """
    Espectro completo (complejo) de una señal real, con relleno opcional a n.
    """
    return np.fft.fft(np.asarray(x, dtype=np.float64), n=n, axis=axis)


def ifft_real(spectrum: ArrayLike, n: int | None = None, axis: int = -1) -> NDArray[np.float64]:
    """
    Inversa de fft_real; descarta la parte imaginaria residual.
    """
    return np.real(np.fft.ifft(np.asarray(spectrum), n=n, axis=axis))


def circular_convolution(a: ArrayLike, b: ArrayLike) -> NDArray[np.float64]:
    """
    Convolución circular de longitud len(a) mediante el teorema de convolución.

    Si b es más corto se rellena con ceros; si es más largo se pliega de forma
    circular sobre len(a) antes de transformar.
    """
    a_arr = np.asarray(a, dtype=np.float64)
    b_arr = np.asarray(b, dtype=np.float64)
    n = a_arr.shape[-1]
    if b_arr.shape[-1] > n:
        folded = np.zeros(b_arr.shape[:-1] + (n,))
        for start in range(0, b_arr.shape[-1], n):
            chunk = b_arr[..., start:start + n]
            folded[..., : chunk.shape[-1]] += chunk
        b_arr = folded
    return ifft_real(fft_real(a_arr, n=n) * fft_real(b_arr, n=n))


# ---------------------------------------------------------------------------
# Espectro
# ---------------------------------------------------------------------------

def symmetric_eigen(a: ArrayLike) -> EigenResult:
    """
    Descomposición espectral de una matriz simétrica, autovalores descendentes.

    Pensada para n ≤ EIGEN_DESK_SCALE (~4096); por encima se avisa en logs
    porque el coste es O(n³) y la memoria O(n²).
    """
    mat = as_matrix(a)
    _require_square(mat, "A")
    n = mat.shape[0]
    if n == 0:
        return EigenResult(np.zeros(0), np.zeros((0, 0)))
    if n > EIGEN_DESK_SCALE:
        logger.warning(
            "symmetric_eigen sobre una matriz %dx%d supera la escala prevista (%d).",
            n, n, EIGEN_DESK_SCALE,
        )
    scale = max(1.0, float(np.abs(mat).max()))
    if not np.allclose(mat, mat.T, rtol=0.0, atol=1e-10 * scale):
        raise ValueError("symmetric_eigen requiere una matriz simétrica")

    try:
        values, vectors = scipy.linalg.eigh(mat, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise NoConvergenceError("eigh no convergió") from exc
    return EigenResult(values[::-1].copy(), vectors[:, ::-1].copy())


def power_iteration_spectral_norm(
    apply: Callable[[NDArray[np.float64]], NDArray[np.float64]],
    dim: int,
    tol: float = 1e-4,
    max_iter: int = 500,
    seed: int = 0,
) -> PowerIterationResult:
    """
    Estima λ_max de un operador simétrico semidefinido positivo.

    Parte de un vector aleatorio con semilla fija y se detiene cuando el
    cambio relativo de ‖A·v‖ baja de `tol`. Si se agota max_iter devuelve la
    mejor estimación con converged=False (y lo deja en logs) en lugar de
    lanzar NoConvergenceError.
    """
    if dim == 0:
        return PowerIterationResult(0.0, 0, True)

    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)

    estimate = 0.0
    for iteration in range(1, max_iter + 1):
        w = apply(v)
        norm_w = float(np.linalg.norm(w))
        if norm_w == 0.0:
            return PowerIterationResult(0.0, iteration, True)
        if abs(norm_w - estimate) <= tol * norm_w:
            return PowerIterationResult(norm_w, iteration, True)
        estimate = norm_w
        v = w / norm_w

    logger.warning(
        "Iteración de potencia sin converger tras %d iteraciones (estimación=%.6g).",
        max_iter, estimate,
    )
    return PowerIterationResult(estimate, max_iter, False)
