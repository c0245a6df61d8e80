"""Fourier pseudo-spectral helpers on the torus [-pi, pi).

Grid nodes are x_j = -pi + 2*pi*j/N. Coefficients are the true Fourier
coefficients g_hat(m) of g(x) = sum_m g_hat(m) exp(i m x), stored in FFT order
(m = 0, 1, ..., N/2 - 1, -N/2, ..., -1) so that scipy.fft can be used directly.
The Nyquist entry is kept real.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import fft as sfft
from scipy.linalg import hankel

from utils.errors import GridMismatchError, InvalidArgumentError, UnsupportedSymbolError

LOGGER = logging.getLogger(__name__)

MIN_GRID_SIZE = 8


@dataclass(frozen=True)
class FourierGrid:
    """Uniform grid with N (even) collocation points on [-pi, pi)."""
    n_modes: int
    nodes: np.ndarray = field(compare=False, repr=False)

    @property
    def spacing(self) -> float:
        return 2.0 * np.pi / self.n_modes

    @property
    def wavenumbers(self) -> np.ndarray:
        """Integer wavenumbers in FFT order."""
        return _wavenumbers(self.n_modes)

    @property
    def nyquist(self) -> int:
        return self.n_modes // 2


def _wavenumbers(n: int) -> np.ndarray:
    return np.rint(sfft.fftfreq(n, d=1.0 / n)).astype(int)


def _alternating(n: int) -> np.ndarray:
    # (-1)^m from the node offset x_0 = -pi
    return np.where(_wavenumbers(n) % 2 == 0, 1.0, -1.0)


def make_grid(n_modes: int) -> FourierGrid:
    """
    Build the uniform collocation grid.

    Args:
        n_modes: Number of collocation points N (even, at least 8)

    Returns:
        FourierGrid with nodes -pi, -pi + 2pi/N, ..., pi - 2pi/N
    """
    if int(n_modes) != n_modes or n_modes < MIN_GRID_SIZE or int(n_modes) % 2 != 0:
        raise InvalidArgumentError(f"n_modes must be an even integer >= {MIN_GRID_SIZE}, got {n_modes}")
    n = int(n_modes)
    nodes = -np.pi + 2.0 * np.pi * np.arange(n) / n
    nodes.setflags(write=False)
    return FourierGrid(n_modes=n, nodes=nodes)


@dataclass(frozen=True)
class PeriodicField:
    """Real 2pi-periodic field: grid values and Fourier coefficients, both precomputed."""
    grid: FourierGrid
    values: np.ndarray = field(repr=False)
    coeffs: np.ndarray = field(repr=False)

    @property
    def n_modes(self) -> int:
        return self.grid.n_modes

    def mean(self) -> float:
        return float(self.coeffs[0].real)

    def max_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def coefficient(self, m: int) -> complex:
        """Coefficient g_hat(m); zero outside the retained band."""
        n = self.n_modes
        if abs(m) > n // 2:
            return 0.0j
        if abs(m) == n // 2:
            return complex(self.coeffs[n // 2])
        return complex(self.coeffs[m % n])

    def cosine_coefficients(self, count: Optional[int] = None) -> np.ndarray:
        """Real parts of g_hat(0..count-1); for an even field g = p0 + 2 sum p_m cos(mx)."""
        count = self.n_modes // 2 if count is None else count
        out = np.zeros(count)
        k = min(count, self.n_modes // 2)
        out[:k] = self.coeffs[:k].real
        return out

    def scaled(self, factor: float) -> "PeriodicField":
        return PeriodicField(self.grid, self.values * factor, self.coeffs * factor)

    def shifted(self, constant: float) -> "PeriodicField":
        coeffs = self.coeffs.copy()
        coeffs[0] += constant
        return PeriodicField(self.grid, self.values + constant, coeffs)

    def __add__(self, other: "PeriodicField") -> "PeriodicField":
        _check_same_grid(self, other)
        return PeriodicField(self.grid, self.values + other.values, self.coeffs + other.coeffs)

    def __sub__(self, other: "PeriodicField") -> "PeriodicField":
        _check_same_grid(self, other)
        return PeriodicField(self.grid, self.values - other.values, self.coeffs - other.coeffs)


def _check_same_grid(f: PeriodicField, g: PeriodicField) -> None:
    if f.grid != g.grid:
        raise GridMismatchError(f"fields live on different grids (N={f.n_modes} vs N={g.n_modes})")


def _coeffs_from_values(values: np.ndarray) -> np.ndarray:
    n = values.size
    coeffs = _alternating(n) * sfft.fft(values) / n
    coeffs[n // 2] = coeffs[n // 2].real
    return coeffs


def _values_from_coeffs(coeffs: np.ndarray, size: Optional[int] = None) -> np.ndarray:
    size = coeffs.size if size is None else size
    return np.real(size * sfft.ifft(_alternating(size) * coeffs))


def field_from_values(grid: FourierGrid, values) -> PeriodicField:
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.n_modes,):
        raise InvalidArgumentError(f"expected {grid.n_modes} values, got shape {values.shape}")
    values = values.copy()
    values.setflags(write=False)
    coeffs = _coeffs_from_values(values)
    coeffs.setflags(write=False)
    return PeriodicField(grid, values, coeffs)


def field_from_coeffs(grid: FourierGrid, coeffs) -> PeriodicField:
    """Build a field from FFT-ordered coefficients; imaginary round-off is dropped."""
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.shape != (grid.n_modes,):
        raise InvalidArgumentError(f"expected {grid.n_modes} coefficients, got shape {coeffs.shape}")
    values = _values_from_coeffs(coeffs)
    return field_from_values(grid, values)


def field_from_function(grid: FourierGrid, fn: Callable[[np.ndarray], np.ndarray]) -> PeriodicField:
    return field_from_values(grid, fn(grid.nodes))


def constant_field(grid: FourierGrid, value: float) -> PeriodicField:
    return field_from_values(grid, np.full(grid.n_modes, float(value)))


def field_from_cosine(grid: FourierGrid, cosine: np.ndarray) -> PeriodicField:
    """Even field p0 + 2 sum_{m>=1} p_m cos(mx) from cosine coefficients p_0..p_K (K < N/2)."""
    n = grid.n_modes
    cosine = np.asarray(cosine, dtype=float)
    if cosine.size > n // 2:
        raise InvalidArgumentError(f"{cosine.size} cosine modes do not fit on N={n}")
    coeffs = np.zeros(n, dtype=complex)
    coeffs[: cosine.size] = cosine
    if cosine.size > 1:
        coeffs[-(cosine.size - 1):] = cosine[:0:-1]
    return field_from_coeffs(grid, coeffs)


def symbol(grid: FourierGrid, alpha: float) -> np.ndarray:
    """Multiplier |m|^alpha in FFT order (0^0 = 1)."""
    if alpha < 0:
        raise UnsupportedSymbolError(f"negative alpha={alpha} is not supported")
    return np.abs(grid.wavenumbers).astype(float) ** alpha


def frac_derivative(f: PeriodicField, alpha: float) -> PeriodicField:
    """
    Apply D^alpha, the Fourier multiplier |m|^alpha.

    Args:
        f: Field to differentiate
        alpha: Order of the derivative (alpha >= 0)

    Returns:
        Field with coefficients |m|^alpha * f_hat(m)
    """
    return field_from_coeffs(f.grid, symbol(f.grid, alpha) * f.coeffs)


def derivative(f: PeriodicField) -> PeriodicField:
    """Spectral d/dx; the Nyquist mode is dropped."""
    m = f.grid.wavenumbers.astype(float)
    m[f.grid.nyquist] = 0.0
    return field_from_coeffs(f.grid, 1j * m * f.coeffs)


def project_zero_mean(f: PeriodicField) -> PeriodicField:
    return f.shifted(-f.mean())


def inner_product(f: PeriodicField, g: PeriodicField) -> float:
    """Trapezoid approximation of the L2 inner product over [-pi, pi]."""
    _check_same_grid(f, g)
    return float(f.grid.spacing * np.dot(f.values, g.values))


def spectral_tail_max(f: PeriodicField, k: int) -> float:
    """Largest |f_hat(m)| over the k highest retained wavenumbers N/2-k < |m| <= N/2."""
    half = f.n_modes // 2
    if k < 1 or k >= half:
        raise InvalidArgumentError(f"tail window k={k} must satisfy 1 <= k < N/2={half}")
    m = np.abs(f.grid.wavenumbers)
    return float(np.max(np.abs(f.coeffs[m > half - k])))


def resample(f: PeriodicField, grid: FourierGrid) -> PeriodicField:
    """Zero-pad or truncate the spectrum onto another grid."""
    if grid == f.grid:
        return f
    return field_from_coeffs(grid, _transfer_coeffs(f.coeffs, grid.n_modes))


def _transfer_coeffs(coeffs: np.ndarray, size: int) -> np.ndarray:
    n = coeffs.size
    out = np.zeros(size, dtype=complex)
    if size >= n:
        half = n // 2
        out[:half] = coeffs[:half]
        out[size - half + 1:] = coeffs[half + 1:]
        # Nyquist splits between +N/2 and -N/2
        out[half] += 0.5 * coeffs[half]
        out[size - half] += 0.5 * coeffs[half]
    else:
        half = size // 2
        out[:half] = coeffs[:half]
        out[half + 1:] = coeffs[n - half + 1:]
        out[half] = coeffs[half] + coeffs[n - half]
    return out


def multiply(f: PeriodicField, g: PeriodicField) -> PeriodicField:
    """Dealiased product: pad to 3N/2, multiply pointwise, truncate back to N."""
    _check_same_grid(f, g)
    n = f.n_modes
    padded = 3 * n // 2
    fv = _values_from_coeffs(_transfer_coeffs(f.coeffs, padded), padded)
    gv = _values_from_coeffs(_transfer_coeffs(g.coeffs, padded), padded)
    product = _coeffs_from_values(fv * gv)
    return field_from_coeffs(f.grid, _transfer_coeffs(product, n))


def square(f: PeriodicField) -> PeriodicField:
    return multiply(f, f)


def translate(f: PeriodicField, shift: float) -> PeriodicField:
    """Return g(x) = f(x - shift)."""
    m = f.grid.wavenumbers.astype(float)
    phase = np.exp(-1j * m * shift)
    coeffs = f.coeffs * phase
    # keep the Nyquist entry real so the result stays a real field
    coeffs[f.grid.nyquist] = f.coeffs[f.grid.nyquist] * np.cos(f.grid.nyquist * shift)
    return field_from_coeffs(f.grid, coeffs)


def phase_align(f: PeriodicField) -> PeriodicField:
    """Translate so the first harmonic peaks at x = 0 (f_hat(1) real and positive)."""
    c1 = f.coefficient(1)
    if abs(c1) < 1e-14 * max(1.0, f.max_norm()):
        return f
    return translate(f, float(np.angle(c1)))


def even_part(f: PeriodicField) -> PeriodicField:
    coeffs = f.coeffs.real.astype(complex)
    return field_from_coeffs(f.grid, coeffs)


def odd_part_norm(f: PeriodicField) -> float:
    """Max norm of the odd part (f(x) - f(-x))/2."""
    odd = 1j * f.coeffs.imag
    return float(np.max(np.abs(_values_from_coeffs(odd))))


def cosine_product_matrix(p: np.ndarray) -> np.ndarray:
    """
    Matrix A of multiplication by an even field in the cosine basis.

    With psi = p0 + 2 sum p_m cos(mx) and f likewise, (psi f)_hat(m) = (A f)_m for
    m = 0..K, where A[m, 0] = p_m and A[m, n] = p_|m-n| + p_(m+n) for n >= 1.
    Coefficients beyond K are treated as zero.

    Args:
        p: Cosine coefficients p_0..p_K

    Returns:
        (K+1) x (K+1) real matrix
    """
    p = np.asarray(p, dtype=float)
    size = p.size
    idx = np.arange(size)
    toeplitz_part = p[np.abs(idx[:, None] - idx[None, :])]
    padded = np.concatenate([p, np.zeros(size)])
    hankel_part = hankel(padded[:size], padded[size - 1:2 * size - 1])
    matrix = toeplitz_part + hankel_part
    matrix[:, 0] = p
    return matrix
