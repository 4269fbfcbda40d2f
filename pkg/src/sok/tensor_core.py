"""Orthonormal discrete Fourier transforms and spectrum bookkeeping.

Fields and spectra are plain numpy arrays (``complex128`` or ``float64``).
Every transform here uses the unitary normalization: a factor ``1/sqrt(N)``
is applied in both the forward and the inverse direction, so transforms
preserve inner products and the adjoint of ``fftn`` is ``ifftn``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

__all__ = [
    "GridSpec",
    "Layout",
    "Spectrum",
    "LayoutError",
    "has_fast_path",
    "mode_indices",
    "dft_1d",
    "idft_1d",
    "fftn",
    "ifftn",
    "fft",
    "ifft",
    "fftshift",
    "ifftshift",
    "shift_array",
    "unshift_array",
    "power_spectrum",
]


class LayoutError(ValueError):
    """Raised when a spectrum is used with the wrong zero-mode layout."""


class Layout(enum.Enum):
    NATURAL = "natural"
    CENTERED = "centered"


@dataclass(frozen=True)
class GridSpec:
    """Uniform tensor-product grid.

    Parameters
    ----------
    resolution : tuple of int
        Points per axis, each at least 2.
    domain_length : tuple of float
        Physical period (or extent) per axis.
    periodic : tuple of bool
        Whether each axis is periodic.
    """

    resolution: tuple[int, ...]
    domain_length: tuple[float, ...] = field(default=())
    periodic: tuple[bool, ...] = field(default=())

    def __post_init__(self):
        res = tuple(int(n) for n in np.atleast_1d(self.resolution))
        ndim = len(res)
        length = self.domain_length
        length = tuple(float(v) for v in np.atleast_1d(length)) if len(np.atleast_1d(length)) else (2 * np.pi,) * ndim
        if len(length) == 1 and ndim > 1:
            length = length * ndim
        periodic = tuple(bool(v) for v in np.atleast_1d(self.periodic)) if len(np.atleast_1d(self.periodic)) else (True,) * ndim
        if len(periodic) == 1 and ndim > 1:
            periodic = periodic * ndim
        if len(length) != ndim or len(periodic) != ndim:
            raise ValueError("resolution, domain_length and periodic must have one entry per axis")
        if any(n < 2 for n in res):
            raise ValueError(f"every axis needs at least 2 points, got {res}")
        if any(not np.isfinite(v) or v <= 0 for v in length):
            raise ValueError(f"domain lengths must be positive, got {length}")
        object.__setattr__(self, "resolution", res)
        object.__setattr__(self, "domain_length", length)
        object.__setattr__(self, "periodic", periodic)

    @property
    def ndim(self) -> int:
        return len(self.resolution)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.domain_length, self.resolution))

    @property
    def cell_volume(self) -> float:
        """Uniform quadrature weight, the product of L_j / N_j."""
        return float(np.prod(self.spacing))

    def points(self, axis: int = 0) -> np.ndarray:
        n = self.resolution[axis]
        return np.arange(n) * (self.domain_length[axis] / n)

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*[self.points(a) for a in range(self.ndim)], indexing="ij")

    def wavenumbers(self, axis: int = 0) -> np.ndarray:
        """Angular wavenumbers k * 2*pi / L in natural (unshifted) order."""
        return mode_indices(self.resolution[axis]) * (2 * np.pi / self.domain_length[axis])

    def with_resolution(self, resolution: Sequence[int] | int) -> "GridSpec":
        return GridSpec(tuple(np.atleast_1d(resolution)), self.domain_length, self.periodic)

    def require_periodic(self, what: str) -> None:
        if not all(self.periodic):
            raise ValueError(
                f"{what} needs a periodic grid; extend non-periodic data first "
                "(see sok.extension)"
            )


@dataclass(frozen=True)
class Spectrum:
    """Fourier coefficients plus the layout of their zero mode."""

    coeffs: np.ndarray
    layout: Layout = Layout.NATURAL
    axes: tuple[int, ...] = (-1,)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.coeffs.shape


def has_fast_path(n: int) -> bool:
    """True when a transform of length ``n`` uses the radix-2 path."""
    return n >= 1 and (n & (n - 1)) == 0


def mode_indices(n: int) -> np.ndarray:
    """Signed integer mode numbers in natural order; n=4 gives [0, 1, -2, -1]."""
    k = np.arange(n)
    return np.where(k < (n + 1) // 2, k, k - n)


@lru_cache(maxsize=64)
def _dft_matrix(n: int, inverse: bool) -> np.ndarray:
    k = np.arange(n)
    phase = np.outer(k, k) % n
    sign = 1.0 if inverse else -1.0
    mat = np.exp(sign * 2j * np.pi * phase / n) / np.sqrt(n)
    mat.flags.writeable = False
    return mat


@lru_cache(maxsize=64)
def _bit_reversal(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    rev.flags.writeable = False
    return rev


@lru_cache(maxsize=64)
def _twiddles(n: int, inverse: bool) -> tuple[np.ndarray, ...]:
    sign = 1.0 if inverse else -1.0
    tables = []
    half = 1
    while half < n:
        t = np.exp(sign * 1j * np.pi * np.arange(half) / half)
        t.flags.writeable = False
        tables.append(t)
        half *= 2
    return tuple(tables)


def _radix2_last(x: np.ndarray, inverse: bool) -> np.ndarray:
    n = x.shape[-1]
    lead = x.shape[:-1]
    y = x[..., _bit_reversal(n)]
    for tw in _twiddles(n, inverse):
        half = tw.shape[0]
        y = y.reshape(*lead, n // (2 * half), 2, half)
        even = y[..., 0, :]
        odd = y[..., 1, :] * tw
        y = np.stack((even + odd, even - odd), axis=-2)
    return y.reshape(*lead, n) / np.sqrt(n)


def _transform_last(x: np.ndarray, inverse: bool) -> np.ndarray:
    n = x.shape[-1]
    if n == 1:
        return x.copy()
    if has_fast_path(n):
        return _radix2_last(x, inverse)
    return x @ _dft_matrix(n, inverse)


def _normalize_axes(ndim: int, axes) -> tuple[int, ...]:
    if axes is None:
        return tuple(range(ndim))
    axes = (axes,) if np.isscalar(axes) else tuple(axes)
    out = tuple(int(a) % ndim for a in axes)
    if len(set(out)) != len(out):
        raise ValueError(f"repeated axes {axes}")
    return out


def _apply(x, axes, inverse: bool) -> np.ndarray:
    x = np.asarray(x, dtype=np.complex128)
    for ax in _normalize_axes(x.ndim, axes):
        moved = np.moveaxis(x, ax, -1)
        x = np.moveaxis(_transform_last(moved, inverse), -1, ax)
    return x


def fftn(x, axes=None) -> np.ndarray:
    """Orthonormal forward transform of an array over ``axes`` (default: all)."""
    return _apply(x, axes, inverse=False)


def ifftn(x, axes=None) -> np.ndarray:
    """Orthonormal inverse transform of an array over ``axes`` (default: all)."""
    return _apply(x, axes, inverse=True)


def dft_1d(signal) -> Spectrum:
    """Naive O(N^2) orthonormal DFT of a vector."""
    x = np.asarray(signal, dtype=np.complex128)
    if x.ndim != 1 or x.size < 1:
        raise ValueError("dft_1d expects a non-empty vector")
    return Spectrum(_dft_matrix(x.size, False) @ x, Layout.NATURAL, (0,))


def idft_1d(spectrum: Spectrum) -> np.ndarray:
    """Naive inverse of :func:`dft_1d`."""
    _require_natural(spectrum)
    coeffs = np.asarray(spectrum.coeffs, dtype=np.complex128)
    if coeffs.ndim != 1:
        raise ValueError("idft_1d expects a vector spectrum")
    return _dft_matrix(coeffs.size, True) @ coeffs


def _require_natural(spectrum: Spectrum) -> None:
    if spectrum.layout is not Layout.NATURAL:
        raise LayoutError("spectrum is centered; apply ifftshift before inverting")


def fft(signal, axes=None) -> Spectrum:
    x = np.asarray(signal)
    ax = _normalize_axes(x.ndim, axes)
    return Spectrum(fftn(x, ax), Layout.NATURAL, ax)


def ifft(spectrum: Spectrum, axes=None) -> np.ndarray:
    _require_natural(spectrum)
    return ifftn(spectrum.coeffs, spectrum.axes if axes is None else axes)


def shift_array(x: np.ndarray, axes) -> np.ndarray:
    """Move the zero mode of each listed axis to index N//2."""
    x = np.asarray(x)
    ax = _normalize_axes(x.ndim, axes)
    return np.roll(x, [x.shape[a] // 2 for a in ax], axis=ax)


def unshift_array(x: np.ndarray, axes) -> np.ndarray:
    """Inverse of :func:`shift_array`."""
    x = np.asarray(x)
    ax = _normalize_axes(x.ndim, axes)
    return np.roll(x, [-(x.shape[a] // 2) for a in ax], axis=ax)


def fftshift(spectrum: Spectrum) -> Spectrum:
    if spectrum.layout is Layout.CENTERED:
        raise LayoutError("spectrum is already centered")
    return Spectrum(shift_array(spectrum.coeffs, spectrum.axes), Layout.CENTERED, spectrum.axes)


def ifftshift(spectrum: Spectrum) -> Spectrum:
    if spectrum.layout is Layout.NATURAL:
        raise LayoutError("spectrum is already in natural order")
    return Spectrum(unshift_array(spectrum.coeffs, spectrum.axes), Layout.NATURAL, spectrum.axes)


def power_spectrum(signal, axes=None) -> np.ndarray:
    """|X_k|^2 in natural order; sums to the signal energy."""
    coeffs = fftn(signal, axes)
    return coeffs.real**2 + coeffs.imag**2
