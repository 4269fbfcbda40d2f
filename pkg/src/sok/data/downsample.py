"""Coarsening strategies for gridded fields."""

from __future__ import annotations

import enum

import numpy as np

from ..spectral_ops import low_pass, spectral_resample, stride_downsample
from ..tensor_core import fftn, ifftn, mode_indices

__all__ = ["DownsampleStrategy", "downsample", "spectral_downsample", "matching_cutoff"]


class DownsampleStrategy(enum.Enum):
    STRIDE = "stride"
    SPECTRAL = "spectral"
    LOWPASS_STRIDE = "lowpass-stride"
    MEAN_POOL = "mean-pool"
    MAX_POOL = "max-pool"
    LINEAR_INTERP = "linear-interp"


def _factors(x: np.ndarray, factor, ndim: int | None) -> tuple[int, ...]:
    f = tuple(int(v) for v in np.atleast_1d(factor))
    if ndim is not None and len(f) == 1 and ndim > 1:
        f = f * ndim
    if len(f) > x.ndim:
        raise ValueError("more factors than array axes")
    for j, s in enumerate(f):
        n = x.shape[x.ndim - len(f) + j]
        if s < 1 or n % s:
            raise ValueError(f"factor {s} does not divide {n}")
    return f


def matching_cutoff(coarse_n: int) -> int:
    """Largest mode kept by spectral downsampling to ``coarse_n`` points."""
    return (coarse_n - 1) // 2


def spectral_downsample(x: np.ndarray, coarse) -> np.ndarray:
    """Crop the spectrum to the coarse grid and drop its Nyquist mode on even axes.

    Dropping the unpaired Nyquist coefficient makes this identical to an
    ideal low-pass at ``matching_cutoff`` followed by striding.
    """
    coarse = tuple(int(m) for m in np.atleast_1d(coarse))
    out = spectral_resample(x, coarse)
    if not any(m % 2 == 0 for m in coarse):
        return out
    axes = tuple(range(out.ndim - len(coarse), out.ndim))
    coeffs = fftn(out, axes)
    for a, m in zip(axes, coarse):
        if m % 2 == 0:
            index = [slice(None)] * out.ndim
            index[a] = m // 2
            coeffs[tuple(index)] = 0.0
    back = ifftn(coeffs, axes)
    return back.real if np.isrealobj(x) else back


def _pool(x: np.ndarray, f: tuple[int, ...], reducer) -> np.ndarray:
    lead = x.ndim - len(f)
    shape = list(x.shape[:lead])
    for j, s in enumerate(f):
        shape += [x.shape[lead + j] // s, s]
    blocks = x.reshape(shape)
    return reducer(blocks, axis=tuple(lead + 2 * j + 1 for j in range(len(f))))


def _linear_axis(x: np.ndarray, axis: int, s: int) -> np.ndarray:
    # coarse node i sits at the centre of fine block i, fine coordinate i*s + (s-1)/2
    n = x.shape[axis]
    pos = np.arange(n // s) * s + (s - 1) / 2
    left = np.floor(pos).astype(int)
    frac = pos - left
    lo = np.take(x, left % n, axis=axis)
    hi = np.take(x, (left + 1) % n, axis=axis)
    shape = [1] * x.ndim
    shape[axis] = n // s
    frac = frac.reshape(shape)
    return (1 - frac) * lo + frac * hi


def downsample(field, strategy: DownsampleStrategy | str, factor, ndim: int | None = None) -> np.ndarray:
    """Reduce the trailing axes by ``factor`` (an int or one per axis)."""
    x = np.asarray(field)
    strategy = DownsampleStrategy(strategy)
    f = _factors(x, factor, ndim)
    lead = x.ndim - len(f)
    coarse = tuple(x.shape[lead + j] // s for j, s in enumerate(f))
    if strategy is DownsampleStrategy.STRIDE:
        return stride_downsample(x, f)
    if strategy is DownsampleStrategy.SPECTRAL:
        return spectral_downsample(x, coarse)
    if strategy is DownsampleStrategy.LOWPASS_STRIDE:
        return stride_downsample(low_pass(x, [matching_cutoff(m) for m in coarse]), f)
    if strategy is DownsampleStrategy.MEAN_POOL:
        return _pool(x, f, np.mean)
    if strategy is DownsampleStrategy.MAX_POOL:
        return _pool(x, f, np.max)
    out = x
    for j, s in enumerate(f):
        if s > 1:
            out = _linear_axis(out, lead + j, s)
    return out


def retained_modes(n: int, coarse_n: int) -> np.ndarray:
    """Integer modes that survive spectral downsampling from n to coarse_n."""
    k = mode_indices(n)
    return k[np.abs(k) <= matching_cutoff(coarse_n)]
