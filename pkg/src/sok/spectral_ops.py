"""Resampling, differentiation, filtering and aliasing diagnostics.

Spatial axes are always the trailing axes of an array; any leading axes
(batch, channel) are carried along untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import erf

from .tensor_core import (
    GridSpec,
    Layout,
    Spectrum,
    fftn,
    ifftn,
    mode_indices,
    shift_array,
    unshift_array,
)

__all__ = [
    "spectral_resample",
    "spectral_interpolate",
    "spectral_truncate",
    "spectral_derivative",
    "low_pass",
    "stride_downsample",
    "aliasing_fold",
    "ProbeReport",
    "nonlinearity_bandwidth_probe",
    "NyquistReport",
    "NyquistError",
    "validate_nyquist",
]


class NyquistError(ValueError):
    """Retained modes exceed what the grid can represent."""


def _as_tuple(value, ndim: int) -> tuple[int, ...]:
    vals = tuple(int(v) for v in np.atleast_1d(value))
    if len(vals) == 1 and ndim > 1:
        vals = vals * ndim
    if len(vals) != ndim:
        raise ValueError(f"expected {ndim} per-axis values, got {vals}")
    return vals


def _resample_axis(coeffs: np.ndarray, axis: int, m: int) -> np.ndarray:
    n = coeffs.shape[axis]
    if m == n:
        return coeffs
    src = np.moveaxis(coeffs, axis, -1)
    out = np.zeros(src.shape[:-1] + (m,), dtype=np.complex128)
    keep = mode_indices(min(n, m))
    out[..., keep % m] = src[..., keep % n]
    if m > n and n % 2 == 0:
        # split the lone Nyquist coefficient across +-n/2 so real signals stay real
        nyq = src[..., n // 2] / 2
        out[..., (-n // 2) % m] = nyq
        out[..., (n // 2) % m] = nyq
    out *= np.sqrt(m / n)
    return np.moveaxis(out, -1, axis)


def spectral_resample(signal, new_resolution) -> np.ndarray:
    """Trigonometric resampling of the trailing axes to ``new_resolution``.

    Upsampling zero-pads the spectrum (splitting an even-length Nyquist
    coefficient evenly between +-N/2); downsampling crops it. Values are
    preserved by a sqrt(M/N) factor per axis. Real input yields real output.
    """
    x = np.asarray(signal)
    new = np.atleast_1d(new_resolution).astype(int)
    d = new.size
    if d > x.ndim:
        raise ValueError("more target axes than signal axes")
    if np.any(new < 1):
        raise ValueError("resolutions must be positive")
    axes = tuple(range(x.ndim - d, x.ndim))
    if tuple(x.shape[a] for a in axes) == tuple(new):
        return x.copy()
    coeffs = fftn(x, axes)
    for a, m in zip(axes, new):
        coeffs = _resample_axis(coeffs, a, int(m))
    out = ifftn(coeffs, axes)
    return out.real if np.isrealobj(x) else out


def spectral_interpolate(signal, grid: GridSpec, new_resolution) -> np.ndarray:
    """Evaluate the trigonometric interpolant of ``signal`` on a new uniform grid."""
    grid.require_periodic("spectral interpolation")
    x = np.asarray(signal)
    if tuple(x.shape[x.ndim - grid.ndim:]) != grid.resolution:
        raise ValueError(f"signal shape {x.shape} does not end with grid resolution {grid.resolution}")
    return spectral_resample(x, _as_tuple(new_resolution, grid.ndim))


def spectral_truncate(signal, new_resolution) -> np.ndarray:
    """Keep the centered block of modes that fits on a coarser grid."""
    x = np.asarray(signal)
    new = np.atleast_1d(new_resolution).astype(int)
    old = np.array(x.shape[x.ndim - new.size:])
    if np.any(new > old):
        raise ValueError(f"cannot truncate {tuple(old)} up to {tuple(new)}; use spectral_interpolate")
    return spectral_resample(x, new)


def spectral_derivative(signal, grid: GridSpec, axis: int = 0, order: int = 1) -> np.ndarray:
    """m-th derivative along spatial ``axis`` by multiplying with (i k)^m.

    For odd ``order`` on an even grid the Nyquist coefficient is dropped,
    since its derivative has no real-valued representation on the grid.
    """
    if order < 0:
        raise ValueError("derivative order must be non-negative")
    grid.require_periodic("spectral differentiation")
    x = np.asarray(signal)
    if order == 0:
        return x.copy()
    arr_axis = x.ndim - grid.ndim + axis
    n = grid.resolution[axis]
    if x.shape[arr_axis] != n:
        raise ValueError("signal does not match grid resolution")
    mult = (1j * grid.wavenumbers(axis)) ** order
    if order % 2 == 1 and n % 2 == 0:
        mult[n // 2] = 0.0
    shape = [1] * x.ndim
    shape[arr_axis] = n
    out = ifftn(fftn(x, arr_axis) * mult.reshape(shape), arr_axis)
    return out.real if np.isrealobj(x) else out


def low_pass(signal, cutoff) -> np.ndarray:
    """Zero every coefficient whose integer mode exceeds ``cutoff`` on some axis."""
    x = np.asarray(signal)
    cut = np.atleast_1d(cutoff).astype(int)
    d = cut.size
    axes = tuple(range(x.ndim - d, x.ndim))
    mask = np.ones([x.shape[a] for a in axes], dtype=bool)
    for j, a in enumerate(axes):
        n = x.shape[a]
        if cut[j] > n // 2:
            raise NyquistError(f"cutoff {cut[j]} exceeds Nyquist mode {n // 2} on axis {a}")
        keep = np.abs(mode_indices(n)) <= cut[j]
        shape = [1] * d
        shape[j] = n
        mask = mask & keep.reshape(shape)
    out = ifftn(fftn(x, axes) * mask, axes)
    return out.real if np.isrealobj(x) else out


def stride_downsample(signal, factor) -> np.ndarray:
    """Keep every ``factor``-th sample along the trailing axes."""
    x = np.asarray(signal)
    f = np.atleast_1d(factor).astype(int)
    d = f.size
    index = [slice(None)] * (x.ndim - d)
    for j in range(d):
        n = x.shape[x.ndim - d + j]
        if f[j] < 1 or n % f[j]:
            raise ValueError(f"factor {f[j]} does not divide {n}")
        index.append(slice(None, None, int(f[j])))
    return x[tuple(index)].copy()


def aliasing_fold(fine: Spectrum, coarse_n) -> Spectrum:
    """Fold a fine-grid spectrum onto a coarse grid.

    The coarse coefficient at k is the sum of fine coefficients at
    k + m * coarse_n, scaled by 1/sqrt(N/coarse_n) per axis, which is
    exactly the transform of the stride-downsampled signal.
    """
    axes = tuple(a % fine.coeffs.ndim for a in fine.axes)
    targets = _as_tuple(coarse_n, len(axes))
    coeffs = fine.coeffs
    if fine.layout is Layout.CENTERED:
        coeffs = unshift_array(coeffs, axes)
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    for a, m in zip(axes, targets):
        n = coeffs.shape[a]
        if m < 1 or n % m:
            raise ValueError(f"coarse size {m} does not divide {n}")
        s = n // m
        moved = np.moveaxis(coeffs, a, -1)
        folded = moved.reshape(moved.shape[:-1] + (s, m)).sum(axis=-2) / np.sqrt(s)
        coeffs = np.moveaxis(folded, -1, a)
    if fine.layout is Layout.CENTERED:
        coeffs = shift_array(coeffs, axes)
    return Spectrum(coeffs, fine.layout, fine.axes)


_PROBE_ACTIVATIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "gelu": lambda x: 0.5 * x * (1.0 + erf(x / np.sqrt(2.0))),
    "square": lambda x: x * x,
    "tanh": np.tanh,
}


@dataclass
class ProbeReport:
    """Output of :func:`nonlinearity_bandwidth_probe`.

    ``spectra[N]`` holds per-mode power |X_k|^2 / N in natural order, which
    is the squared amplitude of each Fourier mode independent of N.
    """

    activation: str
    resolutions: tuple[int, ...]
    spectra: dict[int, np.ndarray] = field(default_factory=dict)
    max_mode: dict[int, int] = field(default_factory=dict)
    aliased_energy: float = 0.0

    def rows(self):
        for n in self.resolutions:
            modes = mode_indices(n)
            order = np.argsort(modes, kind="stable")
            for k, p in zip(modes[order], self.spectra[n][order]):
                yield int(k), float(p), f"N={n}"


def nonlinearity_bandwidth_probe(
    signal,
    activation: str,
    resolutions: Sequence[int],
    domain_length: float = 2 * np.pi,
    rel_tol: float = 1e-20,
) -> ProbeReport:
    """Measure how a pointwise nonlinearity broadens a spectrum.

    ``signal`` is either a callable evaluated on each grid or samples of a
    band-limited function, which are spectrally resampled to each
    resolution. The aliased-energy figure compares the low band seen on the
    coarsest grid with the same band cropped from the finest grid.
    """
    if activation not in _PROBE_ACTIVATIONS:
        raise ValueError(f"activation must be one of {sorted(_PROBE_ACTIVATIONS)}")
    act = _PROBE_ACTIVATIONS[activation]
    res = tuple(sorted(int(n) for n in resolutions))
    report = ProbeReport(activation, res)
    coeffs = {}
    for n in res:
        if callable(signal):
            x = np.asarray(signal(np.arange(n) * domain_length / n), dtype=float)
        else:
            x = spectral_resample(np.asarray(signal, dtype=float), n)
        c = fftn(act(x)) / np.sqrt(n)
        coeffs[n] = c
        power = np.abs(c) ** 2
        report.spectra[n] = power
        total = power.sum()
        active = np.abs(mode_indices(n))[power > rel_tol * max(total, np.finfo(float).tiny)]
        report.max_mode[n] = int(active.max()) if active.size else 0
    lo, hi = res[0], res[-1]
    band = mode_indices(lo)
    band = band[np.abs(band) < lo / 2]
    coarse = coeffs[lo][band % lo]
    fine = coeffs[hi][band % hi]
    denom = np.linalg.norm(fine)
    report.aliased_energy = float(np.linalg.norm(coarse - fine) / denom) if denom > 0 else 0.0
    return report


@dataclass
class NyquistReport:
    resolution: tuple[int, ...]
    n_modes: tuple[int, ...]
    hard: list[int] = field(default_factory=list)
    soft: list[int] = field(default_factory=list)
    messages: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.hard

    @property
    def clean(self) -> bool:
        return not self.hard and not self.soft

    def raise_if_hard(self) -> None:
        if self.hard:
            raise NyquistError("; ".join(m for m in self.messages if m.startswith("hard")))


def validate_nyquist(n_modes, resolution, soft_ratio: float = 0.5) -> NyquistReport:
    """Check retained mode counts against grid resolution.

    Hard violation when K_j > N_j; soft warning when K_j > soft_ratio * N_j.
    ``resolution`` may be a GridSpec or a sequence of point counts.
    """
    if isinstance(resolution, GridSpec):
        resolution = resolution.resolution
    res = tuple(int(n) for n in np.atleast_1d(resolution))
    modes = _as_tuple(n_modes, len(res))
    report = NyquistReport(res, modes)
    for j, (k, n) in enumerate(zip(modes, res)):
        if k > n:
            report.hard.append(j)
            report.messages.append(f"hard: axis {j} keeps {k} modes but has only {n} points")
        elif k > soft_ratio * n:
            report.soft.append(j)
            report.messages.append(
                f"soft: axis {j} keeps {k} modes, above {soft_ratio:g} x {n} points; "
                "higher modes will alias under nonlinearities"
            )
    return report
