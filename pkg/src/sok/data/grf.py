"""Band-limited Gaussian random fields with power-law spectra."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ..tensor_core import ifftn

__all__ = ["GrfSpec", "grf_coefficients", "sample_grf", "sample_grf_batch"]


@dataclass(frozen=True)
class GrfSpec:
    """Random field u(x) = sum_k c_k exp(2 pi i k.x / L) over |k_j| <= k_max.

    Coefficients are complex Gaussian with E|c_k|^2 = amplitude^2 |k|^(-2 gamma)
    (integer mode norm |k|), c_0 = 0, and c_{-k} = conj(c_k).
    """

    resolution: tuple[int, ...] | int
    domain_length: float = 2 * np.pi
    gamma: float = 2.0
    k_max: int = 16
    seed: int = 0
    amplitude: float = 1.0

    def __post_init__(self):
        res = tuple(int(n) for n in np.atleast_1d(self.resolution))
        object.__setattr__(self, "resolution", res)
        if self.k_max < 1:
            raise ValueError("k_max must be at least 1")
        if any(2 * self.k_max >= n for n in res):
            raise ValueError(f"k_max={self.k_max} needs more than {2 * self.k_max} points per axis, got {res}")

    @property
    def ndim(self) -> int:
        return len(self.resolution)


def grf_coefficients(spec: GrfSpec, index: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Integer modes (M x d) and their coefficients for sample ``index``.

    The draw depends only on (seed, index, k_max, gamma), never on the
    resolution, so one sample can be rendered on any grid.
    """
    d = spec.ndim
    rng = np.random.default_rng([int(spec.seed), int(index)])
    axis = np.arange(-spec.k_max, spec.k_max + 1)
    modes = np.array(list(itertools.product(axis, repeat=d)), dtype=int).reshape(-1, d)
    z = (rng.standard_normal(len(modes)) + 1j * rng.standard_normal(len(modes))) / np.sqrt(2.0)
    # modes are listed so that -k sits at the mirrored position
    z = (z + np.conj(z[::-1])) / np.sqrt(2.0)
    norm = np.sqrt((modes.astype(float) ** 2).sum(axis=1))
    with np.errstate(divide="ignore"):
        amp = np.where(norm > 0, spec.amplitude * norm ** (-spec.gamma), 0.0)
    return modes, amp * z


def sample_grf(spec: GrfSpec, index: int = 0, resolution=None) -> np.ndarray:
    """Render sample ``index`` on the spec grid (or another ``resolution``)."""
    res = spec.resolution if resolution is None else tuple(int(n) for n in np.atleast_1d(resolution))
    if any(2 * spec.k_max >= n for n in res):
        raise ValueError(f"resolution {res} cannot carry modes up to {spec.k_max}")
    modes, coeffs = grf_coefficients(spec, index)
    spectrum = np.zeros(res, dtype=np.complex128)
    idx = tuple((modes[:, j] % res[j]) for j in range(len(res)))
    spectrum[idx] = coeffs * np.sqrt(np.prod(res))
    field = ifftn(spectrum)
    return field.real


def sample_grf_batch(spec: GrfSpec, count: int, start: int = 0, resolution=None) -> np.ndarray:
    return np.stack([sample_grf(spec, start + i, resolution) for i in range(count)]) if count else np.zeros((0,) + tuple(resolution or spec.resolution))
