"""Sinusoidal positional channels."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ..spectral_ops import NyquistError
from ..tensor_core import GridSpec

__all__ = ["EmbeddingMode", "EmbeddingSpec", "sinusoidal_embed", "append_channels"]


class EmbeddingMode(enum.Enum):
    AMPLITUDE = "amplitude"
    FREQUENCY = "frequency"


@dataclass(frozen=True)
class EmbeddingSpec:
    """``harmonics`` sine/cosine pairs on ``grid``; ``scale`` multiplies frequencies in FREQUENCY mode."""

    mode: EmbeddingMode
    harmonics: int
    grid: GridSpec
    scale: float = 1.0


def sinusoidal_embed(p: float, spec: EmbeddingSpec) -> np.ndarray:
    """Channels [sin(1x), cos(1x), ..., sin(Lx), cos(Lx)] on a 1D grid.

    Coordinates are mapped to [0, 2 pi). In AMPLITUDE mode every channel is
    multiplied by ``p``; in FREQUENCY mode harmonic j oscillates at
    j * scale * p. Frequencies above N/2 are rejected.
    """
    grid = spec.grid
    if grid.ndim != 1:
        raise ValueError("sinusoidal embeddings are defined on one-dimensional grids")
    if spec.harmonics < 1:
        raise ValueError("need at least one harmonic")
    n = grid.resolution[0]
    x = 2 * np.pi * np.arange(n) / n
    j = np.arange(1, spec.harmonics + 1)[:, None]
    mode = EmbeddingMode(spec.mode)
    if mode is EmbeddingMode.AMPLITUDE:
        top = spec.harmonics
        freq, amp = j * 1.0, p
    else:
        top = spec.harmonics * abs(spec.scale * p)
        freq, amp = j * spec.scale * p, 1.0
    if top > n / 2:
        raise NyquistError(f"highest embedded frequency {top:g} exceeds N/2 = {n / 2:g}")
    out = np.empty((2 * spec.harmonics, n))
    out[0::2] = amp * np.sin(freq * x)
    out[1::2] = amp * np.cos(freq * x)
    return out


def append_channels(x: np.ndarray, extra: np.ndarray) -> np.ndarray:
    """Concatenate fixed channels to a batch ``(B, C, *N)`` along the channel axis."""
    x = np.asarray(x)
    extra = np.broadcast_to(extra, (x.shape[0],) + extra.shape)
    return np.concatenate([x, extra], axis=1)
