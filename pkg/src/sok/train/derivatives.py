"""Spectral derivatives that can be recorded on a tape."""

from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from ..tensor_core import GridSpec


def spectral_derivative_ad(x, grid: GridSpec, axis: int = 0, order: int = 1):
    """Derivative of order ``order`` along spatial ``axis`` (trailing axes are the grid).

    Matches :func:`sok.spectral_ops.spectral_derivative`, including the
    dropped Nyquist mode for odd orders on even grids.
    """
    grid.require_periodic("spectral differentiation")
    xv = ad.value_of(x)
    arr_axis = xv.ndim - grid.ndim + axis
    n = grid.resolution[axis]
    if xv.shape[arr_axis] != n:
        raise ValueError(f"field shape {xv.shape} does not match grid {grid.resolution}")
    if order == 0:
        return x
    mult = (1j * grid.wavenumbers(axis)) ** order
    if order % 2 == 1 and n % 2 == 0:
        mult[n // 2] = 0.0
    shape = [1] * xv.ndim
    shape[arr_axis] = n
    out = ad.ifftn(ad.mul(ad.fftn(x, arr_axis), mult.reshape(shape)), arr_axis)
    return ad.real(out) if np.isrealobj(xv) else out


def laplacian_ad(x, grid: GridSpec):
    total = None
    for a in range(grid.ndim):
        term = spectral_derivative_ad(x, grid, a, 2)
        total = term if total is None else ad.add(total, term)
    return total
