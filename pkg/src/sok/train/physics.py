"""PDE residual losses computed with spectral derivatives."""

from __future__ import annotations

import numpy as np

from .. import autodiff as ad
from ..data.pde import check_zero_mean
from ..extension import ExtensionOperator, extend_1d
from ..tensor_core import GridSpec
from .derivatives import laplacian_ad

__all__ = ["physics_residual_poisson", "extension_matrix", "fd_poisson_residual"]


def extension_matrix(op: ExtensionOperator, n: int) -> np.ndarray:
    """Matrix E of shape (n, n + c) with extend_1d(f) = f @ E."""
    return extend_1d(np.eye(n), op)


def physics_residual_poisson(
    u_pred,
    f,
    grid: GridSpec,
    extension: ExtensionOperator | None = None,
    mean_weight: float = 1.0,
    mean_tol: float = 1e-8,
):
    """Integrated squared residual of -Laplacian(u) = f plus ``mean_weight * mean(u)^2``.

    The trailing ``grid.ndim`` axes are spatial; leading axes are averaged.
    With ``extension`` (one-dimensional grids only) u and f are first
    continued periodically, differentiated on the enlarged grid, and the
    residual is restricted back to the original points.
    """
    f = np.asarray(f, dtype=float)
    uv = ad.value_of(u_pred)
    if uv.shape[uv.ndim - grid.ndim:] != grid.resolution or f.shape[f.ndim - grid.ndim:] != grid.resolution:
        raise ValueError("u and f must end with the grid resolution")
    spatial = tuple(range(uv.ndim - grid.ndim, uv.ndim))
    f_axes = tuple(range(f.ndim - grid.ndim, f.ndim))
    if extension is None:
        check_zero_mean(f, f_axes, mean_tol)
        residual = ad.sub(ad.neg(laplacian_ad(u_pred, grid)), f)
    else:
        if grid.ndim != 1:
            raise ValueError("extension-based residuals are one-dimensional")
        n = grid.resolution[0]
        c = extension.c
        ext = extension_matrix(extension, n)
        big = GridSpec(n + c, grid.spacing[0] * (n + c))
        u_ext = ad.einsum("...n,nm->...m", u_pred, ext)
        lap = laplacian_ad(u_ext, big)
        half = c // 2
        residual = ad.sub(ad.neg(ad.getitem(lap, (Ellipsis, slice(half, half + n)))), f)
    dq = grid.cell_volume
    per_point = ad.abs2(residual)
    integral = ad.mul(ad.sum(per_point, spatial), dq)
    mean_u = ad.mean(u_pred, spatial)
    total = ad.add(integral, ad.mul(ad.abs2(mean_u), mean_weight))
    return ad.mean(total) if np.ndim(ad.value_of(total)) else total


def fd_poisson_residual(u: np.ndarray, f: np.ndarray, grid: GridSpec, mean_weight: float = 1.0) -> float:
    """Same quantity with a fourth-order periodic finite-difference Laplacian (1D)."""
    if grid.ndim != 1:
        raise ValueError("finite-difference oracle is one-dimensional")
    h = grid.spacing[0]
    u = np.asarray(u, dtype=float)
    lap = (-np.roll(u, 2, -1) + 16 * np.roll(u, 1, -1) - 30 * u + 16 * np.roll(u, -1, -1) - np.roll(u, -2, -1)) / (12 * h * h)
    r = -lap - f
    total = np.sum(r * r, axis=-1) * h + mean_weight * np.mean(u, axis=-1) ** 2
    return float(np.mean(total))
