"""Reference solvers on periodic grids: heat, Poisson and viscous Burgers."""

from __future__ import annotations

import numpy as np

from ..tensor_core import GridSpec, fftn, ifftn

__all__ = [
    "SolvabilityError",
    "wavenumber_squared",
    "heat_operator_exact",
    "poisson_solve_exact",
    "burgers_step",
    "burgers_solve",
    "dealias_mask",
]


class SolvabilityError(ValueError):
    """The periodic Poisson problem has no solution for this right-hand side."""


def _spatial_axes(x: np.ndarray, grid: GridSpec) -> tuple[int, ...]:
    if tuple(x.shape[x.ndim - grid.ndim:]) != grid.resolution:
        raise ValueError(f"field shape {x.shape} does not end with {grid.resolution}")
    return tuple(range(x.ndim - grid.ndim, x.ndim))


def wavenumber_squared(grid: GridSpec) -> np.ndarray:
    """|k|^2 on the grid in natural order, with physical wavenumbers."""
    total = np.zeros(grid.resolution)
    for a in range(grid.ndim):
        shape = [1] * grid.ndim
        shape[a] = grid.resolution[a]
        total = total + grid.wavenumbers(a).reshape(shape) ** 2
    return total


def heat_operator_exact(u0, nu: float, t: float, grid: GridSpec) -> np.ndarray:
    """Solve u_t = nu * Laplacian(u) exactly: each mode decays by exp(-nu |k|^2 t)."""
    grid.require_periodic("the heat solver")
    if nu < 0 or t < 0:
        raise ValueError("nu and t must be non-negative")
    u0 = np.asarray(u0, dtype=float)
    axes = _spatial_axes(u0, grid)
    decay = np.exp(-nu * t * wavenumber_squared(grid))
    return ifftn(fftn(u0, axes) * decay, axes).real


def poisson_solve_exact(f, grid: GridSpec, tol: float = 1e-8) -> np.ndarray:
    """Mean-zero solution of -Laplacian(u) = f.

    Raises SolvabilityError if the mean of ``f`` exceeds ``tol`` times its
    largest magnitude (or ``tol`` for small fields).
    """
    grid.require_periodic("the Poisson solver")
    f = np.asarray(f, dtype=float)
    axes = _spatial_axes(f, grid)
    check_zero_mean(f, axes, tol)
    k2 = wavenumber_squared(grid)
    inv = np.zeros_like(k2)
    np.divide(1.0, k2, out=inv, where=k2 > 0)
    return ifftn(fftn(f, axes) * inv, axes).real


def check_zero_mean(f: np.ndarray, axes, tol: float) -> None:
    mean = np.abs(np.mean(f, axis=axes))
    scale = max(float(np.max(np.abs(f))) if f.size else 0.0, 1.0)
    if np.any(mean > tol * scale):
        raise SolvabilityError(
            f"right-hand side has mean {float(np.max(mean)):.3e}; periodic Poisson needs mean zero"
        )


def dealias_mask(n: int) -> np.ndarray:
    """Keep modes with |k| < n/3 (two-thirds rule)."""
    k = np.fft.fftfreq(n, 1.0 / n)
    return np.abs(k) < n / 3.0


def _burgers_rhs(u_hat: np.ndarray, ik: np.ndarray, mask: np.ndarray) -> np.ndarray:
    u = ifftn(u_hat * mask, -1).real
    return -0.5 * ik * mask * fftn(u * u, -1)


def burgers_step(u, nu: float, dt: float, grid: GridSpec) -> np.ndarray:
    """One integrating-factor RK4 step of u_t + (u^2/2)_x = nu u_xx on a 1D grid.

    Diffusion is integrated exactly; the quadratic flux is dealiased.
    """
    return burgers_solve(u, nu, dt, 1, grid)


def burgers_solve(u0, nu: float, dt: float, steps: int, grid: GridSpec, keep_all: bool = False) -> np.ndarray:
    """Advance ``steps`` integrating-factor RK4 steps; optionally return every state."""
    if grid.ndim != 1:
        raise ValueError("the Burgers solver is one-dimensional")
    grid.require_periodic("the Burgers solver")
    if steps < 0 or dt <= 0 or nu < 0:
        raise ValueError("need steps >= 0, dt > 0, nu >= 0")
    u0 = np.asarray(u0, dtype=float)
    _spatial_axes(u0, grid)
    k = grid.wavenumbers(0)
    ik = 1j * k
    mask = dealias_mask(grid.resolution[0])
    half = np.exp(-nu * k * k * dt / 2)
    full = half * half
    u_hat = fftn(u0, -1)
    states = [u0.copy()] if keep_all else None
    for _ in range(steps):
        a = _burgers_rhs(u_hat, ik, mask)
        b = _burgers_rhs(half * (u_hat + 0.5 * dt * a), ik, mask)
        c = _burgers_rhs(half * u_hat + 0.5 * dt * b, ik, mask)
        d = _burgers_rhs(full * u_hat + dt * half * c, ik, mask)
        u_hat = full * u_hat + dt / 6 * (full * a + 2 * half * (b + c) + d)
        if keep_all:
            states.append(ifftn(u_hat, -1).real)
    if keep_all:
        return np.stack(states)
    return ifftn(u_hat, -1).real
