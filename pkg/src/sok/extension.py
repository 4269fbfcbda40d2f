"""Periodic extension of non-periodic samples.

An extension appends ``c`` values to a length-``n`` signal so that the
result can be treated as one period of a smooth periodic function. The
extended sequence is laid out as::

    ext[c/2:], f, ext[:c/2]

so that, read cyclically, ``f[-1], ext[0], ..., ext[c-1], f[0]`` are
contiguous. Extension values are computed from the samples by fixed
matrices, so an operator can be built once and applied to many signals.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import legendre

from .spectral_ops import spectral_derivative
from .tensor_core import GridSpec, fftn, mode_indices

__all__ = [
    "ExtensionMethod",
    "ExtensionOperator",
    "ConditioningError",
    "build_zero_pad",
    "build_mirror_pad",
    "build_fc_legendre",
    "build_fc_gram",
    "build_spectrum_opt",
    "build_extension",
    "extend_1d",
    "extend_spectrum_opt",
    "restrict",
    "extend_nd",
    "restrict_nd",
    "sobolev_energy",
    "seam_jump",
    "extended_derivative",
]


class ConditioningError(np.linalg.LinAlgError):
    """The boundary fit is rank deficient."""


class ExtensionMethod(enum.Enum):
    ZERO_PAD = "zero"
    MIRROR_PAD = "mirror"
    FC_LEGENDRE = "fc-legendre"
    FC_GRAM = "fc-gram"
    SPECTRUM_OPT = "spectrum-opt"


@dataclass(frozen=True)
class ExtensionOperator:
    """Precomputed continuation.

    ``matrices`` depends on the method: FC-Legendre stores ``E`` (c x 2d)
    acting on ``(f_right, f_left)``; FC-Gram stores the left and right
    maps (each c x d); the spectrum-optimal method stores one c x n map
    and is therefore tied to ``n``.
    """

    method: ExtensionMethod
    d: int
    c: int
    matrices: tuple[np.ndarray, ...] = ()
    s: float = 0.0
    n: int | None = None
    condition_number: float = 1.0


def _check_c(c: int) -> None:
    if c < 2 or c % 2:
        raise ValueError(f"extension length c must be even and at least 2, got {c}")


def _readonly(*arrays):
    for a in arrays:
        a.flags.writeable = False
    return tuple(arrays)


def build_zero_pad(c: int) -> ExtensionOperator:
    _check_c(c)
    return ExtensionOperator(ExtensionMethod.ZERO_PAD, 1, c)


def build_mirror_pad(c: int) -> ExtensionOperator:
    _check_c(c)
    return ExtensionOperator(ExtensionMethod.MIRROR_PAD, 1, c)


def _wrap_nodes(d: int, c: int):
    """Nodes of [right stencil, extension, left stencil] mapped to [-1, 1]."""
    total = 2 * d + c
    t = np.linspace(-1.0, 1.0, total)
    stencil = np.concatenate([t[:d], t[d + c:]])
    return stencil, t[d:d + c]


def build_fc_legendre(d: int, c: int, n: int | None = None, rcond: float = 1e-13) -> ExtensionOperator:
    """Polynomial continuation across the wrap interval.

    The 2d boundary values are fitted by least squares with Legendre
    polynomials of degree up to 2d-1 over the interval spanning the right
    stencil, the gap and the left stencil; the fit is evaluated in the gap.
    """
    if d < 1:
        raise ValueError("stencil width d must be at least 1")
    _check_c(c)
    if n is not None and n < 2 * d:
        raise ValueError(f"signal length {n} is shorter than 2d = {2 * d}")
    stencil, gap = _wrap_nodes(d, c)
    vander = legendre.legvander(stencil, 2 * d - 1)
    sv = np.linalg.svd(vander, compute_uv=False)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
    if not np.isfinite(cond) or sv[-1] < rcond * sv[0]:
        raise ConditioningError(
            f"boundary fit with d={d}, c={c} is rank deficient (condition number {cond:.3e})"
        )
    ext = legendre.legvander(gap, 2 * d - 1) @ np.linalg.pinv(vander, rcond=rcond)
    return ExtensionOperator(ExtensionMethod.FC_LEGENDRE, d, c, _readonly(ext), n=n, condition_number=cond)


def blend_weight(t: np.ndarray) -> np.ndarray:
    """Raised-cosine weight, 1 at t=0 and 0 at t=1."""
    return 0.5 * (1.0 + np.cos(np.pi * t))


def _gram_map(stencil: np.ndarray, targets: np.ndarray, d: int) -> np.ndarray:
    # orthonormalize monomials on the stencil, then evaluate the fitted
    # polynomial at the targets: targets_vander @ R^-1 @ Q^T
    scale = max(d, 1)
    vs = np.vander(stencil / scale, d, increasing=True)
    q, r = np.linalg.qr(vs)
    if np.min(np.abs(np.diag(r))) < 1e-13 * np.max(np.abs(np.diag(r))):
        raise ConditioningError(f"Gram basis with d={d} is rank deficient")
    vt = np.vander(targets / scale, d, increasing=True)
    return np.linalg.solve(r.T, vt.T).T @ q.T


def build_fc_gram(d: int, c: int, n: int | None = None) -> ExtensionOperator:
    """Blend of two one-sided polynomial continuations.

    Each boundary block is projected onto an orthonormal basis of
    polynomials of degree d-1 on its stencil; the two continuations are
    blended across the gap with a raised-cosine weight.
    """
    if d < 1:
        raise ValueError("stencil width d must be at least 1")
    _check_c(c)
    if n is not None and n < 2 * d:
        raise ValueError(f"signal length {n} is shorter than 2d = {2 * d}")
    # positions in units of h: right stencil ends at 0, gap is 1..c,
    # left stencil starts at c+1
    right_stencil = np.arange(-(d - 1), 1, dtype=float)
    left_stencil = np.arange(c + 1, c + 1 + d, dtype=float)
    gap = np.arange(1, c + 1, dtype=float)
    w = blend_weight(gap / (c + 1))
    right = w[:, None] * _gram_map(right_stencil, gap, d)
    left = (1.0 - w)[:, None] * _gram_map(left_stencil - (c + 1), gap - (c + 1), d)
    return ExtensionOperator(ExtensionMethod.FC_GRAM, d, c, _readonly(left, right), n=n)


def _layout_positions(n: int, c: int) -> tuple[np.ndarray, np.ndarray]:
    half = c // 2
    interior = np.arange(half, half + n)
    ext = np.concatenate([np.arange(half + n, n + c), np.arange(half)])
    return interior, ext


def _sobolev_weights(total: int, s: float, include_mean: bool) -> np.ndarray:
    k = mode_indices(total).astype(float)
    w = (1.0 + k * k) ** (s / 2.0)
    if not include_mean:
        w = np.where(k == 0, 0.0, np.abs(k) ** s)
    return w


def sobolev_energy(x: np.ndarray, s: float, include_mean: bool = True) -> float:
    """Discrete sum of (1 + k^2)^s |X_k|^2 over integer modes k."""
    x = np.asarray(x, dtype=float)
    w = _sobolev_weights(x.shape[-1], s, include_mean)
    return float(np.sum((w * np.abs(fftn(x, -1))) ** 2))


def _spectrum_opt_system(n: int, c: int, s: float, include_mean: bool):
    total = n + c
    interior, ext = _layout_positions(n, c)
    eye = np.eye(total)
    dft = fftn(eye, 0)  # columns are transforms of unit vectors
    weighted = _sobolev_weights(total, s, include_mean)[:, None] * dft
    a = weighted[:, ext]
    b = weighted[:, interior]
    return np.vstack([a.real, a.imag]), np.vstack([b.real, b.imag])


def build_spectrum_opt(n: int, c: int, s: float = 1.0, include_mean: bool = True) -> ExtensionOperator:
    """Extension minimizing the discrete H^s energy of the extended signal.

    With ``include_mean=False`` the k=0 term is dropped (homogeneous
    seminorm), which makes constants exact minimizers.
    """
    if s < 0:
        raise ValueError("Sobolev order s must be non-negative")
    _check_c(c)
    if n < 1:
        raise ValueError("signal must be non-empty")
    a, b = _spectrum_opt_system(n, c, s, include_mean)
    sol, *_ = np.linalg.lstsq(a, -b, rcond=None)
    return ExtensionOperator(ExtensionMethod.SPECTRUM_OPT, 0, c, _readonly(sol), s=float(s), n=n)


def build_extension(method: ExtensionMethod | str, d: int = 6, c: int = 32, n: int | None = None, s: float = 1.0) -> ExtensionOperator:
    method = ExtensionMethod(method)
    if method is ExtensionMethod.ZERO_PAD:
        return build_zero_pad(c)
    if method is ExtensionMethod.MIRROR_PAD:
        return build_mirror_pad(c)
    if method is ExtensionMethod.FC_LEGENDRE:
        return build_fc_legendre(d, c, n)
    if method is ExtensionMethod.FC_GRAM:
        return build_fc_gram(d, c, n)
    if n is None:
        raise ValueError("spectrum-optimal extension needs the signal length n")
    return build_spectrum_opt(n, c, s)


def _extension_values(f: np.ndarray, op: ExtensionOperator) -> np.ndarray:
    """Extension values (last axis), ordered from just after f[-1] around to f[0]."""
    n = f.shape[-1]
    c = op.c
    m = op.method
    if m is ExtensionMethod.ZERO_PAD:
        return np.zeros(f.shape[:-1] + (c,), dtype=f.dtype)
    if m is ExtensionMethod.MIRROR_PAD:
        half = c // 2
        if half > n - 1:
            raise ValueError(f"mirror padding of {half} per side needs at least {half + 1} samples")
        after = f[..., n - 2 - np.arange(half)]
        before = f[..., half - np.arange(half)]
        return np.concatenate([after, before], axis=-1)
    if n < 2 * op.d:
        raise ValueError(f"signal length {n} is shorter than 2d = {2 * op.d}")
    right = f[..., n - op.d:]
    left = f[..., :op.d]
    if m is ExtensionMethod.FC_LEGENDRE:
        (ext,) = op.matrices
        return np.concatenate([right, left], axis=-1) @ ext.T
    if m is ExtensionMethod.FC_GRAM:
        lmap, rmap = op.matrices
        return left @ lmap.T + right @ rmap.T
    if op.n != n:
        raise ValueError(f"spectrum-optimal operator was built for n={op.n}, got {n}")
    (sol,) = op.matrices
    return f @ sol.T


def extend_1d(f, op: ExtensionOperator) -> np.ndarray:
    """Extend along the last axis; the middle ``n`` entries are ``f`` itself."""
    f = np.asarray(f, dtype=float)
    if f.ndim == 0 or f.shape[-1] < 1:
        raise ValueError("cannot extend an empty signal")
    _check_c(op.c)
    ext = _extension_values(f, op)
    half = op.c // 2
    return np.concatenate([ext[..., half:], f, ext[..., :half]], axis=-1)


def extend_spectrum_opt(f, c: int, s: float = 1.0, include_mean: bool = True) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    return extend_1d(f, build_spectrum_opt(f.shape[-1], c, s, include_mean))


def restrict(extended, n: int, c: int) -> np.ndarray:
    """Middle ``n`` entries along the last axis."""
    x = np.asarray(extended)
    if x.shape[-1] != n + c:
        raise ValueError(f"length {x.shape[-1]} does not equal n + c = {n + c}")
    half = c // 2
    return x[..., half:half + n].copy()


def _per_axis(ops, count: int) -> list[ExtensionOperator]:
    if isinstance(ops, ExtensionOperator):
        return [ops] * count
    ops = list(ops)
    if len(ops) != count:
        raise ValueError(f"need one extension operator per axis ({count}), got {len(ops)}")
    return ops


def extend_nd(field, ops: ExtensionOperator | Sequence[ExtensionOperator]) -> np.ndarray:
    """Extend along axis 0, then axis 1, and so on."""
    x = np.asarray(field, dtype=float)
    for axis, op in enumerate(_per_axis(ops, x.ndim)):
        x = np.moveaxis(extend_1d(np.moveaxis(x, axis, -1), op), -1, axis)
    return x


def restrict_nd(extended, shape: Sequence[int], ops: ExtensionOperator | Sequence[ExtensionOperator]) -> np.ndarray:
    x = np.asarray(extended)
    ops = _per_axis(ops, x.ndim)
    for axis in reversed(range(x.ndim)):
        x = np.moveaxis(restrict(np.moveaxis(x, axis, -1), shape[axis], ops[axis].c), -1, axis)
    return x


def seam_jump(sequence, position: int = 0, order: int = 0) -> float:
    """Finite difference of order ``order + 1`` straddling a seam.

    ``position`` is the cyclic index of the first sample after the seam;
    the default 0 is the periodic wrap. The value vanishes when the samples
    around the seam lie on a polynomial of degree at most ``order``.
    """
    x = np.asarray(sequence, dtype=float)
    width = order + 2
    before = (width + 1) // 2
    idx = (position - before + np.arange(width)) % x.size
    return float(abs(np.diff(x[idx], order + 1)[0]))


def extended_derivative(f, spacing: float, op: ExtensionOperator | None = None, order: int = 1) -> np.ndarray:
    """Spectral derivative of samples ``f`` (last axis, uniform ``spacing``).

    Without ``op`` the samples are treated as one period. With ``op`` they
    are extended first, differentiated on the enlarged period and restricted.
    """
    f = np.asarray(f, dtype=float)
    n = f.shape[-1]
    if op is None:
        return spectral_derivative(f, GridSpec((n,), (n * spacing,)), 0, order)
    ext = extend_1d(f, op)
    total = ext.shape[-1]
    d = spectral_derivative(ext, GridSpec((total,), (total * spacing,)), 0, order)
    return restrict(d, n, op.c)
