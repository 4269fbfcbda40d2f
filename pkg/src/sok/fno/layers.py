"""Building blocks of the operator network.

All functions take fields shaped ``(batch, channels, *spatial)`` and work
on plain arrays as well as recorded :class:`~sok.autodiff.Var` values.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .. import autodiff as ad
from ..spectral_ops import NyquistError
from .config import Activation, SkipKind

__all__ = [
    "activation_fn",
    "complex_activation",
    "complex_wrap",
    "centered_slices",
    "resample_field",
    "spectral_conv_forward",
    "separable_spectral_conv_forward",
    "channel_mlp_forward",
    "skip_forward",
    "instance_norm",
    "domain_pad",
    "domain_unpad",
]

_ACTIVATIONS = {
    Activation.GELU: ad.gelu,
    Activation.RELU: ad.relu,
    Activation.TANH: ad.tanh,
    Activation.IDENTITY: ad.identity,
}


def activation_fn(kind: Activation | str) -> Callable:
    return _ACTIVATIONS[Activation(kind)]


def complex_activation(fn: Callable) -> Callable:
    """Apply a real activation to real and imaginary parts separately."""

    def wrapped(z):
        if not np.iscomplexobj(ad.value_of(z)):
            return fn(z)
        return ad.add(fn(ad.real(z)), ad.mul(1j, fn(ad.imag(z))))

    return wrapped


def complex_wrap(op_real: Callable, op_imag: Callable | None = None) -> Callable:
    """Build a complex-capable linear map from two real ones.

    Computes (W_r + i W_i)(x_r + i x_i) as
    (W_r x_r - W_i x_i) + i (W_r x_i + W_i x_r).
    """

    def wrapped(z):
        zv = ad.value_of(z)
        xr = ad.real(z) if np.iscomplexobj(zv) else z
        xi = ad.imag(z) if np.iscomplexobj(zv) else None
        re = op_real(xr)
        im = op_imag(xr) if op_imag is not None else None
        if xi is not None:
            re = ad.sub(re, op_imag(xi)) if op_imag is not None else re
            im = op_real(xi) if im is None else ad.add(im, op_real(xi))
        return re if im is None else ad.add(re, ad.mul(1j, im))

    return wrapped


def centered_slices(n: int, k: int) -> slice:
    """Index range of the k central modes in a centered spectrum of length n."""
    center = n // 2
    return slice(center - k // 2, center + (k + 1) // 2)


def _spatial(x) -> tuple[int, ...]:
    return tuple(ad.value_of(x).shape[2:])


def resample_field(x, out_resolution: Sequence[int]):
    """Band-limited resampling of the spatial axes (pad or crop the centered spectrum)."""
    n = _spatial(x)
    m = tuple(int(v) for v in out_resolution)
    if n == m:
        return x
    xv = ad.value_of(x)
    axes = tuple(range(2, xv.ndim))
    keep = [min(a, b) for a, b in zip(n, m)]
    xh = ad.fftshift(ad.fftn(x, axes), axes)
    block = ad.getitem(xh, (slice(None), slice(None)) + tuple(centered_slices(a, k) for a, k in zip(n, keep)))
    out = ad.embed(block, xv.shape[:2] + m, (slice(None), slice(None)) + tuple(centered_slices(b, k) for b, k in zip(m, keep)))
    y = ad.mul(ad.ifftn(ad.ifftshift(out, axes), axes), np.sqrt(np.prod(m) / np.prod(n)))
    return y if np.iscomplexobj(xv) else ad.real(y)


def _bias_shape(c: int, d: int) -> tuple[int, ...]:
    return (1, c) + (1,) * d


def spectral_conv_forward(
    x,
    weight,
    n_modes: Sequence[int],
    out_resolution: Sequence[int] | None = None,
    bias=None,
    complex_data: bool = False,
):
    """Spectral convolution with a centered block of retained modes.

    ``weight`` has shape ``(*K_w, C_in, C_out)`` with ``K_w >= n_modes``;
    its central ``n_modes`` block is used. The retained block of the input
    spectrum is mixed across channels mode by mode and written into the
    centered spectrum of the output grid, so ``out_resolution`` different
    from the input resolution resamples the field.
    """
    xv = ad.value_of(x)
    wv = ad.value_of(weight)
    n = xv.shape[2:]
    d = len(n)
    modes = tuple(int(k) for k in n_modes)
    m = tuple(n) if out_resolution is None else tuple(int(v) for v in out_resolution)
    if len(modes) != d or len(m) != d:
        raise ValueError("n_modes and out_resolution need one entry per spatial axis")
    if any(k > a for k, a in zip(modes, n)):
        raise NyquistError(f"n_modes {modes} exceed input resolution {tuple(n)}")
    wk = wv.shape[:d]
    if any(k > w for k, w in zip(modes, wk)):
        raise ValueError(f"n_modes {modes} exceed allocated weight modes {wk}")
    c_in, c_out = wv.shape[d], wv.shape[d + 1]
    if xv.shape[1] != c_in:
        raise ValueError(f"input has {xv.shape[1]} channels, weight expects {c_in}")
    keep = tuple(min(k, b) for k, b in zip(modes, m))
    axes = tuple(range(2, 2 + d))
    xh = ad.fftshift(ad.fftn(x, axes), axes)
    block = ad.getitem(xh, (slice(None), slice(None)) + tuple(centered_slices(a, k) for a, k in zip(n, keep)))
    w = ad.getitem(weight, tuple(centered_slices(a, k) for a, k in zip(wk, keep)) + (slice(None), slice(None)))
    size = int(np.prod(keep))
    batch = xv.shape[0]
    mixed = ad.einsum(
        "bip,pio->bop",
        ad.reshape(block, (batch, c_in, size)),
        ad.reshape(w, (size, c_in, c_out)),
    )
    mixed = ad.reshape(mixed, (batch, c_out) + keep)
    out = ad.embed(mixed, (batch, c_out) + m, (slice(None), slice(None)) + tuple(centered_slices(b, k) for b, k in zip(m, keep)))
    y = ad.mul(ad.ifftn(ad.ifftshift(out, axes), axes), np.sqrt(np.prod(m) / np.prod(n)))
    if not complex_data:
        y = ad.real(y)
    if bias is not None:
        y = ad.add(y, ad.reshape(bias, _bias_shape(c_out, d)))
    return y


def separable_spectral_conv_forward(
    x,
    weights: Sequence,
    n_modes: Sequence[int],
    out_resolution: Sequence[int] | None = None,
    bias=None,
    complex_data: bool = False,
):
    """Per-axis spectral multipliers applied one axis at a time.

    ``weights[j]`` has shape ``(K_w_j, C)``: one complex multiplier per mode
    and channel on axis j, with no channel mixing. The result equals a dense
    spectral convolution whose weight is diagonal in channels with entries
    prod_j weights[j][k_j, c].
    """
    xv = ad.value_of(x)
    n = xv.shape[2:]
    d = len(n)
    c = xv.shape[1]
    modes = tuple(int(k) for k in n_modes)
    m = tuple(n) if out_resolution is None else tuple(int(v) for v in out_resolution)
    if len(weights) != d:
        raise ValueError("need one weight per spatial axis")
    if any(k > a for k, a in zip(modes, n)):
        raise NyquistError(f"n_modes {modes} exceed input resolution {tuple(n)}")
    y = x
    for j in range(d):
        axis = 2 + j
        wv = ad.value_of(weights[j])
        if wv.shape[1] != c or wv.shape[0] < modes[j]:
            raise ValueError(f"weight for axis {j} has shape {wv.shape}")
        keep = min(modes[j], m[j])
        yh = ad.fftshift(ad.fftn(y, axis), axis)
        cur = ad.value_of(yh).shape
        sel = [slice(None)] * (2 + d)
        sel[axis] = centered_slices(cur[axis], keep)
        block = ad.getitem(yh, tuple(sel))
        w = ad.getitem(weights[j], (centered_slices(wv.shape[0], keep), slice(None)))
        shape = [1] * (2 + d)
        shape[1] = c
        shape[axis] = keep
        w = ad.reshape(ad.transpose(w, (1, 0)), tuple(shape))
        block = ad.mul(block, w)
        new_shape = list(cur)
        new_shape[axis] = m[j]
        put = [slice(None)] * (2 + d)
        put[axis] = centered_slices(m[j], keep)
        full = ad.embed(block, tuple(new_shape), tuple(put))
        y = ad.mul(ad.ifftn(ad.ifftshift(full, axis), axis), np.sqrt(m[j] / n[j]))
    if not complex_data:
        y = ad.real(y)
    if bias is not None:
        y = ad.add(y, ad.reshape(bias, _bias_shape(c, d)))
    return y


def channel_mlp_forward(x, layers: Sequence[tuple], activation: Activation | str = Activation.GELU, dropout: float = 0.0):
    """Position-wise MLP over channels.

    ``layers`` is a sequence of ``(weight, bias)`` with weight shaped
    ``(C_out, C_in)``; the activation is applied between layers only.
    """
    if dropout:
        raise ValueError("dropout is not supported")
    xv = ad.value_of(x)
    batch, spatial = xv.shape[0], xv.shape[2:]
    points = int(np.prod(spatial))
    act = complex_activation(activation_fn(activation))
    h = ad.reshape(x, (batch, xv.shape[1], points))
    for i, (w, b) in enumerate(layers):
        wv = ad.value_of(w)
        if wv.shape[1] != ad.value_of(h).shape[1]:
            raise ValueError(f"layer {i} expects {wv.shape[1]} channels, got {ad.value_of(h).shape[1]}")
        h = ad.einsum("oi,bip->bop", w, h)
        if b is not None:
            h = ad.add(h, ad.reshape(b, (1, wv.shape[0], 1)))
        if i < len(layers) - 1:
            h = act(h)
    return ad.reshape(h, (batch, ad.value_of(h).shape[1]) + tuple(spatial))


def skip_forward(x, kind: SkipKind | str, params: dict | None = None):
    """Skip path: identity, linear channel map, soft gating w * x + b, or none (returns None)."""
    kind = SkipKind(kind)
    if kind is SkipKind.NONE:
        return None
    if kind is SkipKind.IDENTITY:
        return x
    d = ad.value_of(x).ndim - 2
    if kind is SkipKind.LINEAR:
        w = params["weight"]
        xv = ad.value_of(x)
        flat = ad.reshape(x, xv.shape[:2] + (-1,))
        out = ad.einsum("oi,bip->bop", w, flat)
        return ad.reshape(out, (xv.shape[0], ad.value_of(w).shape[0]) + xv.shape[2:])
    c = ad.value_of(params["scale"]).shape[0]
    return ad.add(
        ad.mul(ad.reshape(params["scale"], _bias_shape(c, d)), x),
        ad.reshape(params["bias"], _bias_shape(c, d)),
    )


def instance_norm(x, eps: float = 1e-5):
    """Normalize each (sample, channel) over space; no learned affine."""
    xv = ad.value_of(x)
    axes = tuple(range(2, xv.ndim))
    if np.iscomplexobj(xv):
        return complex_activation(lambda t: instance_norm(t, eps))(x)
    centered = ad.sub(x, ad.mean(x, axes, keepdims=True))
    var = ad.mean(ad.square(centered), axes, keepdims=True)
    return ad.mul(centered, ad.power(ad.add(var, eps), -0.5))


def _pad_amounts(spatial: Sequence[int], fractions: Sequence[float]) -> tuple[int, ...]:
    fr = tuple(np.atleast_1d(fractions).astype(float))
    if len(fr) == 1 and len(spatial) > 1:
        fr = fr * len(spatial)
    if len(fr) != len(spatial):
        raise ValueError("need one padding fraction per spatial axis")
    return tuple(int(round(n * f)) for n, f in zip(spatial, fr))


def domain_pad(x, fractions):
    """Append round(N_j * fraction_j) zeros at the end of each spatial axis."""
    xv = ad.value_of(x)
    spatial = xv.shape[2:]
    pads = _pad_amounts(spatial, fractions)
    if not any(pads):
        return x
    shape = xv.shape[:2] + tuple(n + p for n, p in zip(spatial, pads))
    return ad.embed(x, shape, (slice(None), slice(None)) + tuple(slice(0, n) for n in spatial))


def domain_unpad(x, resolution: Sequence[int]):
    """Keep the first ``resolution[j]`` points of each spatial axis."""
    xv = ad.value_of(x)
    res = tuple(int(r) for r in resolution)
    if xv.shape[2:] == res:
        return x
    if any(r > n for r, n in zip(res, xv.shape[2:])):
        raise ValueError("cannot unpad to a larger resolution")
    return ad.getitem(x, (slice(None), slice(None)) + tuple(slice(0, r) for r in res))
