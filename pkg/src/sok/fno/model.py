"""Parameter layout, initialization and the full forward pass."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .. import autodiff as ad
from ..spectral_ops import validate_nyquist
from .config import Factorization, FnoConfig, Norm, SkipKind
from .layers import (
    activation_fn,
    channel_mlp_forward,
    complex_activation,
    domain_pad,
    domain_unpad,
    instance_norm,
    resample_field,
    separable_spectral_conv_forward,
    skip_forward,
    spectral_conv_forward,
)
from .tucker import budget_ranks

__all__ = [
    "init_params",
    "mlp_shapes",
    "spectral_weight",
    "layer_resolutions",
    "fno_block_forward",
    "fno_forward",
    "FNO",
]


def mlp_shapes(c_in: int, c_out: int, hidden: int, n_layers: int) -> list[tuple[int, int]]:
    """(out, in) shapes of an MLP; hidden layers all have width ``hidden``."""
    if n_layers == 1:
        return [(c_out, c_in)]
    widths = [c_in] + [hidden] * (n_layers - 1) + [c_out]
    return [(widths[i + 1], widths[i]) for i in range(n_layers)]


def _lift_shapes(cfg: FnoConfig):
    if cfg.lifting_width:
        return mlp_shapes(cfg.in_channels, cfg.hidden_channels, cfg.lifting_width, 2)
    return mlp_shapes(cfg.in_channels, cfg.hidden_channels, 0, 1)


def _proj_shapes(cfg: FnoConfig):
    if cfg.projection_width:
        return mlp_shapes(cfg.hidden_channels, cfg.out_channels, cfg.projection_width, 2)
    return mlp_shapes(cfg.hidden_channels, cfg.out_channels, 0, 1)


def _dtype(cfg: FnoConfig):
    return np.complex128 if cfg.complex_data else np.float64


def _xavier(rng: np.random.Generator, shape: tuple[int, int], dtype) -> np.ndarray:
    bound = np.sqrt(6.0 / (shape[0] + shape[1]))
    w = rng.uniform(-bound, bound, size=shape)
    if dtype == np.complex128:
        w = w + 1j * rng.uniform(-bound, bound, size=shape)
    return w.astype(dtype)


def _complex_gauss(rng: np.random.Generator, shape, scale: float) -> np.ndarray:
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _orthonormal(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    q, _ = np.linalg.qr(_complex_gauss(rng, (rows, cols), 1.0))
    return q


def tucker_weight_ranks(cfg: FnoConfig) -> tuple[int, int, int]:
    c = cfg.hidden_channels
    return budget_ranks((int(np.prod(cfg.max_n_modes)), c, c), cfg.rank)


def init_params(cfg: FnoConfig, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Fresh parameters in declaration order."""
    dtype = _dtype(cfg)
    c = cfg.hidden_channels
    params: dict[str, np.ndarray] = {}

    def mlp(prefix, shapes):
        for i, shape in enumerate(shapes):
            params[f"{prefix}.{i}.weight"] = _xavier(rng, shape, dtype)
            params[f"{prefix}.{i}.bias"] = np.zeros(shape[0], dtype=dtype)

    def skip(prefix, kind):
        if kind is SkipKind.LINEAR:
            params[f"{prefix}.weight"] = _xavier(rng, (c, c), dtype)
        elif kind is SkipKind.SOFT_GATING:
            params[f"{prefix}.scale"] = np.ones(c, dtype=dtype)
            params[f"{prefix}.bias"] = np.zeros(c, dtype=dtype)

    mlp("lifting", _lift_shapes(cfg))
    kmax = cfg.max_n_modes
    scale = 1.0 / np.sqrt(c * np.prod(kmax))
    for layer in range(cfg.n_layers):
        p = f"blocks.{layer}"
        if cfg.separable:
            # the product of the per-axis factors gets the dense scale
            axis_scale = scale ** (1.0 / cfg.ndim)
            for j, k in enumerate(kmax):
                params[f"{p}.spectral.weight_axis{j}"] = _complex_gauss(rng, (k, c), axis_scale)
        elif cfg.factorization is Factorization.TUCKER:
            kf = int(np.prod(kmax))
            rk, ri, ro = tucker_weight_ranks(cfg)
            core_scale = scale * np.sqrt(kf * c * c / (rk * ri * ro))
            params[f"{p}.spectral.core"] = _complex_gauss(rng, (rk, ri, ro), core_scale)
            params[f"{p}.spectral.factor_modes"] = _orthonormal(rng, kf, rk)
            params[f"{p}.spectral.factor_in"] = _orthonormal(rng, c, ri)
            params[f"{p}.spectral.factor_out"] = _orthonormal(rng, c, ro)
        else:
            params[f"{p}.spectral.weight"] = _complex_gauss(rng, tuple(kmax) + (c, c), scale)
        params[f"{p}.spectral.bias"] = np.zeros(c, dtype=dtype)
        skip(f"{p}.fno_skip", cfg.fno_skip)
        mlp(f"{p}.mlp", mlp_shapes(c, c, cfg.mlp_width, cfg.channel_mlp_layers))
        skip(f"{p}.mlp_skip", cfg.channel_mlp_skip)
    mlp("projection", _proj_shapes(cfg))
    return params


def spectral_weight(params, prefix: str, cfg: FnoConfig):
    """Dense spectral weight of one layer, reconstructing a Tucker form if needed."""
    if cfg.factorization is Factorization.TUCKER:
        c = cfg.hidden_channels
        w = ad.einsum("abc,ka->kbc", params[f"{prefix}.core"], params[f"{prefix}.factor_modes"])
        w = ad.einsum("kbc,ib->kic", w, params[f"{prefix}.factor_in"])
        w = ad.einsum("kic,oc->kio", w, params[f"{prefix}.factor_out"])
        return ad.reshape(w, tuple(cfg.max_n_modes) + (c, c))
    return params[f"{prefix}.weight"]


def _mlp_layers(params, prefix: str, count: int):
    return [(params[f"{prefix}.{i}.weight"], params[f"{prefix}.{i}.bias"]) for i in range(count)]


def _skip_params(params, prefix: str):
    return {k[len(prefix) + 1:]: v for k, v in params.items() if k.startswith(prefix + ".")}


def layer_resolutions(cfg: FnoConfig, resolution: Sequence[int]) -> list[tuple[int, ...]]:
    """Resolution after each block for a given (padded) input resolution."""
    out = []
    cur = tuple(int(n) for n in resolution)
    for s in cfg.scaling():
        nxt = []
        for n in cur:
            v = n * s
            if abs(v - round(v)) > 1e-9 or round(v) < 1:
                raise ValueError(f"scaling {n} points by {s} does not give an integer resolution")
            nxt.append(int(round(v)))
        cur = tuple(nxt)
        out.append(cur)
    return out


def fno_block_forward(x, params, layer: int, cfg: FnoConfig, n_modes: Sequence[int] | None = None, out_resolution=None):
    """One block: spectral path with skip, then channel MLP with skip."""
    p = f"blocks.{layer}"
    modes = cfg.n_modes if n_modes is None else tuple(n_modes)
    act = complex_activation(activation_fn(cfg.activation))
    norm = instance_norm if cfg.norm is Norm.INSTANCE else (lambda t: t)
    spatial = tuple(ad.value_of(x).shape[2:])
    out_res = spatial if out_resolution is None else tuple(out_resolution)
    if cfg.separable:
        weights = [params[f"{p}.spectral.weight_axis{j}"] for j in range(cfg.ndim)]
        spec = separable_spectral_conv_forward(x, weights, modes, out_res, params[f"{p}.spectral.bias"], cfg.complex_data)
    else:
        w = spectral_weight(params, f"{p}.spectral", cfg)
        spec = spectral_conv_forward(x, w, modes, out_res, params[f"{p}.spectral.bias"], cfg.complex_data)

    def skip(kind, prefix):
        s = skip_forward(x, kind, _skip_params(params, prefix))
        return None if s is None else resample_field(s, out_res)

    h = norm(spec)
    s1 = skip(cfg.fno_skip, f"{p}.fno_skip")
    if s1 is not None:
        h = ad.add(h, s1)
    h = act(h)
    mlp = channel_mlp_forward(h, _mlp_layers(params, f"{p}.mlp", cfg.channel_mlp_layers), cfg.activation)
    s2 = skip(cfg.channel_mlp_skip, f"{p}.mlp_skip")
    if s2 is not None:
        mlp = ad.add(mlp, s2)
    out = norm(mlp)
    if layer < cfg.n_layers - 1:
        out = act(out)
    return out


def fno_forward(x, cfg: FnoConfig, params, n_modes: Sequence[int] | None = None):
    """Lifting, optional padding, the blocks, unpadding and projection.

    ``x`` is ``(batch, C_in, *N)`` or ``(C_in, *N)``. ``n_modes`` overrides
    the active mode count (used by incremental training).
    """
    xv = ad.value_of(x)
    squeeze = xv.ndim == cfg.ndim + 1
    if squeeze:
        x = ad.reshape(x, (1,) + xv.shape)
        xv = ad.value_of(x)
    if xv.ndim != cfg.ndim + 2:
        raise ValueError(f"expected {cfg.ndim} spatial axes, got input of shape {xv.shape}")
    if xv.shape[1] != cfg.in_channels:
        raise ValueError(f"expected {cfg.in_channels} input channels, got {xv.shape[1]}")
    modes = cfg.n_modes if n_modes is None else tuple(int(k) for k in n_modes)
    spatial = xv.shape[2:]
    validate_nyquist(modes, spatial).raise_if_hard()
    if cfg.complex_data and not np.iscomplexobj(xv):
        x = ad.mul(x, 1.0 + 0j)

    h = channel_mlp_forward(x, _mlp_layers(params, "lifting", len(_lift_shapes(cfg))), cfg.activation)
    h = domain_pad(h, cfg.domain_padding)
    padded = tuple(ad.value_of(h).shape[2:])
    resolutions = layer_resolutions(cfg, padded)
    final = layer_resolutions(cfg, spatial)[-1]
    for layer in range(cfg.n_layers):
        h = fno_block_forward(h, params, layer, cfg, modes, resolutions[layer])
    h = domain_unpad(h, final)
    y = channel_mlp_forward(h, _mlp_layers(params, "projection", len(_proj_shapes(cfg))), cfg.activation)
    if squeeze:
        y = ad.reshape(y, ad.value_of(y).shape[1:])
    return y


class FNO:
    """Configuration and parameters bundled for convenience."""

    def __init__(self, config: FnoConfig, params: dict[str, np.ndarray] | None = None, seed: int | np.random.Generator = 0):
        self.config = config
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        self.params = init_params(config, rng) if params is None else dict(params)
        self.n_modes = tuple(config.n_modes)

    def __call__(self, x, params=None, n_modes=None):
        return fno_forward(x, self.config, self.params if params is None else params, n_modes or self.n_modes)

    def parameter_count(self) -> int:
        return sum(v.size * (2 if np.iscomplexobj(v) else 1) for v in self.params.values())
