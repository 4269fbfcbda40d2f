"""Closed-form parameter accounting."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import Factorization, FnoConfig, SkipKind
from .model import tucker_weight_ranks

__all__ = [
    "ParamCounts",
    "mlp_param_count",
    "spectral_param_count",
    "tucker_param_count",
    "skip_param_count",
    "count_params",
    "brute_count",
]


def mlp_param_count(c_in: int, c_out: int, c_hidden: int, n_layers: int) -> int:
    """Weights plus biases of an MLP with ``n_layers`` affine maps."""
    if n_layers < 1:
        raise ValueError("an MLP has at least one layer")
    if n_layers == 1:
        return c_out * (c_in + 1)
    if n_layers == 2:
        return c_hidden * (c_in + 1) + c_out * (c_hidden + 1)
    return c_hidden * (c_in + 1) + (n_layers - 2) * c_hidden * (c_hidden + 1) + c_out * (c_hidden + 1)


def spectral_param_count(channels: int, n_modes, eta: int = 2, bias_reals: int | None = None) -> int:
    """eta * C^2 * prod(K) plus the bias (C reals unless given)."""
    bias = channels if bias_reals is None else bias_reals
    return eta * channels * channels * int(np.prod(n_modes)) + bias


def tucker_param_count(channels: int, n_modes, ranks) -> int:
    """Real scalars of a complex Tucker form of a (prod K) x C x C tensor, without bias."""
    rk, ri, ro = ranks
    kf = int(np.prod(n_modes))
    return 2 * (rk * ri * ro + kf * rk + channels * ri + channels * ro)


def skip_param_count(kind: SkipKind, channels: int) -> int:
    kind = SkipKind(kind)
    if kind is SkipKind.LINEAR:
        return channels * channels
    if kind is SkipKind.SOFT_GATING:
        return 2 * channels
    return 0


@dataclass
class ParamCounts:
    """Real scalar counts; ``spectral_effective`` counts one real per weight entry on real data."""

    components: dict[str, int] = field(default_factory=dict)
    spectral_effective: int = 0

    @property
    def total(self) -> int:
        return sum(self.components.values())

    @property
    def spectral(self) -> int:
        return sum(v for k, v in self.components.items() if k.endswith(".spectral"))


def count_params(cfg: FnoConfig) -> ParamCounts:
    cplx = 2 if cfg.complex_data else 1
    c = cfg.hidden_channels
    counts = ParamCounts()
    lw = cfg.lifting_width
    counts.components["lifting"] = cplx * mlp_param_count(cfg.in_channels, c, lw, 2 if lw else 1)
    bias = cplx * c
    kmax = cfg.max_n_modes
    effective = 0
    eta = 2 if cfg.complex_data else 1
    for layer in range(cfg.n_layers):
        p = f"blocks.{layer}"
        if cfg.separable:
            entries = c * int(sum(kmax))
        elif cfg.factorization is Factorization.TUCKER:
            entries = tucker_param_count(c, kmax, tucker_weight_ranks(cfg)) // 2
        else:
            entries = c * c * int(np.prod(kmax))
        spec = 2 * entries + bias
        effective += eta * entries + bias
        counts.components[f"{p}.spectral"] = spec
        counts.components[f"{p}.fno_skip"] = cplx * skip_param_count(cfg.fno_skip, c)
        counts.components[f"{p}.mlp"] = cplx * mlp_param_count(c, c, cfg.mlp_width, cfg.channel_mlp_layers)
        counts.components[f"{p}.mlp_skip"] = cplx * skip_param_count(cfg.channel_mlp_skip, c)
    pw = cfg.projection_width
    counts.components["projection"] = cplx * mlp_param_count(c, cfg.out_channels, pw, 2 if pw else 1)
    counts.spectral_effective = effective
    return counts


def brute_count(params: dict[str, np.ndarray]) -> int:
    """Real scalars actually stored; complex entries count twice."""
    return int(sum(v.size * (2 if np.iscomplexobj(v) else 1) for v in params.values()))
