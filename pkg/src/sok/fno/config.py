"""Architecture hyperparameters."""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass
from typing import Any

import numpy as np


class SkipKind(enum.Enum):
    IDENTITY = "identity"
    LINEAR = "linear"
    SOFT_GATING = "soft-gating"
    NONE = "none"


class Activation(enum.Enum):
    GELU = "gelu"
    RELU = "relu"
    TANH = "tanh"
    IDENTITY = "identity"


class Factorization(enum.Enum):
    DENSE = "dense"
    TUCKER = "tucker"


class Norm(enum.Enum):
    NONE = "none"
    INSTANCE = "instance"


def _tuple_int(v) -> tuple[int, ...]:
    return tuple(int(x) for x in np.atleast_1d(v))


def _tuple_float(v) -> tuple[float, ...]:
    return tuple(float(x) for x in np.atleast_1d(v))


@dataclass(frozen=True)
class FnoConfig:
    """Hyperparameters of a Fourier neural operator.

    ``n_modes`` counts retained modes per axis (the centered block covers
    integer modes -K//2 .. (K+1)//2 - 1). Spectral weights are allocated at
    ``max_n_modes`` so that the active block can grow during training.
    Field order is the canonical serialization order.
    """

    n_modes: tuple[int, ...]
    hidden_channels: int = 16
    in_channels: int = 1
    out_channels: int = 1
    n_layers: int = 4
    max_n_modes: tuple[int, ...] | None = None
    lifting_channel_ratio: float = 2.0
    projection_channel_ratio: float = 2.0
    channel_mlp_expansion: float = 0.5
    channel_mlp_layers: int = 2
    fno_skip: SkipKind = SkipKind.LINEAR
    channel_mlp_skip: SkipKind = SkipKind.SOFT_GATING
    activation: Activation = Activation.GELU
    domain_padding: tuple[float, ...] = (0.0,)
    resolution_scaling_factor: tuple[float, ...] | None = None
    factorization: Factorization = Factorization.DENSE
    rank: float = 1.0
    separable: bool = False
    complex_data: bool = False
    norm: Norm = Norm.NONE
    dropout: float = 0.0

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        modes = _tuple_int(self.n_modes)
        set_("n_modes", modes)
        top = modes if self.max_n_modes is None else _tuple_int(self.max_n_modes)
        if len(top) == 1 and len(modes) > 1:
            top = top * len(modes)
        set_("max_n_modes", top)
        pad = _tuple_float(self.domain_padding)
        if len(pad) == 1 and len(modes) > 1:
            pad = pad * len(modes)
        set_("domain_padding", pad)
        if self.resolution_scaling_factor is not None:
            set_("resolution_scaling_factor", _tuple_float(self.resolution_scaling_factor))
        for name, kind in (
            ("fno_skip", SkipKind),
            ("channel_mlp_skip", SkipKind),
            ("activation", Activation),
            ("factorization", Factorization),
            ("norm", Norm),
        ):
            set_(name, kind(getattr(self, name)))
        for name in ("hidden_channels", "in_channels", "out_channels", "n_layers", "channel_mlp_layers"):
            set_(name, int(getattr(self, name)))
        for name in ("lifting_channel_ratio", "projection_channel_ratio", "channel_mlp_expansion", "rank", "dropout"):
            set_(name, float(getattr(self, name)))
        set_("separable", bool(self.separable))
        set_("complex_data", bool(self.complex_data))
        self._validate()

    def _validate(self):
        if any(k < 1 for k in self.n_modes):
            raise ValueError("n_modes must be positive")
        if len(self.max_n_modes) != self.ndim or any(k < m for k, m in zip(self.max_n_modes, self.n_modes)):
            raise ValueError("max_n_modes must match n_modes in length and be at least n_modes")
        if self.n_layers < 1 or self.hidden_channels < 1 or self.in_channels < 1 or self.out_channels < 1:
            raise ValueError("layers and channel counts must be positive")
        if self.channel_mlp_layers < 1:
            raise ValueError("channel MLP needs at least one layer")
        if len(self.domain_padding) != self.ndim or any(not 0 <= p < 1 for p in self.domain_padding):
            raise ValueError("domain_padding needs one fraction in [0, 1) per axis")
        sc = self.resolution_scaling_factor
        if sc is not None and (len(sc) != self.n_layers or any(s <= 0 for s in sc)):
            raise ValueError("resolution_scaling_factor needs one positive entry per layer")
        if not 0 < self.rank <= 1:
            raise ValueError("rank must lie in (0, 1]")
        if self.dropout != 0.0:
            raise ValueError("dropout is not supported; it must be 0")
        if self.separable and self.factorization is not Factorization.DENSE:
            raise ValueError("separable spectral weights cannot also be factorized")
        if self.lifting_channel_ratio < 0 or self.projection_channel_ratio < 0 or self.channel_mlp_expansion <= 0:
            raise ValueError("channel ratios must be non-negative and the expansion positive")

    @property
    def ndim(self) -> int:
        return len(self.n_modes)

    @property
    def lifting_width(self) -> int:
        return max(1, round(self.lifting_channel_ratio * self.hidden_channels)) if self.lifting_channel_ratio > 0 else 0

    @property
    def projection_width(self) -> int:
        return max(1, round(self.projection_channel_ratio * self.hidden_channels)) if self.projection_channel_ratio > 0 else 0

    @property
    def mlp_width(self) -> int:
        return max(1, round(self.channel_mlp_expansion * self.hidden_channels))

    def scaling(self) -> tuple[float, ...]:
        return self.resolution_scaling_factor or (1.0,) * self.n_layers

    def replace(self, **changes) -> "FnoConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, enum.Enum):
                v = v.value
            elif isinstance(v, tuple):
                v = list(v)
            out[f.name] = v
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "FnoConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        return cls(**data)
