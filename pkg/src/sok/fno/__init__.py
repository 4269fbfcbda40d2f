"""Fourier neural operator: layers, model, factorization, accounting and storage."""

from .checkpoint import load_checkpoint, save_checkpoint
from .config import Activation, Factorization, FnoConfig, Norm, SkipKind
from .counting import ParamCounts, brute_count, count_params, mlp_param_count
from .embeddings import EmbeddingMode, EmbeddingSpec, append_channels, sinusoidal_embed
from .layers import (
    channel_mlp_forward,
    complex_wrap,
    domain_pad,
    domain_unpad,
    instance_norm,
    resample_field,
    separable_spectral_conv_forward,
    skip_forward,
    spectral_conv_forward,
)
from .model import FNO, fno_block_forward, fno_forward, init_params, layer_resolutions
from .tucker import TuckerResult, budget_ranks, tucker_decompose, tucker_reconstruct

__all__ = [
    "FNO",
    "Activation",
    "EmbeddingMode",
    "EmbeddingSpec",
    "Factorization",
    "FnoConfig",
    "Norm",
    "ParamCounts",
    "SkipKind",
    "TuckerResult",
    "append_channels",
    "brute_count",
    "budget_ranks",
    "channel_mlp_forward",
    "complex_wrap",
    "count_params",
    "domain_pad",
    "domain_unpad",
    "fno_block_forward",
    "fno_forward",
    "init_params",
    "instance_norm",
    "layer_resolutions",
    "load_checkpoint",
    "mlp_param_count",
    "resample_field",
    "save_checkpoint",
    "separable_spectral_conv_forward",
    "sinusoidal_embed",
    "skip_forward",
    "spectral_conv_forward",
    "tucker_decompose",
    "tucker_reconstruct",
]
