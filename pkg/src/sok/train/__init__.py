"""Losses, optimizers, loss balancing, incremental modes, physics residuals and loops."""

from .balancers import BalanceMethod, BalancerState, relobralo_balance, relobralo_weights, softadapt_weights
from .derivatives import laplacian_ad, spectral_derivative_ad
from .ifno import (
    IfnoCriterion,
    IfnoDecision,
    IfnoSchedule,
    activation_order,
    explained_ratio,
    ifno_should_expand,
    mode_energies,
    model_mode_energies,
)
from .loop import FinetuneResult, TrainConfig, TrainResult, evaluate, finetune_anchor, loss_terms, predict, rollout, train
from .losses import LossKind, LossSpec, h1_loss, lp_loss, relative_h1, relative_l2, spectral_loss
from .optim import Optimizer, OptimizerConfig, adam_step, learning_rate, sgd_step
from .physics import extension_matrix, fd_poisson_residual, physics_residual_poisson

__all__ = [
    "BalanceMethod",
    "BalancerState",
    "FinetuneResult",
    "IfnoCriterion",
    "IfnoDecision",
    "IfnoSchedule",
    "LossKind",
    "LossSpec",
    "Optimizer",
    "OptimizerConfig",
    "TrainConfig",
    "TrainResult",
    "activation_order",
    "adam_step",
    "evaluate",
    "explained_ratio",
    "extension_matrix",
    "fd_poisson_residual",
    "finetune_anchor",
    "h1_loss",
    "ifno_should_expand",
    "laplacian_ad",
    "learning_rate",
    "loss_terms",
    "lp_loss",
    "mode_energies",
    "model_mode_energies",
    "physics_residual_poisson",
    "predict",
    "relative_h1",
    "relative_l2",
    "relobralo_balance",
    "relobralo_weights",
    "rollout",
    "sgd_step",
    "softadapt_weights",
    "spectral_derivative_ad",
    "spectral_loss",
    "train",
]
