"""First-order optimizers and learning-rate schedules.

Complex parameters are updated on their (real, imaginary) float view, so
Adam's second moment is tracked per real component.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["OptimizerConfig", "Optimizer", "sgd_step", "adam_step", "learning_rate", "SCHEDULES"]

SCHEDULES = ("constant", "step", "cosine")


def _real(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    return a.view(np.float64) if np.iscomplexobj(a) else a.astype(np.float64, copy=False)


def _restore(flat: np.ndarray, like: np.ndarray) -> np.ndarray:
    return flat.view(np.complex128) if np.iscomplexobj(like) else flat


def sgd_step(params: dict, grads: dict, state: dict, lr: float, momentum: float = 0.0) -> dict:
    """Plain or heavy-ball gradient descent; ``state`` keeps the velocities."""
    out = {}
    for name, value in params.items():
        g = _real(grads[name])
        if momentum:
            vel = momentum * state.get(name, np.zeros_like(g)) + g
            state[name] = vel
            g = vel
        out[name] = _restore(_real(value) - lr * g, value)
    return out


def adam_step(
    params: dict,
    grads: dict,
    state: dict,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> dict:
    """One bias-corrected Adam update; ``state`` holds the step count and moments."""
    t = state.get("__step__", 0) + 1
    state["__step__"] = t
    out = {}
    for name, value in params.items():
        g = _real(grads[name])
        m, v = state.get(name, (np.zeros_like(g), np.zeros_like(g)))
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        state[name] = (m, v)
        m_hat = m / (1 - beta1**t)
        v_hat = v / (1 - beta2**t)
        out[name] = _restore(_real(value) - lr * m_hat / (np.sqrt(v_hat) + eps), value)
    return out


@dataclass(frozen=True)
class OptimizerConfig:
    name: str = "adam"
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    momentum: float = 0.0
    schedule: str = "constant"
    step_size: int = 100
    gamma: float = 0.5
    total_epochs: int = 100
    min_lr: float = 0.0

    def __post_init__(self):
        if self.name not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.name!r}")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"unknown schedule {self.schedule!r}; choose from {', '.join(SCHEDULES)}")
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")


def learning_rate(cfg: OptimizerConfig, epoch: int) -> float:
    if cfg.schedule == "constant":
        return cfg.lr
    if cfg.schedule == "step":
        return cfg.lr * cfg.gamma ** (epoch // max(cfg.step_size, 1))
    frac = min(epoch / max(cfg.total_epochs, 1), 1.0)
    return cfg.min_lr + 0.5 * (cfg.lr - cfg.min_lr) * (1 + math.cos(math.pi * frac))


class Optimizer:
    def __init__(self, config: OptimizerConfig):
        self.config = config
        self.state: dict = {}

    def step(self, params: dict, grads: dict, lr: float | None = None) -> dict:
        cfg = self.config
        lr = cfg.lr if lr is None else lr
        if cfg.name == "sgd":
            return sgd_step(params, grads, self.state, lr, cfg.momentum)
        return adam_step(params, grads, self.state, lr, cfg.beta1, cfg.beta2, cfg.eps)
