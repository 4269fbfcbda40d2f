"""Adaptive weights for multi-term losses."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

__all__ = ["BalanceMethod", "BalancerState", "softmax", "softadapt_weights", "relobralo_balance", "relobralo_weights"]


class BalanceMethod(enum.Enum):
    FIXED = "fixed"
    SOFTADAPT = "softadapt"
    RELOBRALO = "relobralo"


def softmax(z: np.ndarray) -> np.ndarray:
    """Softmax floored at the smallest normal double so no weight underflows to zero."""
    z = np.asarray(z, dtype=float)
    e = np.exp(z - np.max(z))
    return np.maximum(e / e.sum(), np.finfo(float).tiny)


def _history(history) -> np.ndarray:
    h = np.asarray(history, dtype=float)
    if h.ndim != 2 or h.shape[1] == 0:
        raise ValueError("loss history must be shaped (steps, terms)")
    if not np.all(np.isfinite(h)):
        raise ValueError("loss history contains non-finite values")
    return h


def softadapt_weights(history, tau: float = 1.0) -> np.ndarray:
    """softmax(tau * (L(t) - L(t-1))); uniform until two steps are recorded."""
    h = _history(history)
    if len(h) < 2:
        return np.full(h.shape[1], 1.0 / h.shape[1])
    return softmax(tau * (h[-1] - h[-2]))


def relobralo_balance(current, reference, tau: float = 1.0, eps: float = 1e-12) -> np.ndarray:
    """m * softmax(L(t) / (tau * L(t'))), which sums to m."""
    if tau <= 0:
        raise ValueError("temperature must be positive")
    current = np.asarray(current, dtype=float)
    ratio = current / (tau * np.asarray(reference, dtype=float) + eps)
    return len(current) * softmax(ratio)


def relobralo_weights(history, alpha: float = 0.999, tau: float = 1.0, rho: float = 1.0, previous=None) -> np.ndarray:
    """alpha * lambda_hist + (1 - alpha) * balance(t, t-1).

    lambda_hist = rho * previous + (1 - rho) * balance(t, 0), where ``rho``
    is the Bernoulli draw (0 or 1) and ``previous`` the last weights
    (ones when absent).
    """
    h = _history(history)
    m = h.shape[1]
    if len(h) < 2:
        return np.ones(m)
    prev = np.ones(m) if previous is None else np.asarray(previous, dtype=float)
    hist = rho * prev + (1 - rho) * relobralo_balance(h[-1], h[0], tau)
    return alpha * hist + (1 - alpha) * relobralo_balance(h[-1], h[-2], tau)


@dataclass
class BalancerState:
    method: BalanceMethod = BalanceMethod.FIXED
    n_terms: int = 1
    tau: float = 1.0
    alpha: float = 0.999
    rho_prob: float = 0.999
    history: list = field(default_factory=list)
    weights: np.ndarray | None = None

    def __post_init__(self):
        self.method = BalanceMethod(self.method)
        if self.weights is None:
            if self.method is BalanceMethod.SOFTADAPT:
                self.weights = np.full(self.n_terms, 1.0 / self.n_terms)
            else:
                self.weights = np.ones(self.n_terms)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (self.n_terms,) or np.any(self.weights <= 0):
            raise ValueError("need one positive weight per loss term")

    def update(self, losses, rng: np.random.Generator) -> np.ndarray:
        """Record one value per term and return the weights for the next step."""
        losses = np.asarray(losses, dtype=float)
        if losses.shape != (self.n_terms,):
            raise ValueError(f"expected {self.n_terms} loss values")
        self.history.append(losses)
        if self.method is BalanceMethod.SOFTADAPT:
            self.weights = softadapt_weights(self.history, self.tau)
        elif self.method is BalanceMethod.RELOBRALO:
            rho = float(rng.random() < self.rho_prob)
            self.weights = relobralo_weights(self.history, self.alpha, self.tau, rho, self.weights)
        return self.weights
