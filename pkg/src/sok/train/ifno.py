"""Incremental mode growth for FNO training."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .. import autodiff as ad
from ..fno.config import FnoConfig
from ..fno.layers import centered_slices
from ..fno.model import spectral_weight

__all__ = [
    "IfnoCriterion",
    "IfnoSchedule",
    "IfnoDecision",
    "activation_order",
    "explained_ratio",
    "mode_energies",
    "model_mode_energies",
    "ifno_should_expand",
]


class IfnoCriterion(enum.Enum):
    LOSS_STAGNATION = "loss-stagnation"
    EXPLAINED_RATIO = "explained-ratio"


def activation_order(n: int) -> np.ndarray:
    """Positions in a centered block of length n, in the order modes are switched on: 0, -1, +1, -2, ..."""
    center = n // 2
    order = [center]
    for step in range(1, n):
        for offset in (-step, step):
            pos = center + offset
            if 0 <= pos < n and len(order) < n:
                order.append(pos)
    return np.array(order[:n])


def explained_ratio(energies, k: int) -> float:
    """Share of total energy held by the first ``k`` entries."""
    p = np.asarray(energies, dtype=float)
    total = p.sum()
    if total <= 0:
        return 1.0
    return float(p[:k].sum() / total)


def mode_energies(weight: np.ndarray, axis: int) -> np.ndarray:
    """Energy per mode along spatial ``axis`` of a ``(*K, ...)`` weight, in activation order."""
    w = np.asarray(weight)
    others = tuple(a for a in range(w.ndim) if a != axis)
    per_mode = np.sum(np.abs(w) ** 2, axis=others)
    return per_mode[activation_order(w.shape[axis])]


def model_mode_energies(params: dict, cfg: FnoConfig, active=None) -> list[np.ndarray]:
    """Per-axis mode energies summed over layers, in activation order.

    With ``active`` given, only the active central block enters and each
    axis reports ``active[j]`` energies.
    """
    kmax = tuple(cfg.max_n_modes)
    active = kmax if active is None else tuple(int(k) for k in active)
    block = tuple(centered_slices(n, k) for n, k in zip(kmax, active))
    totals = [np.zeros(k) for k in kmax]
    for layer in range(cfg.n_layers):
        prefix = f"blocks.{layer}.spectral"
        for j in range(cfg.ndim):
            if cfg.separable:
                w = params[f"{prefix}.weight_axis{j}"]
                totals[j] += mode_energies(w, 0)
            else:
                w = ad.value_of(spectral_weight(params, prefix, cfg))
                sliced = w[block + (Ellipsis,)]
                padded = np.zeros(kmax[j])
                padded[: active[j]] = mode_energies(sliced, j)
                totals[j] += padded
    return [t[:k] for t, k in zip(totals, active)]


@dataclass
class IfnoSchedule:
    """Mode-growth policy and current state.

    ``resolution_ladder`` lists training resolutions; at each stage the
    smallest one that holds the active modes (K <= N/2) is used.
    """

    criterion: IfnoCriterion = IfnoCriterion.EXPLAINED_RATIO
    current: tuple[int, ...] = (2,)
    max_modes: tuple[int, ...] = (16,)
    alpha_ratio: float = 0.99
    window: int = 10
    eps_improve: float = 1e-3
    increment: int = 1
    check_every: int = 1
    resolution_ladder: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        self.criterion = IfnoCriterion(self.criterion)
        self.current = tuple(int(k) for k in np.atleast_1d(self.current))
        self.max_modes = tuple(int(k) for k in np.atleast_1d(self.max_modes))
        if len(self.max_modes) == 1 and len(self.current) > 1:
            self.max_modes = self.max_modes * len(self.current)
        if len(self.current) != len(self.max_modes):
            raise ValueError("current and max_modes need one entry per axis")
        if any(k < 1 or k > m for k, m in zip(self.current, self.max_modes)):
            raise ValueError(f"starting modes {self.current} must lie in [1, {self.max_modes}]")
        if not 0 < self.alpha_ratio <= 1:
            raise ValueError("alpha_ratio must be in (0, 1]")

    def resolution_for(self, full: int) -> int:
        need = 2 * max(self.current)
        for n in sorted(self.resolution_ladder):
            if n >= need and n <= full:
                return n
        return full


@dataclass
class IfnoDecision:
    expand: bool
    new_modes: tuple[int, ...]
    ratios: tuple[float, ...] = ()
    reason: str = ""


def ifno_should_expand(schedule: IfnoSchedule, energies=None, loss_history=None) -> IfnoDecision:
    """Decide whether to grow K.

    Explained ratio: per axis, with energies P in activation order, let K*
    be the smallest count with g(K*) >= alpha. If P covers more than the
    active K modes and K* > K, grow to K* (capped). If P covers exactly the
    active modes and K* == K, every active mode is needed, so grow by
    ``increment``. Stagnation: if the best loss in the last ``window``
    entries improved on the entry before them by less than ``eps_improve``
    (relative), every axis grows by ``increment``.
    """
    current = schedule.current
    caps = schedule.max_modes
    if all(k >= m for k, m in zip(current, caps)):
        return IfnoDecision(False, current, reason="at max_n_modes")
    if schedule.criterion is IfnoCriterion.EXPLAINED_RATIO:
        if energies is None:
            raise ValueError("explained-ratio criterion needs per-axis mode energies")
        energies = [np.asarray(energies)] if np.ndim(energies[0]) == 0 else list(energies)
        new, ratios = [], []
        for k, cap, p in zip(current, caps, energies):
            p = np.asarray(p, dtype=float)
            ratios.append(explained_ratio(p, k))
            needed = 1
            while needed < len(p) and explained_ratio(p, needed) < schedule.alpha_ratio:
                needed += 1
            if len(p) > k:
                target = max(k, needed)
            else:
                target = k + schedule.increment if needed >= k else k
            new.append(min(target, cap))
        new = tuple(new)
        grow = new != current
        return IfnoDecision(grow, new, tuple(ratios), "explained ratio below threshold" if grow else "")
    if loss_history is None:
        raise ValueError("stagnation criterion needs a loss history")
    h = np.asarray(loss_history, dtype=float)
    if len(h) <= schedule.window:
        return IfnoDecision(False, current, reason="history shorter than window")
    before = h[-schedule.window - 1]
    best = h[-schedule.window:].min()
    improvement = (before - best) / max(abs(before), 1e-300)
    if improvement >= schedule.eps_improve:
        return IfnoDecision(False, current, reason="loss still improving")
    new = tuple(min(k + schedule.increment, m) for k, m in zip(current, caps))
    return IfnoDecision(new != current, new, reason="loss stagnated")
