"""Tucker factorization by higher-order orthogonal iteration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "TuckerResult",
    "mode_product",
    "unfold",
    "tucker_decompose",
    "tucker_reconstruct",
    "per_mode_ranks",
    "budget_ranks",
    "tucker_size",
]


def unfold(tensor: np.ndarray, mode: int) -> np.ndarray:
    return np.moveaxis(tensor, mode, 0).reshape(tensor.shape[mode], -1)


def mode_product(tensor: np.ndarray, matrix: np.ndarray, mode: int) -> np.ndarray:
    """Multiply ``tensor`` along ``mode`` by ``matrix`` (new_dim x old_dim)."""
    return np.moveaxis(np.tensordot(matrix, tensor, axes=(1, mode)), 0, mode)


def tucker_reconstruct(core: np.ndarray, factors: Sequence[np.ndarray]) -> np.ndarray:
    out = core
    for mode, u in enumerate(factors):
        out = mode_product(out, u, mode)
    return out


def per_mode_ranks(shape: Sequence[int], rank: float) -> tuple[int, ...]:
    """ceil(rank * dim) for every mode."""
    if not 0 < rank <= 1:
        raise ValueError("rank fraction must lie in (0, 1]")
    return tuple(min(d, max(1, math.ceil(rank * d - 1e-12))) for d in shape)


def tucker_size(shape: Sequence[int], ranks: Sequence[int]) -> int:
    """Entries stored by a Tucker form: core plus one factor per mode."""
    return int(np.prod(ranks)) + int(sum(d * r for d, r in zip(shape, ranks)))


def budget_ranks(shape: Sequence[int], rank: float) -> tuple[int, ...]:
    """Ranks whose Tucker form stores about ``rank`` times the dense entry count.

    All modes share one fraction ``f`` of their dimension; ``f`` is found by
    bisection on the stored-entry count and each rank is rounded.
    """
    if not 0 < rank <= 1:
        raise ValueError("rank fraction must lie in (0, 1]")
    dense = float(np.prod(shape))
    target = rank * dense

    def size(f):
        return np.prod([f * d for d in shape]) + sum(f * d * d for d in shape)

    if size(1.0) <= target:
        return tuple(int(d) for d in shape)
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if size(mid) > target:
            hi = mid
        else:
            lo = mid
    f = 0.5 * (lo + hi)
    return tuple(int(min(d, max(1, round(f * d)))) for d in shape)


@dataclass
class TuckerResult:
    core: np.ndarray
    factors: list[np.ndarray]
    errors: list[float] = field(default_factory=list)
    converged: bool = True
    diagnostic: str = ""

    @property
    def ranks(self) -> tuple[int, ...]:
        return self.core.shape

    def reconstruct(self) -> np.ndarray:
        return tucker_reconstruct(self.core, self.factors)


def _leading_left(matrix: np.ndarray, r: int) -> np.ndarray:
    u, _, _ = np.linalg.svd(matrix, full_matrices=False)
    return u[:, :r]


def tucker_decompose(
    tensor,
    rank: float | None = None,
    ranks: Sequence[int] | None = None,
    max_sweeps: int = 100,
    tol: float = 1e-12,
) -> TuckerResult:
    """Tucker decomposition initialized by truncated HOSVD and refined by HOOI.

    Either a fraction ``rank`` (ranks ceil(rank * dim)) or explicit
    ``ranks`` must be given. ``errors`` records the relative reconstruction
    error after initialization and after every sweep; when the sweep limit
    is reached before the change drops below ``tol`` the best iterate is
    returned with ``converged=False``.
    """
    x = np.asarray(tensor)
    if ranks is None:
        if rank is None:
            raise ValueError("give either rank or ranks")
        ranks = per_mode_ranks(x.shape, rank)
    ranks = tuple(int(r) for r in ranks)
    if len(ranks) != x.ndim or any(not 1 <= r <= d for r, d in zip(ranks, x.shape)):
        raise ValueError(f"ranks {ranks} incompatible with shape {x.shape}")
    norm = np.linalg.norm(x)
    scale = norm if norm > 0 else 1.0

    def core_of(factors):
        core = x
        for mode, u in enumerate(factors):
            core = mode_product(core, u.conj().T, mode)
        return core

    def error_of(core, factors):
        return float(np.linalg.norm(x - tucker_reconstruct(core, factors)) / scale)

    factors = [_leading_left(unfold(x, m), r) for m, r in enumerate(ranks)]
    core = core_of(factors)
    errors = [error_of(core, factors)]
    best = (errors[0], core, [f.copy() for f in factors])
    converged = False
    for _ in range(max_sweeps):
        for m in range(x.ndim):
            y = x
            for k, u in enumerate(factors):
                if k != m:
                    y = mode_product(y, u.conj().T, k)
            factors[m] = _leading_left(unfold(y, m), ranks[m])
        core = core_of(factors)
        errors.append(error_of(core, factors))
        if errors[-1] <= best[0]:
            best = (errors[-1], core, [f.copy() for f in factors])
        if abs(errors[-2] - errors[-1]) <= tol:
            converged = True
            break
    diagnostic = "" if converged else (
        f"no convergence after {max_sweeps} sweeps; last change {abs(errors[-2] - errors[-1]):.3e}"
    )
    return TuckerResult(best[1], best[2], errors, converged, diagnostic)
