"""Benchmark dataset generation from random initial data and reference solvers."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..spectral_ops import validate_nyquist
from ..tensor_core import GridSpec
from .dataset import DatasetFile
from .downsample import DownsampleStrategy, downsample
from .grf import GrfSpec, sample_grf
from .pde import burgers_solve, heat_operator_exact, poisson_solve_exact

__all__ = ["PROBLEMS", "ProblemSpec", "generate_dataset", "solve_problem"]

PROBLEMS = ("heat", "heat2d", "poisson", "burgers")


@dataclass(frozen=True)
class ProblemSpec:
    problem: str = "heat"
    count: int = 200
    resolution: int = 64
    seed: int = 0
    nu: float = 0.05
    t: float = 1.0
    dt: float = 1e-3
    k_max: int = 16
    gamma: float = 2.0
    amplitude: float = 1.0
    domain_length: float = 2 * np.pi
    start_index: int = 0
    downsample: str | None = None
    downsample_factor: int = 1

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ValueError(f"unknown problem {self.problem!r}; choose from {', '.join(PROBLEMS)}")
        if self.count < 0:
            raise ValueError("count must be non-negative")

    @property
    def ndim(self) -> int:
        return 2 if self.problem == "heat2d" else 1

    @property
    def source_resolution(self) -> int:
        return self.resolution * (self.downsample_factor if self.downsample else 1)


def solve_problem(spec: ProblemSpec, field: np.ndarray, grid: GridSpec) -> np.ndarray:
    if spec.problem in ("heat", "heat2d"):
        return heat_operator_exact(field, spec.nu, spec.t, grid)
    if spec.problem == "poisson":
        return poisson_solve_exact(field, grid)
    steps = int(round(spec.t / spec.dt))
    return burgers_solve(field, spec.nu, spec.dt, steps, grid)


def generate_dataset(spec: ProblemSpec) -> DatasetFile:
    """Sample ``count`` input fields (one seed stream per index) and solve each.

    With ``downsample`` set, fields are generated and solved on the finer
    source grid and both sides are then coarsened by the chosen strategy;
    ``nyquist_clean`` in the metadata records whether the generating band
    still fits the stored grid.
    """
    n_src = spec.source_resolution
    res = (n_src,) * spec.ndim
    source_grid = GridSpec(res, (spec.domain_length,) * spec.ndim)
    grf = GrfSpec(res, spec.domain_length, spec.gamma, spec.k_max, spec.seed, spec.amplitude)
    inputs, outputs = [], []
    for i in range(spec.count):
        a = sample_grf(grf, spec.start_index + i)
        u = solve_problem(spec, a, source_grid)
        inputs.append(a)
        outputs.append(u)
    shape = (spec.count, 1) + res
    x = np.array(inputs).reshape(shape)
    y = np.array(outputs).reshape(shape)
    if spec.downsample:
        strategy = DownsampleStrategy(spec.downsample)
        x = downsample(x, strategy, (spec.downsample_factor,) * spec.ndim)
        y = downsample(y, strategy, (spec.downsample_factor,) * spec.ndim)
    grid = GridSpec((spec.resolution,) * spec.ndim, (spec.domain_length,) * spec.ndim)
    # the generating band is checked on the grid it was sampled on
    validate_nyquist(2 * spec.k_max + 1, source_grid).raise_if_hard()
    meta = {key: value for key, value in asdict(spec).items()}
    meta["nyquist_clean"] = bool(2 * spec.k_max < spec.resolution)
    return DatasetFile(x, y, grid, metadata=meta)
