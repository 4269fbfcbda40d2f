"""Benchmark data: random fields, reference solvers, coarsening and storage."""

from .dataset import DatasetFile, Normalizer, read_dataset, split_dataset, write_dataset
from .downsample import DownsampleStrategy, downsample, matching_cutoff, spectral_downsample
from .generate import PROBLEMS, ProblemSpec, generate_dataset, solve_problem
from .grf import GrfSpec, grf_coefficients, sample_grf, sample_grf_batch
from .pde import (
    SolvabilityError,
    burgers_solve,
    burgers_step,
    dealias_mask,
    heat_operator_exact,
    poisson_solve_exact,
    wavenumber_squared,
)

__all__ = [
    "PROBLEMS",
    "DatasetFile",
    "DownsampleStrategy",
    "GrfSpec",
    "Normalizer",
    "ProblemSpec",
    "SolvabilityError",
    "burgers_solve",
    "burgers_step",
    "dealias_mask",
    "downsample",
    "generate_dataset",
    "grf_coefficients",
    "heat_operator_exact",
    "matching_cutoff",
    "poisson_solve_exact",
    "read_dataset",
    "sample_grf",
    "sample_grf_batch",
    "solve_problem",
    "spectral_downsample",
    "split_dataset",
    "write_dataset",
    "wavenumber_squared",
]
