"""CSV and array file helpers shared by the subcommands."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..data.dataset import read_dataset


def _cell(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (np.integer,)):
        return int(value)
    return value


def write_csv(path, header: list[str], rows, invocation: str) -> None:
    """Header row, data rows, then ``# invocation: ...``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
        fh.write(f"# invocation: {invocation}\n")


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    """Header and rows, skipping comment lines."""
    with open(path, newline="") as fh:
        lines = [line for line in fh if line.strip() and not line.startswith("#")]
    if not lines:
        raise ValueError(f"{path} has no header row")
    reader = csv.reader(lines)
    header = next(reader)
    return header, [row for row in reader]


def load_field(path, index: int = 0) -> np.ndarray:
    """A single field from ``.npy``, ``.fnod`` (input ``index``) or whitespace text."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".fnod":
        ds = read_dataset(path)
        if not 0 <= index < ds.count:
            raise ValueError(f"index {index} outside dataset of {ds.count} samples")
        return ds.inputs[index]
    if suffix == ".npy":
        return np.load(path)
    return np.loadtxt(path)
