"""Paired-field datasets, per-channel standardization and the binary file format.

Layout of a dataset file (little-endian)::

    b"FNOD" | u16 version | u8 flags (bit 0: float32 payload) | u32 count
    | u8 ndim + ndim x u32  input sample shape  (channels first)
    | u8 ndim + ndim x u32  output sample shape
    | u8 grid ndim | per axis: u32 points, f64 length, u8 periodic
    | u16 C_in  | C_in  x f64 mean | C_in  x f64 std
    | u16 C_out | C_out x f64 mean | C_out x f64 std
    | u32 n | n bytes metadata JSON
    | payload: all inputs, then all outputs

The JSON sidecar ``<path>.json`` repeats the header.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import FormatError, IntegrityError
from ..tensor_core import GridSpec

__all__ = ["MAGIC", "VERSION", "Normalizer", "DatasetFile", "write_dataset", "read_dataset", "split_dataset"]

MAGIC = b"FNOD"
VERSION = 1
FLAG_F32 = 1


@dataclass(frozen=True)
class Normalizer:
    """Per-channel affine standardization; channel axis is 1 for batches (B, C, *N)."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, fields: np.ndarray, eps: float = 0.0) -> "Normalizer":
        fields = np.asarray(fields, dtype=float)
        if fields.ndim < 2 or fields.shape[0] == 0:
            raise ValueError("need a non-empty batch shaped (B, C, ...)")
        axes = (0,) + tuple(range(2, fields.ndim))
        mean = fields.mean(axis=axes)
        std = fields.std(axis=axes)
        std = np.where(std > eps, std, 1.0)
        return cls(mean, std)

    @classmethod
    def identity(cls, channels: int) -> "Normalizer":
        return cls(np.zeros(channels), np.ones(channels))

    def _shape(self, x) -> tuple[np.ndarray, np.ndarray]:
        ndim = np.ndim(x) if not hasattr(x, "value") else x.value.ndim
        shape = (1, -1) + (1,) * (ndim - 2)
        return self.mean.reshape(shape), self.std.reshape(shape)

    def normalize(self, x):
        mean, std = self._shape(x)
        return (x - mean) * (1.0 / std)

    def denormalize(self, x):
        mean, std = self._shape(x)
        return x * std + mean


@dataclass
class DatasetFile:
    inputs: np.ndarray
    outputs: np.ndarray
    grid: GridSpec
    input_stats: Normalizer | None = None
    output_stats: Normalizer | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=float)
        self.outputs = np.asarray(self.outputs, dtype=float)
        if self.inputs.ndim < 2 or self.outputs.ndim < 2:
            raise ValueError("inputs and outputs must be shaped (count, channels, *grid)")
        if len(self.inputs) != len(self.outputs):
            raise ValueError("inputs and outputs have different sample counts")
        if self.input_stats is None:
            self.input_stats = Normalizer.identity(self.inputs.shape[1])
        if self.output_stats is None:
            self.output_stats = Normalizer.identity(self.outputs.shape[1])

    @property
    def count(self) -> int:
        return len(self.inputs)

    def fit_stats(self) -> "DatasetFile":
        """Compute standardization statistics from this (training) split."""
        self.input_stats = Normalizer.fit(self.inputs)
        self.output_stats = Normalizer.fit(self.outputs)
        return self

    def with_stats_from(self, other: "DatasetFile") -> "DatasetFile":
        self.input_stats = other.input_stats
        self.output_stats = other.output_stats
        return self

    def header(self) -> dict:
        return {
            "format": "FNOD",
            "version": VERSION,
            "count": self.count,
            "input_shape": list(self.inputs.shape[1:]),
            "output_shape": list(self.outputs.shape[1:]),
            "grid": {
                "resolution": list(self.grid.resolution),
                "domain_length": list(self.grid.domain_length),
                "periodic": list(self.grid.periodic),
            },
            "input_mean": self.input_stats.mean.tolist(),
            "input_std": self.input_stats.std.tolist(),
            "output_mean": self.output_stats.mean.tolist(),
            "output_std": self.output_stats.std.tolist(),
            "metadata": self.metadata,
        }


def split_dataset(ds: DatasetFile, n_first: int) -> tuple[DatasetFile, DatasetFile]:
    a = DatasetFile(ds.inputs[:n_first], ds.outputs[:n_first], ds.grid, metadata=dict(ds.metadata))
    b = DatasetFile(ds.inputs[n_first:], ds.outputs[n_first:], ds.grid, metadata=dict(ds.metadata))
    return a, b


def _shape_bytes(shape) -> bytes:
    return struct.pack("<B", len(shape)) + struct.pack(f"<{len(shape)}I", *shape)


def _stats_bytes(stats: Normalizer) -> bytes:
    c = len(stats.mean)
    return struct.pack("<H", c) + np.asarray(stats.mean, "<f8").tobytes() + np.asarray(stats.std, "<f8").tobytes()


def write_dataset(path, ds: DatasetFile, float32: bool = False) -> None:
    path = Path(path)
    dtype = "<f4" if float32 else "<f8"
    parts = [MAGIC, struct.pack("<HBI", VERSION, FLAG_F32 if float32 else 0, ds.count)]
    parts.append(_shape_bytes(ds.inputs.shape[1:]))
    parts.append(_shape_bytes(ds.outputs.shape[1:]))
    parts.append(struct.pack("<B", ds.grid.ndim))
    for n, length, periodic in zip(ds.grid.resolution, ds.grid.domain_length, ds.grid.periodic):
        parts.append(struct.pack("<IdB", n, length, int(periodic)))
    parts.append(_stats_bytes(ds.input_stats))
    parts.append(_stats_bytes(ds.output_stats))
    meta = json.dumps(ds.metadata, sort_keys=True).encode()
    parts.append(struct.pack("<I", len(meta)) + meta)
    parts.append(np.ascontiguousarray(ds.inputs, dtype=dtype).tobytes())
    parts.append(np.ascontiguousarray(ds.outputs, dtype=dtype).tobytes())
    path.write_bytes(b"".join(parts))
    header = ds.header()
    header["float32"] = bool(float32)
    Path(str(path) + ".json").write_text(json.dumps(header, indent=2))


class _Cursor:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise IntegrityError("dataset header is truncated")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def shape(self) -> tuple[int, ...]:
        (ndim,) = self.unpack("<B")
        return tuple(self.unpack(f"<{ndim}I"))

    def stats(self) -> Normalizer:
        (c,) = self.unpack("<H")
        mean = np.frombuffer(self.take(8 * c), "<f8").astype(float)
        std = np.frombuffer(self.take(8 * c), "<f8").astype(float)
        return Normalizer(mean, std)


def read_dataset(path) -> DatasetFile:
    data = Path(path).read_bytes()
    cur = _Cursor(data)
    if len(data) < 4 or cur.take(4) != MAGIC:
        raise FormatError(f"{path} is not a dataset file (bad magic)")
    version, flags, count = cur.unpack("<HBI")
    if version != VERSION:
        raise FormatError(f"unsupported dataset version {version}")
    if flags & ~FLAG_F32:
        raise FormatError(f"unknown dataset flags {flags:#x}")
    in_shape = cur.shape()
    out_shape = cur.shape()
    (gdim,) = cur.unpack("<B")
    res, lengths, periodic = [], [], []
    for _ in range(gdim):
        n, length, p = cur.unpack("<IdB")
        res.append(n)
        lengths.append(length)
        periodic.append(bool(p))
    in_stats = cur.stats()
    out_stats = cur.stats()
    try:
        meta = json.loads(cur.take(cur.unpack("<I")[0]))
    except ValueError as exc:
        raise FormatError(f"corrupt dataset metadata: {exc}") from exc
    if len(in_shape) < 1 or len(out_shape) < 1 or gdim < 1:
        raise FormatError("dataset header declares empty shapes")
    if in_shape[0] != len(in_stats.mean) or out_shape[0] != len(out_stats.mean):
        raise IntegrityError("normalization statistics do not match channel counts")
    dtype = np.dtype("<f4" if flags & FLAG_F32 else "<f8")
    n_in = count * int(np.prod(in_shape))
    n_out = count * int(np.prod(out_shape))
    expected = (n_in + n_out) * dtype.itemsize
    remaining = len(data) - cur.pos
    if remaining != expected:
        raise IntegrityError(f"payload holds {remaining} bytes, header implies {expected}")
    payload = np.frombuffer(data, dtype=dtype, offset=cur.pos)
    inputs = payload[:n_in].astype(float).reshape((count,) + in_shape)
    outputs = payload[n_in:].astype(float).reshape((count,) + out_shape)
    try:
        grid = GridSpec(tuple(res), tuple(lengths), tuple(periodic))
    except ValueError as exc:
        raise FormatError(f"invalid grid in header: {exc}") from exc
    return DatasetFile(inputs, outputs, grid, in_stats, out_stats, meta)
