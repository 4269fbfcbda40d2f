"""Binary model checkpoints.

Layout (all integers little-endian)::

    b"FNOM" | u16 version | u32 n | n bytes config JSON (canonical field order)
    | u32 n | n bytes extras JSON | u32 tensor count
    | per tensor: u16 n | n bytes name | u8 kind (0 real, 1 complex)
                  | u8 ndim | ndim x u32 dims | f64 data (complex as re, im pairs)

A JSON sidecar ``<path>.json`` mirrors the config, counts and tensor list.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import FormatError, IntegrityError
from .config import FnoConfig
from .counting import brute_count, count_params

__all__ = ["MAGIC", "VERSION", "save_checkpoint", "load_checkpoint"]

MAGIC = b"FNOM"
VERSION = 1


def _blob(data: bytes) -> bytes:
    return struct.pack("<I", len(data)) + data


def save_checkpoint(path, config: FnoConfig, params: dict[str, np.ndarray], extras: dict | None = None) -> None:
    path = Path(path)
    extras = extras or {}
    parts = [MAGIC, struct.pack("<H", VERSION)]
    parts.append(_blob(json.dumps(config.to_dict()).encode()))
    parts.append(_blob(json.dumps(extras).encode()))
    parts.append(struct.pack("<I", len(params)))
    listing = []
    for name, value in params.items():
        arr = np.asarray(value)
        cplx = np.iscomplexobj(arr)
        raw = np.ascontiguousarray(arr, dtype="<c16" if cplx else "<f8")
        encoded = name.encode()
        parts.append(struct.pack("<H", len(encoded)) + encoded)
        parts.append(struct.pack("<BB", int(cplx), arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(raw.tobytes())
        listing.append({"name": name, "shape": list(arr.shape), "complex": bool(cplx)})
    path.write_bytes(b"".join(parts))
    counts = count_params(config)
    sidecar = {
        "format": "FNOM",
        "version": VERSION,
        "config": config.to_dict(),
        "extras": extras,
        "parameter_count": brute_count(params),
        "formula_count": counts.total,
        "components": counts.components,
        "spectral_effective": counts.spectral_effective,
        "tensors": listing,
    }
    Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise IntegrityError("file ends before the declared content")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_checkpoint(path) -> tuple[FnoConfig, dict[str, np.ndarray], dict]:
    data = Path(path).read_bytes()
    r = _Reader(data)
    if len(data) < 6 or r.take(4) != MAGIC:
        raise FormatError(f"{path} is not a model checkpoint (bad magic)")
    (version,) = r.unpack("<H")
    if version != VERSION:
        raise FormatError(f"unsupported checkpoint version {version}")
    try:
        config = FnoConfig.from_dict(json.loads(r.take(r.unpack("<I")[0])))
        extras = json.loads(r.take(r.unpack("<I")[0]))
    except (ValueError, TypeError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"corrupt checkpoint header: {exc}") from exc
    (count,) = r.unpack("<I")
    params = {}
    for _ in range(count):
        name = r.take(r.unpack("<H")[0]).decode()
        cplx, ndim = r.unpack("<BB")
        if cplx not in (0, 1):
            raise FormatError(f"unknown tensor kind {cplx}")
        shape = r.unpack(f"<{ndim}I")
        dtype = np.dtype("<c16" if cplx else "<f8")
        size = int(np.prod(shape)) * dtype.itemsize
        params[name] = np.frombuffer(r.take(size), dtype=dtype).reshape(shape).astype(dtype.newbyteorder("="))
    if r.pos != len(data):
        raise IntegrityError(f"{len(data) - r.pos} trailing bytes after the last tensor")
    return config, params, extras
