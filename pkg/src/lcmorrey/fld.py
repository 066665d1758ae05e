"""Binary field files in the FLD1 layout.

Header (little-endian): magic ``b"FLD1"``, u32 dim, u32 components, u32 N,
f64 L. Payload: ``components * N**dim`` float64 values, row-major, component
index slowest.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .spectral import Field, GridSpec

MAGIC = b"FLD1"
_HEADER = struct.Struct("<4sIIId")


def encode(field: Field) -> bytes:
    g = field.grid
    comps = int(np.prod(field.values.shape[: field.rank], dtype=np.int64))
    header = _HEADER.pack(MAGIC, g.dim, comps, g.points, float(g.length))
    return header + np.ascontiguousarray(field.values, dtype="<f8").tobytes(order="C")


def decode(data: bytes, dealias: bool = False) -> Field:
    if len(data) < _HEADER.size:
        raise ValueError("FLD1 data shorter than its header")
    magic, dim, comps, n, length = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}, expected {MAGIC!r}")
    grid = GridSpec(dim=dim, points=n, length=length, dealias=dealias)
    rank = {1: 0, dim: 1, dim * dim: 2}.get(comps)
    if rank is None:
        raise ValueError(f"{comps} components do not form a scalar, vector or matrix in dim {dim}")
    expected = comps * n**dim * 8
    payload = data[_HEADER.size :]
    if len(payload) != expected:
        raise ValueError(f"payload has {len(payload)} bytes, expected {expected}")
    values = np.frombuffer(payload, dtype="<f8").reshape((dim,) * rank + grid.shape)
    return Field(grid, values)


def save(field: Field, path) -> Path:
    path = Path(path)
    try:
        path.write_bytes(encode(field))
    except OSError as exc:
        raise OSError(f"cannot write field file {path}: {exc}") from exc
    return path


def load(path, dealias: bool = False) -> Field:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise OSError(f"cannot read field file {path}: {exc}") from exc
    try:
        return decode(data, dealias=dealias)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc
