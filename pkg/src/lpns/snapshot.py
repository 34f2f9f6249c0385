"""LPNS1 binary snapshot format.

Layout (all little-endian)::

    offset  size  content
    0       5     magic b"LPNS1"
    5       24    n1, n2, n3 as int64
    29      8     box_length as float64
    37      8     component count as int64
    45      ...   coefficients as interleaved (re, im) float64 pairs,
                  component-major, then the lattice in C order over
                  (k1, k2, k3) with each axis in FFT order

Coefficients use the mean-per-mode convention of :mod:`lpns.spectral`.
"""
from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .spectral import FourierGrid, ScalarField, VectorField

MAGIC = b"LPNS1"
_HEADER = struct.Struct("<5s3qdq")


class SnapshotError(ValueError):
    pass


def encode(field: ScalarField | VectorField) -> bytes:
    coeffs = field.coeffs if isinstance(field, VectorField) else field.coeffs[None]
    g = field.grid
    header = _HEADER.pack(MAGIC, *g.n, g.box_length, coeffs.shape[0])
    body = np.ascontiguousarray(coeffs).astype("<c16").tobytes()
    return header + body


def decode(data: bytes) -> ScalarField | VectorField:
    if len(data) < _HEADER.size:
        raise SnapshotError("truncated LPNS1 header")
    magic, n1, n2, n3, L, ncomp = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotError(f"bad magic {magic!r}")
    grid = FourierGrid((n1, n2, n3), L)
    expected = _HEADER.size + ncomp * grid.size * 16
    if len(data) != expected:
        raise SnapshotError(f"expected {expected} bytes for {ncomp} components on {grid.n}, got {len(data)}")
    coeffs = np.frombuffer(data, dtype="<c16", offset=_HEADER.size).reshape((ncomp,) + grid.shape)
    coeffs = coeffs.astype(np.complex128)
    if ncomp == 1:
        return ScalarField(grid, coeffs[0])
    if ncomp == 3:
        return VectorField(grid, coeffs)
    raise SnapshotError(f"unsupported component count {ncomp}")


def atomic_write_bytes(path, data: bytes):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_snapshot(path, field: ScalarField | VectorField):
    atomic_write_bytes(path, encode(field))


def read_snapshot(path) -> ScalarField | VectorField:
    return decode(Path(path).read_bytes())
