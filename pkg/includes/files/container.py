"""
BSPC1 binary container for compressed groups.

Layout (all little-endian):
    b"BSPC1"
    u32 schema version
    u32 group count
    per group:
        u32 m, u32 n, u32 k, u32 r
        f64 basis, m*r values, column-major
        f64 coefficients, k blocks of r*n values, each row-major
"""

import logging
import os
import struct
from pathlib import Path
from typing import Sequence

import numpy as np

from config import config
from includes.compressor import CompressedGroup
from includes.errors import BlockFileError

logger = logging.getLogger(__name__)

MAGIC = b"BSPC1"
_U32 = struct.Struct("<I")
_HEADER = struct.Struct("<IIII")
_F64 = np.dtype("<f8")


def encode_groups(groups: Sequence[CompressedGroup]) -> bytes:
    parts = [MAGIC, _U32.pack(config.CONTAINER_SCHEMA_VERSION), _U32.pack(len(groups))]
    for g in groups:
        m, n, k = g.original_shape
        parts.append(_HEADER.pack(m, n, k, g.rank))
        parts.append(np.asarray(g.basis, dtype=_F64).tobytes(order="F"))
        for c in g.coefficients:
            parts.append(np.asarray(c, dtype=_F64).tobytes(order="C"))
    return b"".join(parts)


def _frozen(values: np.ndarray) -> np.ndarray:
    out = values.astype(np.float64)
    out.setflags(write=False)
    return out


def decode_groups(data: bytes) -> list[CompressedGroup]:
    """Parse container bytes. Raises ValueError on a malformed payload."""
    if not data.startswith(MAGIC):
        raise ValueError("bad magic, not a BSPC1 container")
    offset = len(MAGIC)

    def take(count: int) -> bytes:
        nonlocal offset
        if offset + count > len(data):
            raise ValueError("container truncated")
        chunk = data[offset:offset + count]
        offset += count
        return chunk

    (version,) = _U32.unpack(take(_U32.size))
    if version != config.CONTAINER_SCHEMA_VERSION:
        raise ValueError(f"unsupported container schema version {version}")
    (count,) = _U32.unpack(take(_U32.size))

    groups = []
    for _ in range(count):
        m, n, k, r = _HEADER.unpack(take(_HEADER.size))
        if min(m, n, k, r) < 1 or r > m:
            raise ValueError(f"bad group header m={m} n={n} k={k} r={r}")
        basis = np.frombuffer(take(8 * m * r), dtype=_F64).reshape((m, r), order="F")
        coefficients = tuple(
            _frozen(np.frombuffer(take(8 * r * n), dtype=_F64).reshape((r, n), order="C"))
            for _ in range(k)
        )
        groups.append(CompressedGroup(
            basis=_frozen(basis),
            coefficients=coefficients,
            rank=r,
            original_shape=(m, n, k),
        ))
    if offset != len(data):
        raise ValueError(f"{len(data) - offset} trailing bytes after last group")
    return groups


def write_container(path: str | os.PathLike, groups: Sequence[CompressedGroup]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(encode_groups(groups))
    except OSError as e:
        logger.error(f"Failed to write container {path}: {e}")
        raise BlockFileError(path, f"cannot write: {e}") from e
    logger.info(f"Wrote {len(groups)} groups to {path}")
    return path


def read_container(path: str | os.PathLike) -> list[CompressedGroup]:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise BlockFileError(path, f"cannot read: {e}") from e
    try:
        return decode_groups(data)
    except (ValueError, struct.error) as e:
        raise BlockFileError(path, str(e)) from e
