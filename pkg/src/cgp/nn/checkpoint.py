"""Binary parameter checkpoints.

Layout: magic "CGPW", u32 version, u32 parameter count, then for every
parameter: u32 name length, utf-8 name, u32 rank, u32 dims, little-endian
float32 payload. Integers are little-endian.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"CGPW"
VERSION = 1


class CheckpointError(ValueError):
    """Raised when a checkpoint file is malformed."""


def save_params(path: str | Path, named: dict[str, np.ndarray]) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(named)))
        for name in sorted(named):
            arr = np.ascontiguousarray(named[name], dtype="<f4")
            encoded = name.encode()
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes())


def _read_exact(fh, n: int, what: str) -> bytes:
    chunk = fh.read(n)
    if len(chunk) != n:
        raise CheckpointError(f"truncated checkpoint at {what}: wanted {n} bytes, got {len(chunk)}")
    return chunk


def load_params(path: str | Path) -> dict[str, np.ndarray]:
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != MAGIC:
            raise CheckpointError(f"bad magic {magic!r}, expected {MAGIC!r}")
        version, count = struct.unpack("<II", _read_exact(fh, 8, "header"))
        if version != VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version}, expected {VERSION}")
        out: dict[str, np.ndarray] = {}
        for i in range(count):
            (name_len,) = struct.unpack("<I", _read_exact(fh, 4, f"param {i} name length"))
            name = _read_exact(fh, name_len, f"param {i} name").decode()
            (rank,) = struct.unpack("<I", _read_exact(fh, 4, f"{name} rank"))
            shape = struct.unpack(f"<{rank}I", _read_exact(fh, 4 * rank, f"{name} dims"))
            n_items = int(np.prod(shape)) if rank else 1
            payload = _read_exact(fh, 4 * n_items, f"{name} payload")
            out[name] = np.frombuffer(payload, dtype="<f4").reshape(shape).copy()
        trailing = fh.read(1)
        if trailing:
            raise CheckpointError("trailing bytes after final parameter")
    return out
