"""Versioned binary weight checkpoints.

Layout: header ``TWNN`` magic, u16 version, u32 entry count, then a manifest
of (name, shape) entries, then the arrays as little-endian float32 in
manifest order. Running statistics ride along with parameters; loading is
by name, so files describe themselves.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import DataError

MAGIC = b"TWNN"
VERSION = 1


def save_weights(path: str | Path, named_arrays: list[tuple[str, np.ndarray]]) -> None:
    chunks = [MAGIC, struct.pack("<HI", VERSION, len(named_arrays))]
    for name, arr in named_arrays:
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<B", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape) if arr.ndim else b"")
    for _, arr in named_arrays:
        chunks.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    Path(path).write_bytes(b"".join(chunks))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.off = 0

    def take(self, n: int) -> bytes:
        if self.off + n > len(self.data):
            raise DataError(f"truncated weight file at byte {self.off} (need {n} more)")
        out = self.data[self.off:self.off + n]
        self.off += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_weights(path: str | Path) -> dict[str, np.ndarray]:
    r = _Reader(Path(path).read_bytes())
    if r.take(4) != MAGIC:
        raise DataError(f"{path}: bad magic at byte 0 (not a weight file)")
    version, count = r.unpack("<HI")
    if version != VERSION:
        raise DataError(f"{path}: unsupported weight file version {version}")
    manifest: list[tuple[str, tuple[int, ...]]] = []
    for _ in range(count):
        (name_len,) = r.unpack("<H")
        name = r.take(name_len).decode("utf-8")
        (ndim,) = r.unpack("<B")
        shape = r.unpack(f"<{ndim}I") if ndim else ()
        manifest.append((name, shape))
    out: dict[str, np.ndarray] = {}
    for name, shape in manifest:
        size = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(r.take(4 * size), dtype="<f4").reshape(shape).copy()
        out[name] = arr
    if r.off != len(r.data):
        raise DataError(f"{path}: {len(r.data) - r.off} trailing bytes at byte {r.off}")
    return out


def assign_state(named_state: list[tuple[str, np.ndarray]], arrays: dict[str, np.ndarray],
                 prefix: str = "") -> None:
    """Copy loaded arrays into live parameter/buffer storage, by name."""
    for name, dest in named_state:
        key = prefix + name
        if key not in arrays:
            raise DataError(f"weight file missing array {key!r}")
        src = arrays[key]
        if tuple(src.shape) != tuple(dest.shape):
            raise DataError(f"array {key!r}: shape {src.shape} != expected {dest.shape}")
        dest[...] = src.astype(dest.dtype)
