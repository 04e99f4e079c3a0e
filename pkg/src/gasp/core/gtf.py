"""GTF tensor files: b"GTF1", u8 rank, rank x u32 LE dims, f32 LE payload."""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"GTF1"


class GTFError(ValueError):
    pass


def encode(array: np.ndarray) -> bytes:
    array = np.asarray(array)
    if array.ndim > 255:
        raise GTFError("rank exceeds 255")
    header = MAGIC + struct.pack("<B", array.ndim) + struct.pack(f"<{array.ndim}I", *array.shape)
    return header + np.ascontiguousarray(array, dtype="<f4").tobytes()


def decode(blob: bytes) -> np.ndarray:
    if blob[:4] != MAGIC:
        raise GTFError("bad magic; not a GTF1 file")
    rank = blob[4]
    end = 5 + 4 * rank
    if len(blob) < end:
        raise GTFError("truncated header")
    dims = struct.unpack(f"<{rank}I", blob[5:end])
    count = int(np.prod(dims)) if rank else 1
    payload = blob[end:]
    if len(payload) != 4 * count:
        raise GTFError(f"payload has {len(payload)} bytes, expected {4 * count}")
    return np.frombuffer(payload, dtype="<f4").reshape(dims).astype(np.float64)


def save(path: str | Path, array: np.ndarray) -> None:
    Path(path).write_bytes(encode(array))


def load(path: str | Path) -> np.ndarray:
    return decode(Path(path).read_bytes())
