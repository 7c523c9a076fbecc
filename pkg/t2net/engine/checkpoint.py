"""
Binary container for named float arrays.

Layout (little-endian):
    b"T2NT" | version: u32 | records...
    record = name_len: u32 | name: UTF-8 | rank: u32 | dims: u64 × rank | data: f32 × prod(dims)

Records run until end of file. Both checkpoints and dataset samples use this
container; round trips are bit-exact for float32 data.
"""

from __future__ import annotations

import logging
import struct
from collections.abc import Mapping
from pathlib import Path

import numpy as np

from t2net.errors import ArtifactFormatError

logger = logging.getLogger("t2net.engine.checkpoint")

MAGIC = b"T2NT"
FORMAT_VERSION = 1


def encode_arrays(arrays: Mapping[str, np.ndarray]) -> bytes:
    parts = [MAGIC, struct.pack("<I", FORMAT_VERSION)]
    for name, arr in arrays.items():
        raw_name = name.encode("utf-8")
        a = np.asarray(arr)
        parts.append(struct.pack("<I", len(raw_name)))
        parts.append(raw_name)
        parts.append(struct.pack("<I", a.ndim))
        parts.append(struct.pack(f"<{a.ndim}Q", *a.shape))
        parts.append(np.ascontiguousarray(a, dtype="<f4").tobytes())
    return b"".join(parts)


def decode_arrays(blob: bytes, source: str = "<bytes>") -> dict[str, np.ndarray]:
    if len(blob) < 8 or blob[:4] != MAGIC:
        raise ArtifactFormatError(f"{source}: bad magic bytes {blob[:4]!r}, expected {MAGIC!r}")
    (version,) = struct.unpack_from("<I", blob, 4)
    if version != FORMAT_VERSION:
        raise ArtifactFormatError(f"{source}: unsupported format version {version}")

    arrays: dict[str, np.ndarray] = {}
    pos = 8
    try:
        while pos < len(blob):
            (name_len,) = struct.unpack_from("<I", blob, pos)
            pos += 4
            name = blob[pos:pos + name_len].decode("utf-8")
            pos += name_len
            (rank,) = struct.unpack_from("<I", blob, pos)
            pos += 4
            dims = struct.unpack_from(f"<{rank}Q", blob, pos)
            pos += 8 * rank
            count = int(np.prod(dims, dtype=np.int64))
            nbytes = 4 * count
            if pos + nbytes > len(blob):
                raise ArtifactFormatError(f"{source}: record '{name}' is truncated")
            data = np.frombuffer(blob, dtype="<f4", count=count, offset=pos)
            arrays[name] = data.reshape(dims).astype(np.float32)
            pos += nbytes
    except (struct.error, UnicodeDecodeError) as e:
        raise ArtifactFormatError(f"{source}: corrupt record at byte {pos}: {e}") from e
    return arrays


def save_arrays(path: Path | str, arrays: Mapping[str, np.ndarray]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_arrays(arrays))
    logger.debug("Wrote %d arrays to %s", len(arrays), path)
    return path


def load_arrays(path: Path | str) -> dict[str, np.ndarray]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Container file not found: {path}")
    return decode_arrays(path.read_bytes(), source=str(path))
