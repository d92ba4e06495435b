"""Exact L2 nearest-neighbor index with binary persistence.

The index is a flat float32 matrix scanned exhaustively per query; distances
are computed in float64 and ties break by ascending key so results are fully
deterministic. The on-disk format is versioned, little-endian, and trailed by
a CRC32 so corruption is detected on load.
"""

from __future__ import annotations

import os
import struct
import tempfile
import zlib
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .embedding import EmbeddingVector

MAGIC = b"CBVX"
VERSION = 1
_HEADER = struct.Struct("<4sHIQB")  # magic, version, dim, count, normalize_flag


class IndexFormatError(ValueError):
    """Index file is unreadable."""


class IndexVersionError(IndexFormatError):
    """Index file has a valid magic but an unsupported version."""


class IndexCorruptError(IndexFormatError):
    """Index file is truncated or fails its checksum."""


@dataclass(frozen=True, eq=False)
class FlatIndex:
    keys: Tuple[str, ...]
    vectors: np.ndarray  # (count, dim) float32, read-only
    dim: int
    normalize_flag: bool

    @property
    def count(self) -> int:
        return len(self.keys)


def build_index(entries: Sequence[Tuple[str, EmbeddingVector]],
                normalize_flag: bool = True) -> FlatIndex:
    """Assemble an index from (key, vector) pairs; keys must be unique."""
    keys: List[str] = []
    seen = set()
    dim = -1
    rows: List[np.ndarray] = []
    for key, vec in entries:
        if key in seen:
            raise ValueError(f"duplicate key {key!r}")
        seen.add(key)
        if dim == -1:
            dim = vec.dim
        elif vec.dim != dim:
            raise ValueError(f"dimension mismatch for key {key!r}: {vec.dim} vs {dim}")
        keys.append(key)
        rows.append(vec.values)
    if dim == -1:
        dim = 0
    matrix = np.vstack(rows).astype(np.float32) if rows else np.zeros((0, dim), dtype=np.float32)
    matrix.setflags(write=False)
    return FlatIndex(keys=tuple(keys), vectors=matrix, dim=dim, normalize_flag=normalize_flag)


def search(index: FlatIndex, query: EmbeddingVector, k: int) -> List[Tuple[str, float]]:
    """Top-k exact L2 scan; equal distances order by ascending key."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if index.count == 0:
        return []
    if query.dim != index.dim:
        raise ValueError(f"dimension mismatch: query {query.dim}, index {index.dim}")
    diffs = index.vectors.astype(np.float64) - query.values.astype(np.float64)
    dists = np.sqrt(np.einsum("ij,ij->i", diffs, diffs))
    order = sorted(range(index.count), key=lambda i: (dists[i], index.keys[i]))
    return [(index.keys[i], float(dists[i])) for i in order[:k]]


def save_index(index: FlatIndex, path: str) -> None:
    """Write the index atomically (temp file + rename in the target directory)."""
    payload = bytearray()
    payload += _HEADER.pack(MAGIC, VERSION, index.dim, index.count, int(index.normalize_flag))
    for key in index.keys:
        raw = key.encode("utf-8")
        payload += struct.pack("<I", len(raw))
        payload += raw
    payload += np.ascontiguousarray(index.vectors, dtype="<f4").tobytes()
    payload += struct.pack("<I", zlib.crc32(bytes(payload)) & 0xFFFFFFFF)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(os.path.abspath(path)) or ".",
                               prefix=".idx-", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(bytes(payload))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_index(path: str) -> FlatIndex:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size + 4:
        raise IndexCorruptError(f"{path}: file too short to be an index")
    if blob[:4] != MAGIC:
        raise IndexFormatError(f"{path}: bad magic, not an index file")
    body, trailer = blob[:-4], blob[-4:]
    (crc,) = struct.unpack("<I", trailer)
    if (zlib.crc32(body) & 0xFFFFFFFF) != crc:
        raise IndexCorruptError(f"{path}: checksum mismatch, file is corrupt")
    magic, version, dim, count, flag = _HEADER.unpack_from(body, 0)
    if version != VERSION:
        raise IndexVersionError(f"{path}: unsupported index version {version}")
    offset = _HEADER.size
    keys: List[str] = []
    try:
        for _ in range(count):
            (klen,) = struct.unpack_from("<I", body, offset)
            offset += 4
            keys.append(body[offset:offset + klen].decode("utf-8"))
            offset += klen
        matrix = np.frombuffer(body, dtype="<f4", count=count * dim, offset=offset)
    except (struct.error, ValueError, UnicodeDecodeError) as exc:
        raise IndexCorruptError(f"{path}: truncated or mangled payload: {exc}") from exc
    if offset + count * dim * 4 != len(body):
        raise IndexCorruptError(f"{path}: payload length does not match header counts")
    matrix = matrix.reshape(count, dim).astype(np.float32)
    matrix.setflags(write=False)
    return FlatIndex(keys=tuple(keys), vectors=matrix, dim=dim, normalize_flag=bool(flag))
