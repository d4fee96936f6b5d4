"""Binary writers for the engine's embedding interchange formats.

WEMB: magic ``WEMB``, u32 version=1, u32 vocab count, u32 dim, then per
token u16 byte length + UTF-8 token + dim little-endian float32 values.

SEMB: magic ``SEMB``, u32 version=1, u32 dim, u64 record count, then per
record u16 id byte length + UTF-8 id + u16 sentence count +
(count * dim) little-endian float32 values.
"""

from __future__ import annotations

import struct

import numpy as np

FORMAT_VERSION = 1


class WriteError(ValueError):
    pass


def _token_bytes(token: str) -> bytes:
    raw = token.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise WriteError(f"token too long: {token[:32]!r}...")
    return struct.pack("<H", len(raw)) + raw


def _vector_bytes(vec, dim: int, what: str) -> bytes:
    arr = np.asarray(vec, dtype="<f4")
    if arr.shape != (dim,):
        raise WriteError(f"{what}: vector shape {arr.shape}, expected ({dim},)")
    return arr.tobytes()


def write_wemb(path, dim: int, vectors: dict) -> None:
    """``vectors`` maps token -> length-``dim`` float sequence."""
    if dim < 1:
        raise WriteError("dim must be positive")
    with open(path, "wb") as fh:
        fh.write(b"WEMB")
        fh.write(struct.pack("<III", FORMAT_VERSION, len(vectors), dim))
        for token, vec in vectors.items():
            fh.write(_token_bytes(token))
            fh.write(_vector_bytes(vec, dim, f"token {token!r}"))


def write_semb(path, dim: int, records: dict) -> None:
    """``records`` maps post id -> (n_sentences, dim) float matrix."""
    if dim < 1:
        raise WriteError("dim must be positive")
    with open(path, "wb") as fh:
        fh.write(b"SEMB")
        fh.write(struct.pack("<IIQ", FORMAT_VERSION, dim, len(records)))
        for post_id, matrix in records.items():
            arr = np.asarray(matrix, dtype="<f4")
            if arr.ndim != 2 or arr.shape[1] != dim:
                raise WriteError(
                    f"post {post_id!r}: matrix shape {arr.shape}, expected (*, {dim})"
                )
            if arr.shape[0] > 0xFFFF:
                raise WriteError(f"post {post_id!r}: too many sentences")
            fh.write(_token_bytes(post_id))
            fh.write(struct.pack("<H", arr.shape[0]))
            fh.write(arr.tobytes())
