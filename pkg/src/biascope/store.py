"""Bit-exact on-disk format for per-token embedding matrices.

A store is a pair of files: a binary block ``<path>`` holding a 16-byte
header (magic ``CEMB``, format version, dimensionality, reserved word, all
little-endian u32 after the magic) followed by raw little-endian float32
payload, and a JSONL manifest ``<path>.manifest`` whose first line is
``{"dim": d, "layer": str, "count": n}`` followed by one
``{"id", "tokens", "offset"}`` object per sentence. Offsets index floats
(not bytes) from the start of the payload.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import AlignmentError, StoreFormatError, StoreLookupError

MAGIC = b"CEMB"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIII")
HEADER_SIZE = _HEADER.size


def manifest_path(store_path: str | Path) -> Path:
    return Path(str(store_path) + ".manifest")


@dataclass(frozen=True)
class _Entry:
    tokens: tuple[str, ...]
    offset: int  # float index into the payload


@dataclass(frozen=True)
class AlignedPair:
    """Token-aligned embedding matrices of a sentence and its paired variant."""

    sentence_id: str
    tokens_a: tuple[str, ...]
    tokens_b: tuple[str, ...]
    vectors_a: np.ndarray
    vectors_b: np.ndarray


class EmbeddingStore:
    """Read-only view of a store; safe for concurrent readers."""

    def __init__(self, path: Path, dim: int, layer: str, entries: dict[str, _Entry]):
        self.path = path
        self.dim = dim
        self.layer = layer
        self._entries = entries

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, sentence_id: str) -> bool:
        return sentence_id in self._entries

    def sentence_ids(self) -> list[str]:
        return list(self._entries)

    def tokens(self, sentence_id: str) -> tuple[str, ...]:
        return self._entry(sentence_id).tokens

    def _entry(self, sentence_id: str) -> _Entry:
        try:
            return self._entries[sentence_id]
        except KeyError:
            raise StoreLookupError(f"unknown sentence id {sentence_id!r} in {self.path}") from None

    def read(self, sentence_id: str, token_range: Optional[tuple[int, int]] = None) -> np.ndarray:
        return read_vectors(self, sentence_id, token_range)


def _atomic_write(path: Path, write_body) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=path.name + ".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            write_body(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_store(
    entries: Iterable[tuple[str, Sequence[str], np.ndarray]],
    dim: int,
    path: str | Path,
    layer: str = "unspecified",
) -> EmbeddingStore:
    """Write block + manifest atomically and return the opened result."""
    path = Path(path)
    if dim <= 0:
        raise StoreFormatError(f"dim must be positive, got {dim}")
    index: dict[str, _Entry] = {}
    blobs: list[bytes] = []
    offset = 0
    for sentence_id, tokens, matrix in entries:
        if sentence_id in index:
            raise StoreFormatError(f"duplicate sentence id {sentence_id!r}")
        mat = np.asarray(matrix, dtype="<f4")
        if mat.ndim != 2 or mat.shape != (len(tokens), dim):
            raise StoreFormatError(
                f"sentence {sentence_id!r}: matrix shape {mat.shape} != ({len(tokens)}, {dim})"
            )
        if not np.all(np.isfinite(mat)):
            raise StoreFormatError(f"sentence {sentence_id!r}: non-finite values in payload")
        index[sentence_id] = _Entry(tuple(tokens), offset)
        blobs.append(mat.tobytes(order="C"))
        offset += mat.size

    def body(fh):
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, dim, 0))
        for blob in blobs:
            fh.write(blob)

    _atomic_write(path, body)

    def manifest_body(fh):
        header = {"dim": dim, "layer": layer, "count": len(index)}
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode("utf-8"))
        for sid, entry in index.items():
            rec = {"id": sid, "tokens": list(entry.tokens), "offset": entry.offset}
            fh.write((json.dumps(rec, sort_keys=True) + "\n").encode("utf-8"))

    _atomic_write(manifest_path(path), manifest_body)
    return EmbeddingStore(path, dim, layer, index)


def open_store(path: str | Path) -> EmbeddingStore:
    """Validate header and manifest/block consistency, then index sentences."""
    path = Path(path)
    size = path.stat().st_size
    if size < HEADER_SIZE:
        raise StoreFormatError(f"{path}: truncated header ({size} bytes)")
    with open(path, "rb") as fh:
        magic, version, dim, _reserved = _HEADER.unpack(fh.read(HEADER_SIZE))
    if magic != MAGIC:
        raise StoreFormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise StoreFormatError(f"{path}: unsupported format version {version}")
    if dim <= 0:
        raise StoreFormatError(f"{path}: non-positive dim {dim}")
    payload_bytes = size - HEADER_SIZE
    if payload_bytes % 4:
        raise StoreFormatError(f"{path}: payload not a whole number of floats")
    total_floats = payload_bytes // 4

    mpath = manifest_path(path)
    if not mpath.exists():
        raise StoreFormatError(f"{path}: missing manifest {mpath}")
    entries: dict[str, _Entry] = {}
    with open(mpath, encoding="utf-8") as fh:
        try:
            header = json.loads(fh.readline())
        except (json.JSONDecodeError, ValueError) as exc:
            raise StoreFormatError(f"{mpath}: bad manifest header: {exc}") from exc
        if not isinstance(header, dict) or "dim" not in header or "count" not in header:
            raise StoreFormatError(f"{mpath}: manifest header missing dim/count")
        if header["dim"] != dim:
            raise StoreFormatError(
                f"{mpath}: manifest dim {header['dim']} != block dim {dim}"
            )
        layer = str(header.get("layer", "unspecified"))
        expected = 0
        for line_no, raw in enumerate(fh, 2):
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
                sid, tokens, offset = rec["id"], rec["tokens"], rec["offset"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise StoreFormatError(f"{mpath}:{line_no}: bad manifest record") from exc
            if sid in entries:
                raise StoreFormatError(f"{mpath}:{line_no}: duplicate sentence id {sid!r}")
            if offset != expected:
                raise StoreFormatError(
                    f"{mpath}:{line_no}: offset {offset} is not the running total {expected}"
                )
            entries[sid] = _Entry(tuple(tokens), int(offset))
            expected += len(tokens) * dim
    if len(entries) != header["count"]:
        raise StoreFormatError(
            f"{mpath}: count {header['count']} != {len(entries)} sentence records"
        )
    if expected != total_floats:
        raise StoreFormatError(
            f"{path}: block holds {total_floats} floats but manifest declares {expected}"
        )
    return EmbeddingStore(path, dim, layer, entries)


def read_vectors(
    store: EmbeddingStore,
    sentence_id: str,
    token_range: Optional[tuple[int, int]] = None,
) -> np.ndarray:
    """Return the (sub)matrix for a sentence; ``token_range`` is inclusive."""
    entry = store._entry(sentence_id)
    n_tokens = len(entry.tokens)
    if token_range is None:
        start, end = 0, n_tokens - 1
    else:
        start, end = token_range
        if not (0 <= start <= end < n_tokens):
            raise IndexError(
                f"token range [{start}, {end}] out of bounds for {n_tokens}-token "
                f"sentence {sentence_id!r}"
            )
    rows = end - start + 1
    byte_off = HEADER_SIZE + (entry.offset + start * store.dim) * 4
    with open(store.path, "rb") as fh:
        fh.seek(byte_off)
        buf = fh.read(rows * store.dim * 4)
    if len(buf) != rows * store.dim * 4:
        raise StoreFormatError(f"{store.path}: short read for sentence {sentence_id!r}")
    return np.frombuffer(buf, dtype="<f4").reshape(rows, store.dim).copy()


def align_pair(store_a: EmbeddingStore, store_b: EmbeddingStore, sentence_id: str) -> AlignedPair:
    """Pair a sentence's matrices from two stores, enforcing equal shape."""
    if store_a.dim != store_b.dim:
        raise StoreFormatError(f"dim mismatch: {store_a.dim} vs {store_b.dim}")
    tokens_a = store_a.tokens(sentence_id)
    tokens_b = store_b.tokens(sentence_id)
    if len(tokens_a) != len(tokens_b):
        raise AlignmentError(
            f"sentence {sentence_id!r}: token count {len(tokens_a)} vs {len(tokens_b)} "
            f"({list(tokens_a)} vs {list(tokens_b)})"
        )
    return AlignedPair(
        sentence_id=sentence_id,
        tokens_a=tokens_a,
        tokens_b=tokens_b,
        vectors_a=read_vectors(store_a, sentence_id),
        vectors_b=read_vectors(store_b, sentence_id),
    )
