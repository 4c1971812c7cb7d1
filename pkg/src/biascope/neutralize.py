"""Test-time mitigation: average a sentence's embeddings with its swapped twin.

Averaging happens in float32, the stores' native precision, so identical
inputs reproduce themselves bit-exactly and symmetric constructions cancel
exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AlignmentError
from .store import AlignedPair, EmbeddingStore, align_pair, write_store


@dataclass(frozen=True)
class NeutralizedSentence:
    sentence_id: str
    tokens: tuple[str, ...]  # surface forms of the original variant
    vectors: np.ndarray      # n x d float32, coordinate-wise mean


def neutralize_pair(pair: AlignedPair) -> NeutralizedSentence:
    """Coordinate-wise mean of the two variants; tokens come from variant a."""
    a = np.asarray(pair.vectors_a, dtype=np.float32)
    b = np.asarray(pair.vectors_b, dtype=np.float32)
    if a.shape != b.shape:
        raise AlignmentError(
            f"sentence {pair.sentence_id!r}: shape {a.shape} vs {b.shape}"
        )
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise AlignmentError(f"sentence {pair.sentence_id!r}: non-finite input vectors")
    mean = (a + b) / np.float32(2.0)
    return NeutralizedSentence(pair.sentence_id, pair.tokens_a, mean)


def neutralize_store(
    store_a: EmbeddingStore, store_b: EmbeddingStore, out_path: str | Path
) -> EmbeddingStore:
    """Write a store of averaged vectors, sentence order following store_a."""
    ids_a = set(store_a.sentence_ids())
    ids_b = set(store_b.sentence_ids())
    if ids_a != ids_b:
        missing_in_b = sorted(ids_a - ids_b)
        missing_in_a = sorted(ids_b - ids_a)
        raise AlignmentError(
            f"sentence id sets differ: only in a: {missing_in_b}; only in b: {missing_in_a}"
        )

    def generate():
        for sid in store_a.sentence_ids():
            neutral = neutralize_pair(align_pair(store_a, store_b, sid))
            yield sid, neutral.tokens, neutral.vectors

    layer = f"avg({store_a.layer},{store_b.layer})"
    return write_store(generate(), store_a.dim, out_path, layer=layer)
