"""Contextual token encoders behind a tiny common interface.

``encode(tokens)`` must return one float32 row per input token. Two encoder
families are available:

* ``hashed`` - a weight-free deterministic stand-in: per-token feature-hash
  vectors blended with bidirectional exponential context scans, so every
  vector depends on the whole sentence. Always available; ideal for pipeline
  tests. Options: ``hashed:dim=64,seed=0,decay=0.5``.
* ``hf:<path>`` - a locally downloaded Hugging Face transformer; subword
  vectors are mean-pooled back onto the input tokens. Requires ``torch`` and
  ``transformers``.
"""

from __future__ import annotations

import hashlib

import numpy as np


class HashedContextEncoder:
    """Deterministic sentence-sensitive token encoder with no learned weights."""

    def __init__(self, dim: int = 64, seed: int = 0, decay: float = 0.5):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        if not 0.0 <= decay < 1.0:
            raise ValueError("decay must be in [0, 1)")
        self.dim = dim
        self.seed = seed
        self.decay = decay
        self.name = f"hashed:dim={dim},seed={seed},decay={decay}"
        self._cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        cached = self._cache.get(token)
        if cached is None:
            digest = hashlib.blake2b(
                token.encode("utf-8"), digest_size=8, key=str(self.seed).encode("ascii")
            ).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "little"))
            cached = rng.standard_normal(self.dim) / np.sqrt(self.dim)
            self._cache[token] = cached
        return cached

    def encode(self, tokens: list[str]) -> np.ndarray:
        base = np.stack([self._token_vector(t) for t in tokens])
        n = base.shape[0]
        fwd = np.zeros_like(base)
        bwd = np.zeros_like(base)
        carry = np.zeros(self.dim)
        for i in range(n):
            fwd[i] = carry
            carry = self.decay * carry + base[i]
        carry = np.zeros(self.dim)
        for i in range(n - 1, -1, -1):
            bwd[i] = carry
            carry = self.decay * carry + base[i]
        return (base + 0.5 * (fwd + bwd)).astype(np.float32)

    def encode_batch(self, sentences: list[list[str]]) -> list[np.ndarray]:
        return [self.encode(tokens) for tokens in sentences]


class HfEncoder:
    """Mean-pools a local Hugging Face model's subword states onto input tokens."""

    def __init__(self, model_path: str, layer: str = "last"):
        try:
            import torch
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:  # pragma: no cover - depends on environment
            raise RuntimeError("hf encoders need torch and transformers installed") from exc
        self._torch = torch
        self.tokenizer = AutoTokenizer.from_pretrained(model_path, local_files_only=True)
        self.model = AutoModel.from_pretrained(model_path, local_files_only=True)
        self.model.eval()
        self.dim = int(self.model.config.hidden_size)
        self.layer = layer
        self.name = f"hf:{model_path}"

    def encode(self, tokens: list[str]) -> np.ndarray:  # pragma: no cover - needs weights
        torch = self._torch
        enc = self.tokenizer(
            tokens, is_split_into_words=True, return_tensors="pt", truncation=False
        )
        with torch.no_grad():
            hidden = self.model(**enc).last_hidden_state[0]
        word_ids = enc.word_ids(0)
        rows = np.zeros((len(tokens), self.dim), dtype=np.float64)
        counts = np.zeros(len(tokens), dtype=np.int64)
        for position, word_id in enumerate(word_ids):
            if word_id is not None:
                rows[word_id] += hidden[position].numpy()
                counts[word_id] += 1
        if np.any(counts == 0):
            missing = [tokens[i] for i in np.flatnonzero(counts == 0)]
            raise RuntimeError(f"tokenizer produced no subwords for tokens {missing}")
        return (rows / counts[:, None]).astype(np.float32)

    def encode_batch(self, sentences: list[list[str]]) -> list[np.ndarray]:  # pragma: no cover
        return [self.encode(tokens) for tokens in sentences]


def get_encoder(identifier: str):
    """Build an encoder from its identifier string."""
    if identifier == "hashed" or identifier.startswith("hashed:"):
        options = {}
        if ":" in identifier:
            for item in identifier.split(":", 1)[1].split(","):
                if not item:
                    continue
                key, _, value = item.partition("=")
                options[key.strip()] = value.strip()
        return HashedContextEncoder(
            dim=int(options.get("dim", 64)),
            seed=int(options.get("seed", 0)),
            decay=float(options.get("decay", 0.5)),
        )
    if identifier.startswith("hf:"):
        return HfEncoder(identifier[3:])
    raise ValueError(f"unknown encoder identifier {identifier!r}")
