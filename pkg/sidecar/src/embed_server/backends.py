"""Embedding backends: a deterministic hash backend and real sentence models.

A backend exposes `dim`, `model_id`, and `encode(texts, normalize)` returning
(matrix of shape (len(texts), dim), number of truncated inputs). Encoding the
same text always yields the same vector within one loaded backend.
"""

from __future__ import annotations

import hashlib
from typing import Sequence, Tuple

import numpy as np


class HashBackend:
    """Deterministic stand-in model: text hash seeds a gaussian vector.

    Meant for tests and offline runs; no weights, no downloads. Inputs longer
    than max_chars are truncated to that prefix and counted.
    """

    def __init__(self, dim: int, max_chars: int = 8192) -> None:
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        if max_chars < 1:
            raise ValueError(f"max_chars must be >= 1, got {max_chars}")
        self.dim = dim
        self.max_chars = max_chars
        self.model_id = f"hash:{dim}"

    def encode(self, texts: Sequence[str], normalize: bool) -> Tuple[np.ndarray, int]:
        rows = np.empty((len(texts), self.dim), dtype=np.float64)
        truncated = 0
        for i, text in enumerate(texts):
            if len(text) > self.max_chars:
                truncated += 1
                text = text[: self.max_chars]
            seed = int.from_bytes(
                hashlib.sha256(text.encode("utf-8")).digest()[:8], "little")
            v = np.random.Generator(np.random.PCG64(seed)).standard_normal(self.dim)
            if normalize:
                v = v / np.linalg.norm(v)
            rows[i] = v
        return rows, truncated


class SentenceTransformerBackend:
    """Real model via sentence-transformers (imported only when used)."""

    def __init__(self, model_id: str) -> None:
        from sentence_transformers import SentenceTransformer

        self._model = SentenceTransformer(model_id)
        self.model_id = model_id
        self.dim = int(self._model.get_sentence_embedding_dimension())
        self._max_seq = getattr(self._model, "max_seq_length", None)

    def encode(self, texts: Sequence[str], normalize: bool) -> Tuple[np.ndarray, int]:
        matrix = self._model.encode(list(texts), normalize_embeddings=normalize,
                                    convert_to_numpy=True)
        truncated = 0
        tokenizer = getattr(self._model, "tokenizer", None)
        if tokenizer is not None and self._max_seq:
            for text in texts:
                ids = tokenizer(text, truncation=False)["input_ids"]
                if len(ids) > self._max_seq:
                    truncated += 1
        return np.asarray(matrix, dtype=np.float64), truncated


def make_backend(model_id: str):
    """`hash:<dim>` builds the deterministic backend, anything else a real model."""
    if model_id.startswith("hash:"):
        spec = model_id.split(":", 1)[1]
        try:
            dim = int(spec)
        except ValueError:
            raise ValueError(f"bad hash model {model_id!r}: dim must be an integer")
        return HashBackend(dim)
    return SentenceTransformerBackend(model_id)
