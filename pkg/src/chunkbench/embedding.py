"""Embedding providers and vector math.

Two providers share one contract: the offline deterministic character-trigram
hasher (reproducible anywhere, no model weights) and the remote HTTP provider
speaking POST /v1/embed. Vectors are stored as float32; all metric arithmetic
accumulates in float64.
"""

from __future__ import annotations

import hashlib
import json
import unicodedata
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, List, Optional, Sequence, Tuple

import httpx
import numpy as np

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF

PROVIDER_KINDS = ("deterministic", "remote")


class ProviderError(RuntimeError):
    """Remote embedding endpoint failed or broke the wire contract."""


@dataclass(frozen=True, eq=False)
class EmbeddingVector:
    """Fixed-width float32 vector with finite entries."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float32)
        if arr.ndim != 1 or arr.shape[0] < 1:
            raise ValueError("embedding must be a non-empty 1-D vector")
        if not np.all(np.isfinite(arr)):
            raise ValueError("embedding entries must be finite")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])

    def tolist(self) -> List[float]:
        return [float(x) for x in self.values]


@dataclass(frozen=True)
class ProviderConfig:
    kind: str = "deterministic"
    dim: int = 1024
    endpoint: Optional[str] = None
    normalize: bool = True
    batch_size: int = 32
    retries: int = 2
    timeout: float = 10.0

    def __post_init__(self) -> None:
        if self.kind not in PROVIDER_KINDS:
            raise ValueError(f"unknown provider kind {self.kind!r}")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.retries < 0:
            raise ValueError("retries must be >= 0")


def provider_fingerprint(cfg: ProviderConfig) -> str:
    """Stable digest of everything that can change a vector for a given text."""
    doc = {"kind": cfg.kind, "dim": cfg.dim, "normalize": cfg.normalize,
           "endpoint": cfg.endpoint if cfg.kind == "remote" else None}
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode("utf-8")).hexdigest()[:16]


@lru_cache(maxsize=1 << 16)
def _trigram_hash(trigram: str) -> int:
    h = _FNV_OFFSET
    for b in trigram.encode("utf-8"):
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    return h


def embed_deterministic(text: str, dim: int = 1024) -> EmbeddingVector:
    """Hash character trigrams of the NFC text into dim buckets, L2-normalized.

    Texts shorter than 3 codepoints embed to the zero vector (callers treat it
    as degenerate for cosine purposes).
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    text = unicodedata.normalize("NFC", text)
    counts = np.zeros(dim, dtype=np.float64)
    for i in range(len(text) - 2):
        counts[_trigram_hash(text[i:i + 3]) % dim] += 1.0
    norm = float(np.sqrt(np.dot(counts, counts)))
    if norm > 0.0:
        counts /= norm
    return EmbeddingVector(counts.astype(np.float32))


def _batches(texts: Sequence[str], size: int) -> Iterable[Sequence[str]]:
    for i in range(0, len(texts), size):
        yield texts[i:i + size]


def _post_embed(client: httpx.Client, cfg: ProviderConfig, batch: Sequence[str]) -> dict:
    url = cfg.endpoint.rstrip("/") + "/v1/embed"
    attempts = 1 + cfg.retries
    last_error = "no attempt made"
    for _ in range(attempts):
        try:
            resp = client.post(url, json={"texts": list(batch), "normalize": cfg.normalize})
        except httpx.HTTPError as exc:
            last_error = f"transport error: {exc}"
            continue
        if resp.status_code == 200:
            try:
                return resp.json()
            except ValueError as exc:
                raise ProviderError(f"endpoint returned non-JSON body: {exc}") from exc
        if resp.status_code >= 500:
            last_error = f"server returned {resp.status_code}"
            continue
        raise ProviderError(f"endpoint rejected request ({resp.status_code}): {resp.text[:200]}")
    raise ProviderError(f"embedding request failed after {attempts} attempts: {last_error}")


def embed_remote(texts: Sequence[str], cfg: ProviderConfig) -> List[EmbeddingVector]:
    """Embed texts over HTTP, preserving order; batches split at cfg.batch_size."""
    if cfg.kind != "remote":
        raise ValueError("embed_remote requires a remote provider config")
    if not cfg.endpoint:
        raise ProviderError("remote provider requires an endpoint")
    out: List[EmbeddingVector] = []
    with httpx.Client(timeout=cfg.timeout) as client:
        for batch in _batches(list(texts), cfg.batch_size):
            body = _post_embed(client, cfg, batch)
            vectors = body.get("vectors")
            dim = body.get("dim")
            if not isinstance(vectors, list) or not isinstance(dim, int):
                raise ProviderError("endpoint response lacks 'vectors'/'dim'")
            if len(vectors) != len(batch):
                raise ProviderError(
                    f"count mismatch: sent {len(batch)} texts, got {len(vectors)} vectors")
            if dim != cfg.dim:
                raise ProviderError(f"dimension mismatch: endpoint dim {dim}, configured {cfg.dim}")
            for row in vectors:
                vec = EmbeddingVector(np.asarray(row, dtype=np.float32))
                if vec.dim != dim:
                    raise ProviderError(
                        f"dimension mismatch: vector of length {vec.dim}, declared {dim}")
                out.append(vec)
    return out


def embed_texts(texts: Sequence[str], cfg: ProviderConfig) -> List[EmbeddingVector]:
    """Provider dispatch; the deterministic provider never needs a network."""
    if cfg.kind == "deterministic":
        return [embed_deterministic(t, cfg.dim) for t in texts]
    return embed_remote(texts, cfg)


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine similarity in float64; zero-norm input yields 0.0."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    va = a.values.astype(np.float64)
    vb = b.values.astype(np.float64)
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.clip(np.dot(va, vb) / (na * nb), -1.0, 1.0))


def l2_distance(a: EmbeddingVector, b: EmbeddingVector) -> float:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    diff = a.values.astype(np.float64) - b.values.astype(np.float64)
    return float(np.sqrt(np.dot(diff, diff)))


def write_embeddings_jsonl(path: str, items: Sequence[Tuple[str, EmbeddingVector]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key, vec in items:
            fh.write(json.dumps({"key": key, "vector": vec.tolist()}, ensure_ascii=False) + "\n")


def read_embeddings_jsonl(path: str) -> List[Tuple[str, EmbeddingVector]]:
    items: List[Tuple[str, EmbeddingVector]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            items.append((rec["key"], EmbeddingVector(np.asarray(rec["vector"], dtype=np.float32))))
    return items
