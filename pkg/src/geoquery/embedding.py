"""Embedding vectors, similarity metrics, and text-embedding providers.

Vectors are float32 numpy arrays; all reductions (dot products, norms)
accumulate in float64. Two providers exist: a deterministic synthetic one
built on character trigram hashing, and an HTTP client for a remote
embedding service.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Sequence

import httpx
import numpy as np

from .errors import (
    DegenerateVectorError,
    DimensionError,
    InputError,
    ProviderUnavailable,
)


def as_vector(values: Sequence[float] | np.ndarray, dim: int | None = None) -> np.ndarray:
    """Validate and convert to a float32 embedding vector."""
    v = np.asarray(values, dtype=np.float32)
    if v.ndim != 1 or v.size == 0:
        raise InputError("embedding must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(v)):
        raise InputError("embedding contains non-finite values")
    if dim is not None and v.size != dim:
        raise DimensionError(f"expected dim {dim}, got {v.size}")
    return v


def _check_pair(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.size} vs {b.size}")


def l2_normalize(v: np.ndarray) -> np.ndarray:
    """Scale to unit L2 norm; rejects the zero vector."""
    norm = float(np.linalg.norm(v.astype(np.float64)))
    if norm == 0.0:
        raise DegenerateVectorError("cannot normalize the zero vector")
    return (v.astype(np.float64) / norm).astype(np.float32)


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of the angle between two vectors, clamped into [-1, 1]."""
    _check_pair(a, b)
    a64 = a.astype(np.float64)
    b64 = b.astype(np.float64)
    na = float(np.linalg.norm(a64))
    nb = float(np.linalg.norm(b64))
    if na == 0.0 or nb == 0.0:
        raise DegenerateVectorError("cosine similarity undefined for the zero vector")
    return float(np.clip(np.dot(a64, b64) / (na * nb), -1.0, 1.0))


@dataclass(frozen=True)
class ProviderConfig:
    """How text embeddings are produced: locally and deterministically, or remotely."""

    kind: str = "synthetic"  # "synthetic" | "remote"
    dim: int = 64
    endpoint_url: str | None = None
    timeout_ms: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("synthetic", "remote"):
            raise InputError(f"unknown provider kind {self.kind!r}")
        if self.dim <= 0:
            raise InputError("dim must be positive")
        if self.timeout_ms <= 0:
            raise InputError("timeout_ms must be positive")
        if self.kind == "remote" and not self.endpoint_url:
            raise InputError("remote provider requires endpoint_url")


def _synthetic_embed(seed: int, dim: int, text: str) -> np.ndarray:
    """Hash character trigrams into signed buckets, then L2-normalize.

    Pure function of (seed, dim, text); related strings share trigrams and so
    land in overlapping buckets.
    """
    padded = f"  {text.lower()} "
    acc = np.zeros(dim, dtype=np.float64)
    key = seed.to_bytes(8, "little", signed=True)
    for i in range(len(padded) - 2):
        gram = padded[i : i + 3].encode("utf-8")
        h = hashlib.blake2b(gram, key=key, digest_size=8).digest()
        bucket = int.from_bytes(h[:4], "little") % dim
        sign = 1.0 if h[4] & 1 else -1.0
        acc[bucket] += sign
    if not acc.any():
        # Degenerate cancellation; fall back to a text-keyed unit impulse.
        h = hashlib.blake2b(padded.encode("utf-8"), key=key, digest_size=8).digest()
        acc[int.from_bytes(h[:4], "little") % dim] = 1.0
    return l2_normalize(acc.astype(np.float32))


def _remote_embed_batch(cfg: ProviderConfig, texts: list[str]) -> list[np.ndarray]:
    timeout = cfg.timeout_ms / 1000.0
    last_exc: Exception | None = None
    for _ in range(2):  # one retry on transport failure
        try:
            resp = httpx.post(cfg.endpoint_url, json={"texts": texts}, timeout=timeout)
            resp.raise_for_status()
            payload = resp.json()
            break
        except (httpx.TransportError, httpx.HTTPStatusError) as exc:
            last_exc = exc
    else:
        raise ProviderUnavailable(f"embedding service unreachable: {last_exc}")
    embeddings = payload.get("embeddings")
    if not isinstance(embeddings, list) or len(embeddings) != len(texts):
        raise ProviderUnavailable("malformed embedding service response")
    return [as_vector(e, dim=cfg.dim) for e in embeddings]


def embed_texts(cfg: ProviderConfig, texts: Sequence[str]) -> list[np.ndarray]:
    """Embed a batch of texts under the configured provider."""
    texts = list(texts)
    if any(not t for t in texts):
        raise InputError("cannot embed empty text")
    if cfg.kind == "synthetic":
        return [_synthetic_embed(cfg.seed, cfg.dim, t) for t in texts]
    return _remote_embed_batch(cfg, texts)


def embed_text(cfg: ProviderConfig, text: str) -> np.ndarray:
    """Embed a single text under the configured provider."""
    return embed_texts(cfg, [text])[0]
