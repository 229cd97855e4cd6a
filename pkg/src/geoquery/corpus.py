"""Ingestion and persistence of the visual corpus and the described proxy subset.

The visual corpus travels as newline-delimited JSON records
{"col", "row", "season", "embedding": [...]}. The proxy corpus is NDJSON of
{"col", "row", "season", "description", "text_embedding": [...]} preceded by a
header record carrying the format name, version, dim, and provider identity.
Built indexes use the binary format owned by the index module.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import Iterable, Sequence

import httpx
import numpy as np

from .embedding import ProviderConfig, as_vector, embed_texts
from .errors import (
    DimensionError,
    DuplicateKeyError,
    FormatError,
    InputError,
    MissingDescriptionError,
    ProviderUnavailable,
    VersionError,
)
from .geo import Season, TileId, TileKey
from .index import KEY_DTYPE, Index, IndexParams

PROXY_FORMAT = "GQPX"
PROXY_VERSION = 1
INGEST_BATCH = 10_000


@dataclass(frozen=True)
class ProxyRecord:
    key: TileKey
    description: str
    text_embedding: np.ndarray

    def __post_init__(self):
        if not self.description:
            raise InputError("proxy description must be non-empty")


@dataclass(frozen=True)
class DescribeOracle:
    """Source of tile descriptions: a keyed fixture file, or a remote service."""

    kind: str  # "fixture" | "remote"
    fixture_path: str | None = None
    endpoint_url: str | None = None
    timeout_ms: int = 30_000

    def __post_init__(self):
        if self.kind not in ("fixture", "remote"):
            raise InputError(f"unknown oracle kind {self.kind!r}")
        if (self.kind == "fixture") != (self.fixture_path is not None):
            raise InputError("fixture oracle requires fixture_path and no endpoint")
        if (self.kind == "remote") != (self.endpoint_url is not None):
            raise InputError("remote oracle requires endpoint_url and no fixture")


def key_to_text(key: TileKey) -> str:
    return f"{key.tile.col}:{key.tile.row}:{key.season.value}"


def key_from_text(text: str) -> TileKey:
    try:
        col, row, season = text.split(":")
        return TileKey(TileId(int(col), int(row)), Season(season))
    except (ValueError, KeyError) as exc:
        raise FormatError(f"bad tile key {text!r}: {exc}") from exc


def _parse_manifest_record(line: str, ordinal: int) -> tuple[tuple, list]:
    try:
        rec = json.loads(line)
        key = (int(rec["col"]), int(rec["row"]), Season(rec["season"]).index)
        emb = rec["embedding"]
    except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
        raise FormatError(f"bad manifest record at ordinal {ordinal}: {exc}") from exc
    return key, emb


def read_manifest(path) -> Iterable[tuple[tuple, list]]:
    """Yield ((col, row, season_index), embedding) per manifest record."""
    with open(path, "r", encoding="utf-8") as f:
        ordinal = 0
        for line in f:
            line = line.strip()
            if not line:
                continue
            yield _parse_manifest_record(line, ordinal)
            ordinal += 1


def ingest_visual(manifest_path, params: IndexParams = IndexParams()) -> Index:
    """Stream a manifest into a built visual index, validating per record."""
    keys_chunks: list[np.ndarray] = []
    mat_chunks: list[np.ndarray] = []
    seen: set[tuple] = set()
    dim: int | None = None
    batch_keys: list[tuple] = []
    batch_vecs: list[np.ndarray] = []

    def flush():
        if not batch_keys:
            return
        ks = np.array(batch_keys, dtype=KEY_DTYPE)
        keys_chunks.append(ks)
        mat_chunks.append(np.vstack(batch_vecs))
        batch_keys.clear()
        batch_vecs.clear()

    for ordinal, (key, emb) in enumerate(read_manifest(manifest_path)):
        if key in seen:
            raise DuplicateKeyError(f"duplicate key {key} at record ordinal {ordinal}")
        seen.add(key)
        try:
            v = as_vector(emb)
        except (InputError, DimensionError) as exc:
            raise FormatError(f"bad embedding at record ordinal {ordinal}: {exc}") from exc
        if dim is None:
            dim = v.size
        elif v.size != dim:
            raise DimensionError(
                f"record ordinal {ordinal} has dim {v.size}, expected {dim}"
            )
        batch_keys.append(key)
        batch_vecs.append(v)
        if len(batch_keys) >= INGEST_BATCH:
            flush()
    flush()
    if not keys_chunks:
        raise InputError("manifest is empty")
    keys = np.concatenate(keys_chunks)
    matrix = np.vstack(mat_chunks)
    return Index.from_arrays(keys, matrix, params)


def write_manifest(path, records: Iterable[tuple[TileKey, np.ndarray]]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for key, vec in records:
            f.write(json.dumps({
                "col": key.tile.col,
                "row": key.tile.row,
                "season": key.season.value,
                "embedding": [round(float(x), 8) for x in vec],
            }) + "\n")


def sample_proxy(visual_keys: Sequence[TileKey], n: int, seed: int) -> list[TileKey]:
    """Uniform sample without replacement, deterministic per seed, sorted output."""
    if n <= 0:
        raise InputError("sample size must be positive")
    if n > len(visual_keys):
        raise InputError(f"sample size {n} exceeds corpus size {len(visual_keys)}")
    ordered = sorted(visual_keys)
    rng = random.Random(seed)
    return sorted(rng.sample(ordered, n))


def _fixture_descriptions(path) -> dict[str, str]:
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as exc:
            raise FormatError(f"bad fixture file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise FormatError(f"fixture file {path} must be a JSON object")
    return data


def _remote_descriptions(oracle: DescribeOracle, keys: list[TileKey],
                         prompt: str | None) -> dict[str, str]:
    payload = {"keys": [key_to_text(k) for k in keys]}
    if prompt is not None:
        payload["prompt"] = prompt
    try:
        resp = httpx.post(oracle.endpoint_url, json=payload,
                          timeout=oracle.timeout_ms / 1000.0)
        resp.raise_for_status()
        body = resp.json()
    except (httpx.TransportError, httpx.HTTPStatusError) as exc:
        raise ProviderUnavailable(f"describe service unreachable: {exc}") from exc
    descriptions = body.get("descriptions")
    if not isinstance(descriptions, dict):
        raise ProviderUnavailable("malformed describe service response")
    return descriptions


def describe_and_embed(
    keys: Sequence[TileKey],
    oracle: DescribeOracle,
    provider: ProviderConfig,
    prompt: str | None = None,
) -> tuple[list[ProxyRecord], list[tuple[TileKey, Exception]]]:
    """Describe each tile and embed the description.

    Per-key failures are collected and returned alongside the successes so a
    long run over many tiles can be resumed rather than aborted.
    """
    keys = list(keys)
    if oracle.kind == "fixture":
        table = _fixture_descriptions(oracle.fixture_path)
    else:
        table = _remote_descriptions(oracle, keys, prompt)
    records: list[ProxyRecord] = []
    errors: list[tuple[TileKey, Exception]] = []
    described: list[tuple[TileKey, str]] = []
    for key in keys:
        text = table.get(key_to_text(key))
        if not text:
            errors.append((key, MissingDescriptionError(f"no description for {key}")))
        else:
            described.append((key, text))
    if described:
        vectors = embed_texts(provider, [t for _, t in described])
        for (key, text), vec in zip(described, vectors):
            records.append(ProxyRecord(key, text, vec))
    return records, errors


def save_proxy(path, records: Sequence[ProxyRecord], provider: str = "synthetic") -> None:
    if not records:
        raise InputError("no proxy records to save")
    dim = int(records[0].text_embedding.size)
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps({
            "format": PROXY_FORMAT,
            "version": PROXY_VERSION,
            "dim": dim,
            "provider": provider,
            "count": len(records),
        }) + "\n")
        for r in records:
            f.write(json.dumps({
                "col": r.key.tile.col,
                "row": r.key.tile.row,
                "season": r.key.season.value,
                "description": r.description,
                "text_embedding": [float(x) for x in r.text_embedding],
            }) + "\n")


def load_proxy(path) -> tuple[list[ProxyRecord], Index]:
    """Load proxy records and build the stage-1 text index over them."""
    with open(path, "r", encoding="utf-8") as f:
        lines = [ln for ln in (l.strip() for l in f) if ln]
    if not lines:
        raise FormatError("empty proxy file", offset=0)
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise FormatError(f"bad proxy header: {exc}", offset=0) from exc
    if not isinstance(header, dict) or header.get("format") != PROXY_FORMAT:
        raise FormatError("missing proxy format header", offset=0)
    if header.get("version") != PROXY_VERSION:
        raise VersionError(f"unsupported proxy version {header.get('version')}")
    dim = header.get("dim")
    count = header.get("count")
    records: list[ProxyRecord] = []
    seen: set[TileKey] = set()
    for ordinal, line in enumerate(lines[1:]):
        try:
            rec = json.loads(line)
            key = TileKey(TileId(int(rec["col"]), int(rec["row"])), Season(rec["season"]))
            desc = rec["description"]
            vec = as_vector(rec["text_embedding"], dim=dim)
        except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
            raise FormatError(f"bad proxy record: {exc}", offset=ordinal + 1) from exc
        if key in seen:
            raise DuplicateKeyError(f"duplicate proxy key {key} at record {ordinal}")
        seen.add(key)
        records.append(ProxyRecord(key, desc, vec))
    if count is not None and count != len(records):
        raise FormatError(
            f"header count {count} disagrees with {len(records)} records",
            offset=len(lines),
        )
    text_index = build_text_index(records)
    return records, text_index


def build_text_index(records: Sequence[ProxyRecord]) -> Index:
    from .index import IndexEntry, build

    return build([IndexEntry(r.key, r.text_embedding) for r in records])


def check_referential_integrity(records: Sequence[ProxyRecord], visual_index: Index) -> None:
    """Every proxy key must resolve in the global visual index."""
    for r in records:
        if visual_index.position_of(r.key) is None:
            raise InputError(f"proxy key {r.key} absent from visual corpus")
