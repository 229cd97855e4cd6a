"""Planted-cluster synthetic world generator.

Desk-scale stand-in for a global corpus: a handful of cluster prototypes on
the embedding sphere, each pinned to a geographic centre with its own made-up
vocabulary. Tiles inherit a noisy copy of their cluster's visual prototype;
proxy descriptions are sentences drawn from the cluster vocabulary. Cluster
membership doubles as retrieval ground truth.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import (
    ProxyRecord,
    key_to_text,
    sample_proxy,
    save_proxy,
    write_manifest,
)
from .embedding import ProviderConfig, embed_texts, l2_normalize
from .errors import InputError
from .geo import GeoPoint, GridSpec, Season, TileKey, tile_of

FILLER_WORDS = ["the", "with", "near", "wide", "open", "area", "zone"]
VISUAL_NOISE = 0.35
CLUSTER_SPREAD_DEG = 0.5
WORDS_PER_CLUSTER = 8


@dataclass(frozen=True)
class SynthWorld:
    grid: GridSpec
    visual_records: list[tuple[TileKey, np.ndarray]]
    proxy_records: list[ProxyRecord]
    membership: dict[TileKey, int]
    cluster_centres: list[GeoPoint]
    cluster_vocab: list[list[str]]

    def cluster_members(self, cluster: int) -> set[TileKey]:
        return {k for k, c in self.membership.items() if c == cluster}

    def query_text_for(self, cluster: int, rng: np.random.Generator) -> str:
        words = rng.choice(self.cluster_vocab[cluster], size=3, replace=False)
        return " ".join(words)


def _random_word(rng: np.random.Generator, n_letters: int) -> str:
    letters = rng.choice(list(string.ascii_lowercase), size=n_letters)
    return "".join(letters)


def _make_vocab(rng: np.random.Generator, n_clusters: int) -> list[list[str]]:
    vocab: list[list[str]] = []
    seen: set[str] = set(FILLER_WORDS)
    for _ in range(n_clusters):
        words: list[str] = []
        while len(words) < WORDS_PER_CLUSTER:
            w = _random_word(rng, int(rng.integers(5, 9)))
            if w not in seen:
                seen.add(w)
                words.append(w)
        vocab.append(words)
    return vocab


def generate_world(
    n_tiles: int,
    dim: int,
    n_clusters: int,
    seed: int,
    grid: GridSpec = GridSpec(),
    proxy_fraction: float = 0.1,
    provider: ProviderConfig | None = None,
) -> SynthWorld:
    """Build the synthetic world in memory."""
    if n_tiles < n_clusters or n_clusters < 1 or dim < 2:
        raise InputError("need n_tiles >= n_clusters >= 1 and dim >= 2")
    if not (0.0 < proxy_fraction <= 1.0):
        raise InputError("proxy_fraction must be in (0, 1]")
    rng = np.random.default_rng(seed)
    if provider is None:
        provider = ProviderConfig(kind="synthetic", dim=dim, seed=seed)

    prototypes = [l2_normalize(rng.standard_normal(dim).astype(np.float32))
                  for _ in range(n_clusters)]
    centres = [
        GeoPoint(float(rng.uniform(-60, 60)), float(rng.uniform(-170, 170)))
        for _ in range(n_clusters)
    ]
    vocab = _make_vocab(rng, n_clusters)

    seasons = list(Season)
    visual_records: list[tuple[TileKey, np.ndarray]] = []
    membership: dict[TileKey, int] = {}
    used: set[TileKey] = set()
    for i in range(n_tiles):
        c = i % n_clusters
        for _ in range(1000):
            lat = float(np.clip(centres[c].lat_deg + rng.uniform(-CLUSTER_SPREAD_DEG,
                                                                 CLUSTER_SPREAD_DEG), -90, 89.999))
            lon = float(centres[c].lon_deg + rng.uniform(-CLUSTER_SPREAD_DEG,
                                                         CLUSTER_SPREAD_DEG))
            lon = ((lon + 180.0) % 360.0) - 180.0
            key = TileKey(tile_of(grid, GeoPoint(lat, lon)),
                          seasons[int(rng.integers(4))])
            if key not in used:
                break
        else:
            raise InputError("could not place a unique tile; grid too coarse for n_tiles")
        used.add(key)
        vec = prototypes[c] + VISUAL_NOISE * rng.standard_normal(dim).astype(np.float32)
        visual_records.append((key, l2_normalize(vec)))
        membership[key] = c

    n_proxy = max(n_clusters * 5, int(round(proxy_fraction * n_tiles)))
    n_proxy = min(n_proxy, n_tiles)
    proxy_keys = sample_proxy([k for k, _ in visual_records], n_proxy, seed)
    descriptions: list[str] = []
    for key in proxy_keys:
        c = membership[key]
        words = list(rng.choice(vocab[c], size=4, replace=False))
        words.insert(int(rng.integers(len(words))), FILLER_WORDS[int(rng.integers(len(FILLER_WORDS)))])
        descriptions.append(" ".join(words))
    text_vecs = embed_texts(provider, descriptions)
    proxy_records = [
        ProxyRecord(key, desc, vec)
        for key, desc, vec in zip(proxy_keys, descriptions, text_vecs)
    ]
    return SynthWorld(grid, visual_records, proxy_records, membership, centres, vocab)


def make_queries(world: SynthWorld, n_queries: int, seed: int) -> list[dict]:
    """Ground-truthed queries: cluster vocabulary text, cluster centre as truth."""
    rng = np.random.default_rng(seed)
    queries = []
    n_clusters = len(world.cluster_centres)
    for q in range(n_queries):
        c = q % n_clusters
        queries.append({
            "id": f"synth-{q:04d}",
            "query_text": world.query_text_for(c, rng),
            "truth": {"lat": world.cluster_centres[c].lat_deg,
                      "lon": world.cluster_centres[c].lon_deg},
            "category": "Other",
            "cluster": c,
        })
    return queries


def write_world(world: SynthWorld, out_dir, n_queries: int = 50, seed: int = 0) -> dict:
    """Persist manifest, proxy corpus, query set, and ground truth under out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest_path = out / "visual_manifest.ndjson"
    proxy_path = out / "proxy.ndjson"
    queries_path = out / "queries.json"
    truth_path = out / "clusters.json"
    write_manifest(manifest_path, world.visual_records)
    save_proxy(proxy_path, world.proxy_records)
    with open(queries_path, "w", encoding="utf-8") as f:
        json.dump({"queries": make_queries(world, n_queries, seed)}, f, indent=1)
    with open(truth_path, "w", encoding="utf-8") as f:
        json.dump({
            "membership": {key_to_text(k): c for k, c in sorted(
                world.membership.items(), key=lambda kv: kv[0].sort_index)},
            "centres": [{"lat": p.lat_deg, "lon": p.lon_deg}
                        for p in world.cluster_centres],
            "vocab": world.cluster_vocab,
        }, f, indent=1)
    return {
        "manifest": str(manifest_path),
        "proxy": str(proxy_path),
        "queries": str(queries_path),
        "clusters": str(truth_path),
    }
