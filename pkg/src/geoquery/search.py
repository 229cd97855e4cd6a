"""Two-stage retrieval: text kNN over proxies, visual kNN anchored on the hits.

Stage 1 embeds the query and finds the k_text closest proxy descriptions.
Stage 2 takes each hit's visual embedding as an anchor and finds its k_image
visual neighbours in the global index. Candidates score as
anchor_text_sim * visual_sim; duplicates keep the best-scoring anchor.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus import ProxyRecord
from .embedding import ProviderConfig, embed_text
from .errors import ConfigError, InputError, NotFoundError, NotReadyError
from .geo import Season, TileKey
from .index import Index, Neighbour


@dataclass(frozen=True)
class SearchConfig:
    """Named (k_text, k_image) preset for the two-stage pipeline."""

    name: str
    k_text: int
    k_image: int

    def __post_init__(self):
        if self.k_text < 1 or self.k_image < 1:
            raise InputError("k_text and k_image must be at least 1")


PRESETS: dict[str, SearchConfig] = {
    "balanced_large": SearchConfig("balanced_large", 15, 30),
    "baseline": SearchConfig("baseline", 10, 20),
    "text_focused": SearchConfig("text_focused", 20, 10),
    "image_focused": SearchConfig("image_focused", 5, 30),
}

_CUSTOM_RE = re.compile(r"^custom:(\d+):(\d+)$")


def resolve_config(name: str) -> SearchConfig:
    """Look up a preset or parse a "custom:KT:KI" spec."""
    if name in PRESETS:
        return PRESETS[name]
    m = _CUSTOM_RE.match(name)
    if m:
        return SearchConfig(name, int(m.group(1)), int(m.group(2)))
    valid = ", ".join(sorted(PRESETS)) + ", custom:KT:KI"
    raise ConfigError(f"unknown config {name!r}; valid: {valid}")


@dataclass(frozen=True)
class RankedTile:
    key: TileKey
    score: float
    anchor: TileKey
    anchor_text_sim: float
    visual_sim: float


@dataclass(frozen=True)
class QueryResult:
    query_text: str
    config: SearchConfig
    results: list[RankedTile]
    stage1_ms: float = 0.0
    stage2_ms: float = 0.0
    total_ms: float = 0.0
    anchors: list[Neighbour] = field(default_factory=list)


def fuse_candidates(
    candidates: Sequence[tuple[TileKey, TileKey, float, float]],
) -> list[RankedTile]:
    """Deduplicate (key, anchor, text_sim, visual_sim) tuples, keeping the max
    product score per key; drops non-positive visual similarities."""
    best: dict[tuple, RankedTile] = {}
    for key, anchor, text_sim, visual_sim in candidates:
        if visual_sim <= 0.0:
            continue
        score = text_sim * visual_sim
        k = key.sort_index
        prev = best.get(k)
        if prev is None or score > prev.score:
            best[k] = RankedTile(key, score, anchor, text_sim, visual_sim)
    ranked = sorted(best.values(), key=lambda r: (-r.score, r.key.sort_index))
    return ranked


def two_stage_query(
    query_text: str,
    config: SearchConfig,
    proxy_text_index: Index,
    proxy_records: Sequence[ProxyRecord],
    visual_index: Index,
    embed_provider: ProviderConfig,
    season: Season | None = None,
) -> QueryResult:
    """Run the full retrieve-then-rerank pipeline for one query."""
    if not query_text:
        raise InputError("query text must be non-empty")
    if len(proxy_records) == 0 or len(proxy_text_index) == 0:
        raise NotReadyError("proxy corpus is empty")
    t0 = time.perf_counter()
    query_vec = embed_text(embed_provider, query_text)
    anchors = proxy_text_index.knn(query_vec, config.k_text)
    t1 = time.perf_counter()
    candidates: list[tuple[TileKey, TileKey, float, float]] = []
    for anchor in anchors:
        anchor_vec = visual_index.get_vector(anchor.key)
        if anchor_vec is None:
            raise NotFoundError(f"anchor {anchor.key} missing from visual corpus")
        for nb in visual_index.knn(anchor_vec, config.k_image):
            if season is not None and nb.key.season != season:
                continue
            candidates.append((nb.key, anchor.key, anchor.score, nb.score))
    ranked = fuse_candidates(candidates)
    t2 = time.perf_counter()
    return QueryResult(
        query_text=query_text,
        config=config,
        results=ranked,
        stage1_ms=(t1 - t0) * 1000.0,
        stage2_ms=(t2 - t1) * 1000.0,
        total_ms=(t2 - t0) * 1000.0,
        anchors=anchors,
    )


def similar_by_tile(key: TileKey, k: int, visual_index: Index) -> list[Neighbour]:
    """Visual neighbours of a stored tile, excluding the tile itself."""
    if k <= 0:
        raise InputError("k must be positive")
    vec = visual_index.get_vector(key)
    if vec is None:
        raise NotFoundError(f"tile {key} not in visual corpus")
    hits = visual_index.knn(vec, k + 1)
    return [nb for nb in hits if nb.key != key][:k]


def query_result_to_dict(result: QueryResult, grid=None) -> dict:
    """JSON-ready form of a QueryResult; tile bounds included when a grid is given."""
    from .geo import tile_bounds, tile_centre

    def tile_fields(key: TileKey) -> dict:
        d = {"col": key.tile.col, "row": key.tile.row, "season": key.season.value}
        if grid is not None:
            lat0, lon0, lat1, lon1 = tile_bounds(grid, key.tile)
            centre = tile_centre(grid, key.tile)
            d["bounds"] = {"lat0": lat0, "lon0": lon0, "lat1": lat1, "lon1": lon1}
            d["centre"] = {"lat": centre.lat_deg, "lon": centre.lon_deg}
        return d

    return {
        "query_text": result.query_text,
        "config": {
            "name": result.config.name,
            "k_text": result.config.k_text,
            "k_image": result.config.k_image,
        },
        "results": [
            {
                **tile_fields(r.key),
                "score": r.score,
                "anchor": {
                    "col": r.anchor.tile.col,
                    "row": r.anchor.tile.row,
                    "season": r.anchor.season.value,
                },
                "anchor_text_sim": r.anchor_text_sim,
                "visual_sim": r.visual_sim,
            }
            for r in result.results
        ],
        "anchors": [
            {"col": a.key.tile.col, "row": a.key.tile.row,
             "season": a.key.season.value, "score": a.score}
            for a in result.anchors
        ],
        "stage1_ms": result.stage1_ms,
        "stage2_ms": result.stage2_ms,
        "total_ms": result.total_ms,
    }
