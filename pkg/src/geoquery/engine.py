"""Loaded-corpora bundle shared by the service and the CLI."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .corpus import ProxyRecord, check_referential_integrity, load_proxy
from .embedding import ProviderConfig
from .errors import NotReadyError
from .geo import GeoPoint, GridSpec, Season, TileKey
from .index import Index
from .search import QueryResult, SearchConfig, two_stage_query


@dataclass
class Engine:
    grid: GridSpec
    provider: ProviderConfig
    visual_index: Index
    proxy_records: list[ProxyRecord]
    proxy_text_index: Index

    @classmethod
    def load(cls, visual_index_path, proxy_path,
             grid: GridSpec = GridSpec(),
             provider: ProviderConfig | None = None) -> "Engine":
        for p in (visual_index_path, proxy_path):
            if not Path(p).exists():
                raise NotReadyError(f"corpus file {p} does not exist")
        visual_index = Index.load(visual_index_path)
        proxy_records, proxy_text_index = load_proxy(proxy_path)
        check_referential_integrity(proxy_records, visual_index)
        if provider is None:
            provider = ProviderConfig(kind="synthetic", dim=proxy_text_index.dim)
        return cls(grid, provider, visual_index, proxy_records, proxy_text_index)

    def query(self, text: str, config: SearchConfig,
              season: Season | None = None) -> QueryResult:
        return two_stage_query(text, config, self.proxy_text_index,
                               self.proxy_records, self.visual_index,
                               self.provider, season=season)

    def proxy_description(self, key: TileKey) -> str | None:
        for r in self.proxy_records:
            if r.key == key:
                return r.description
        return None
