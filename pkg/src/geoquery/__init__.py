"""geoquery: two-stage cross-modal retrieval over gridded geospatial embeddings.

Natural-language queries hit a text index over a described proxy subset of
tiles; the proxy hits then anchor a visual nearest-neighbour search over the
full corpus. Includes the rank-correlation alignment scorer and the
disaster-geolocation evaluation harness.
"""

from .embedding import ProviderConfig, cosine_similarity, embed_text, l2_normalize
from .engine import Engine
from .geo import GeoPoint, GridSpec, Season, TileId, TileKey, haversine_km, tile_centre, tile_of
from .index import Index, IndexEntry, IndexParams, Neighbour, build
from .search import PRESETS, SearchConfig, resolve_config, similar_by_tile, two_stage_query

__version__ = "0.1.0"

__all__ = [
    "Engine",
    "GeoPoint",
    "GridSpec",
    "Index",
    "IndexEntry",
    "IndexParams",
    "Neighbour",
    "PRESETS",
    "ProviderConfig",
    "SearchConfig",
    "Season",
    "TileId",
    "TileKey",
    "build",
    "cosine_similarity",
    "embed_text",
    "haversine_km",
    "l2_normalize",
    "resolve_config",
    "similar_by_tile",
    "tile_centre",
    "tile_of",
    "two_stage_query",
]
