"""HTTP service over loaded corpora: query, similarity, tile metadata, configs.

All endpoints are read-only; corpora load once at startup and never mutate.
Errors share one body shape: {"error_code": ..., "message": ...}.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .embedding import ProviderConfig
from .engine import Engine
from .errors import (
    ConfigError,
    GeoQueryError,
    InputError,
    NotFoundError,
    NotReadyError,
    ProviderUnavailable,
)
from .geo import GridSpec, Season, TileId, TileKey, tile_bounds, tile_centre
from .search import PRESETS, query_result_to_dict, resolve_config, similar_by_tile

_STATUS = {
    "InputError": 400,
    "ConfigError": 400,
    "DimensionError": 400,
    "NotFoundError": 404,
    "NotReadyError": 503,
    "ProviderUnavailable": 503,
}


@dataclass
class ServiceConfig:
    listen_addr: str = "127.0.0.1:8000"
    visual_index_path: str = ""
    proxy_path: str = ""
    grid: GridSpec = field(default_factory=GridSpec)
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    default_config_name: str = "balanced_large"
    cors_allowed_origins: list[str] = field(default_factory=lambda: ["*"])

    @classmethod
    def from_file(cls, path) -> "ServiceConfig":
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
        provider_raw = raw.get("provider", {})
        cfg = cls(
            listen_addr=raw.get("listen_addr", "127.0.0.1:8000"),
            visual_index_path=raw.get("visual_index_path", ""),
            proxy_path=raw.get("proxy_path", ""),
            grid=GridSpec(raw.get("tile_size_deg", 0.046)),
            provider=ProviderConfig(
                kind=provider_raw.get("kind", "synthetic"),
                dim=provider_raw.get("dim", 64),
                endpoint_url=provider_raw.get("endpoint_url"),
                timeout_ms=provider_raw.get("timeout_ms", 10_000),
                seed=provider_raw.get("seed", 0),
            ),
            default_config_name=raw.get("default_config_name", "balanced_large"),
            cors_allowed_origins=raw.get("cors_allowed_origins", ["*"]),
        )
        return cfg.with_env_overrides()

    def with_env_overrides(self) -> "ServiceConfig":
        addr = os.environ.get("GEOQUERY_LISTEN_ADDR")
        if addr:
            self.listen_addr = addr
        url = os.environ.get("GEOQUERY_PROVIDER_URL")
        if url:
            self.provider = ProviderConfig(
                kind="remote", dim=self.provider.dim, endpoint_url=url,
                timeout_ms=self.provider.timeout_ms,
            )
        return self


def _error_response(exc: GeoQueryError) -> JSONResponse:
    status = _STATUS.get(exc.code, 500)
    return JSONResponse(status_code=status,
                        content={"error_code": exc.code, "message": str(exc)})


def create_app(engine: Engine | None, config: ServiceConfig | None = None) -> FastAPI:
    """Build the FastAPI app; a None engine serves 503 until corpora exist."""
    config = config or ServiceConfig()
    app = FastAPI(title="geoquery", version="1")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=config.cors_allowed_origins,
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(GeoQueryError)
    async def handle_domain_error(request: Request, exc: GeoQueryError):
        return _error_response(exc)

    @app.exception_handler(Exception)
    async def handle_unexpected(request: Request, exc: Exception):
        return JSONResponse(status_code=500, content={
            "error_code": "InternalError", "message": "internal error",
        })

    def require_engine() -> Engine:
        if engine is None:
            raise NotReadyError("no corpus loaded")
        return engine

    @app.get("/v1/health")
    async def health():
        if engine is None:
            return _error_response(NotReadyError("no corpus loaded"))
        return {
            "status": "ok",
            "visual_count": len(engine.visual_index),
            "proxy_count": len(engine.proxy_records),
            "visual_dim": engine.visual_index.dim,
            "text_dim": engine.proxy_text_index.dim,
            "backend": engine.visual_index.params.backend,
            "default_config": config.default_config_name,
        }

    @app.get("/v1/configs")
    async def configs():
        return {
            "configs": [
                {"name": c.name, "k_text": c.k_text, "k_image": c.k_image}
                for c in PRESETS.values()
            ]
        }

    @app.post("/v1/query")
    async def query(body: dict):
        eng = require_engine()
        text = body.get("text", "")
        if not isinstance(text, str) or not text.strip():
            raise InputError("query text must be a non-empty string")
        cfg = resolve_config(body.get("config") or config.default_config_name)
        season = None
        if body.get("season"):
            try:
                season = Season(body["season"])
            except ValueError:
                raise InputError(f"unknown season {body['season']!r}")
        result = eng.query(text, cfg, season=season)
        top_n = body.get("top_n")
        if top_n is not None:
            if not isinstance(top_n, int) or top_n <= 0:
                raise InputError("top_n must be a positive integer")
            import dataclasses

            result = dataclasses.replace(result, results=result.results[:top_n])
        return query_result_to_dict(result, grid=eng.grid)

    @app.post("/v1/similar")
    async def similar(body: dict):
        eng = require_engine()
        try:
            key = TileKey(TileId(int(body["col"]), int(body["row"])),
                          Season(body["season"]))
        except (KeyError, ValueError, TypeError) as exc:
            raise InputError(f"bad tile key: {exc}")
        k = body.get("k", 10)
        if not isinstance(k, int) or k <= 0:
            raise InputError("k must be a positive integer")
        neighbours = similar_by_tile(key, k, eng.visual_index)
        return {
            "neighbours": [
                {
                    "col": nb.key.tile.col,
                    "row": nb.key.tile.row,
                    "season": nb.key.season.value,
                    "score": nb.score,
                    "bounds": _bounds_dict(eng.grid, nb.key),
                    "centre": _centre_dict(eng.grid, nb.key),
                }
                for nb in neighbours
            ]
        }

    @app.get("/v1/tiles/{col}/{row}")
    async def tile_info(col: int, row: int):
        eng = require_engine()
        tile = TileId(col, row)
        seasons = [
            s for s in Season
            if eng.visual_index.position_of(TileKey(tile, s)) is not None
        ]
        if not seasons:
            raise NotFoundError(f"tile ({col}, {row}) not in corpus")
        lat0, lon0, lat1, lon1 = tile_bounds(eng.grid, tile)
        centre = tile_centre(eng.grid, tile)
        descriptions = {
            s.value: d
            for s in seasons
            if (d := eng.proxy_description(TileKey(tile, s))) is not None
        }
        return {
            "col": col,
            "row": row,
            "bounds": {"lat0": lat0, "lon0": lon0, "lat1": lat1, "lon1": lon1},
            "centre": {"lat": centre.lat_deg, "lon": centre.lon_deg},
            "seasons": [s.value for s in seasons],
            "descriptions": descriptions,
        }

    return app


def _bounds_dict(grid, key: TileKey) -> dict:
    lat0, lon0, lat1, lon1 = tile_bounds(grid, key.tile)
    return {"lat0": lat0, "lon0": lon0, "lat1": lat1, "lon1": lon1}


def _centre_dict(grid, key: TileKey) -> dict:
    c = tile_centre(grid, key.tile)
    return {"lat": c.lat_deg, "lon": c.lon_deg}


def serve(config: ServiceConfig) -> None:
    """Load corpora and run the HTTP server (blocking)."""
    import uvicorn

    engine = Engine.load(config.visual_index_path, config.proxy_path,
                         grid=config.grid, provider=config.provider)
    host, _, port = config.listen_addr.partition(":")
    app = create_app(engine, config)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000))
