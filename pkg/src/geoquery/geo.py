"""Global equal-angle tile grid and great-circle distance.

Tiles are cells of a plate carree grid covering the whole globe. The default
cell size of 0.046 degrees is roughly 5.12 km at the equator. Cells use
half-open bounds so every point belongs to exactly one cell; the poles and
the antimeridian are folded onto the nearest valid cell.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import InputError

EARTH_RADIUS_KM = 6371.0088  # IUGG mean radius


class Season(enum.Enum):
    """Calendar quarter a tile's seasonal embedding was computed from."""

    Q1 = "Q1"
    Q2 = "Q2"
    Q3 = "Q3"
    Q4 = "Q4"

    @property
    def index(self) -> int:
        return {"Q1": 0, "Q2": 1, "Q3": 2, "Q4": 3}[self.value]

    @classmethod
    def from_index(cls, i: int) -> "Season":
        return [cls.Q1, cls.Q2, cls.Q3, cls.Q4][i]


@dataclass(frozen=True)
class GeoPoint:
    """A point on the sphere in degrees; longitude normalised into [-180, 180)."""

    lat_deg: float
    lon_deg: float

    def __post_init__(self):
        if not (math.isfinite(self.lat_deg) and math.isfinite(self.lon_deg)):
            raise InputError("coordinates must be finite")
        if not -90.0 <= self.lat_deg <= 90.0:
            raise InputError(f"latitude {self.lat_deg} outside [-90, 90]")
        lon = self.lon_deg
        if not -180.0 <= lon <= 180.0:
            raise InputError(f"longitude {lon} outside [-180, 180]")
        if lon == 180.0:
            object.__setattr__(self, "lon_deg", -180.0)


@dataclass(frozen=True, order=True)
class TileId:
    """Integer cell indices into the equal-angle grid (column then row)."""

    col: int
    row: int

    def __post_init__(self):
        if self.col < 0 or self.row < 0:
            raise InputError("tile indices must be non-negative")


@dataclass(frozen=True)
class TileKey:
    """Retrieval unit: one grid cell in one season.

    Orders by (col, row, season); this is the tie-break order used everywhere
    results must be deterministic.
    """

    tile: TileId
    season: Season

    @property
    def sort_index(self) -> tuple[int, int, int]:
        return (self.tile.col, self.tile.row, self.season.index)

    def __lt__(self, other: "TileKey") -> bool:
        return self.sort_index < other.sort_index

    def __le__(self, other: "TileKey") -> bool:
        return self.sort_index <= other.sort_index

    def __repr__(self):
        return f"TileKey({self.tile.col}, {self.tile.row}, {self.season.value})"


@dataclass(frozen=True)
class GridSpec:
    """Grid parameterisation; only the angular cell size is free."""

    tile_size_deg: float = 0.046

    def __post_init__(self):
        if not (0.0 < self.tile_size_deg <= 10.0):
            raise InputError("tile_size_deg must be in (0, 10]")

    @property
    def n_cols(self) -> int:
        return math.ceil(360.0 / self.tile_size_deg)

    @property
    def n_rows(self) -> int:
        return math.ceil(180.0 / self.tile_size_deg)


def tile_of(grid: GridSpec, p: GeoPoint) -> TileId:
    """Map a point to the unique cell whose half-open bounds contain it.

    lat = +90 maps to the top row rather than overflowing the grid.
    """
    sz = grid.tile_size_deg
    col = int(math.floor((p.lon_deg + 180.0) / sz))
    row = int(math.floor((p.lat_deg + 90.0) / sz))
    col = min(col, grid.n_cols - 1)
    row = min(row, grid.n_rows - 1)
    return TileId(col, row)


def tile_bounds(grid: GridSpec, t: TileId) -> tuple[float, float, float, float]:
    """Return (lat0, lon0, lat1, lon1) for a cell, raising on out-of-range ids."""
    if t.col >= grid.n_cols or t.row >= grid.n_rows:
        raise InputError(f"tile {t} outside grid extent {grid.n_cols}x{grid.n_rows}")
    sz = grid.tile_size_deg
    lon0 = -180.0 + t.col * sz
    lat0 = -90.0 + t.row * sz
    return lat0, lon0, min(lat0 + sz, 90.0), min(lon0 + sz, 180.0)


def tile_centre(grid: GridSpec, t: TileId) -> GeoPoint:
    """Midpoint of a cell; round-trips through tile_of."""
    lat0, lon0, lat1, lon1 = tile_bounds(grid, t)
    return GeoPoint((lat0 + lat1) / 2.0, (lon0 + lon1) / 2.0)


def haversine_km(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in kilometres on the mean-radius sphere."""
    lat1, lon1 = math.radians(a.lat_deg), math.radians(a.lon_deg)
    lat2, lon2 = math.radians(b.lat_deg), math.radians(b.lon_deg)
    dlat = lat2 - lat1
    dlon = lon2 - lon1
    s = math.sin(dlat / 2.0) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2.0) ** 2
    return EARTH_RADIUS_KM * 2.0 * math.asin(min(1.0, math.sqrt(s)))
