"""Geographic grid definition, cell indexing, coarsening and distance math.

Conventions
- Latitudes in degrees north, longitudes in degrees east normalized to
  [0, 360). Row 0 of a grid is the southernmost row (``dlat`` > 0 walks
  north), column 0 the westernmost.
- Cell (row, col) is centered at (lat0 + row*dlat, lon0 + col*dlon).
- Distances use the haversine formula with a fixed mean Earth radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime
from typing import Iterable

import numpy as np

from .errors import ConfigError, DimensionError, OutOfBasinError

EARTH_RADIUS_KM = 6371.0
KM_PER_DEG = EARTH_RADIUS_KM * math.pi / 180.0  # 111.1949... km per degree of arc

# Basin bounds: northern hemisphere, 30..100 degrees east.
BASIN_LON_MIN = 30.0
BASIN_LON_MAX = 100.0

# Slack (in cells) allowed when snapping a point just outside the grid edge.
_EDGE_TOL = 1e-9


@dataclass(frozen=True)
class GeoPoint:
    """A latitude/longitude pair; lon is normalized to [0, 360)."""

    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not -90.0 < self.lat < 90.0:
            raise ConfigError(f"latitude {self.lat} outside (-90, 90)")
        object.__setattr__(self, "lon", self.lon % 360.0)


@dataclass(frozen=True)
class GridSpec:
    """A regular lat/lon grid given by the center of cell (0, 0) and spacings."""

    lat0: float
    lon0: float
    dlat: float = 1.0
    dlon: float = 1.0
    height: int = 32
    width: int = 56

    def __post_init__(self) -> None:
        if self.height < 4 or self.width < 4:
            raise ConfigError("grid must be at least 4x4")
        if self.dlat <= 0 or self.dlon <= 0:
            raise ConfigError("dlat and dlon must be positive")
        # Northern-hemisphere basin: no cell center south of the equator.
        if self.lat0 < 0:
            raise ConfigError("row-0 center latitude must be >= 0")
        if self.lat0 + (self.height - 1) * self.dlat >= 90.0:
            raise ConfigError("grid extends to or beyond the pole")

    @property
    def n_cells(self) -> int:
        return self.height * self.width

    def lat_of_row(self, row: int | np.ndarray) -> float | np.ndarray:
        return self.lat0 + row * self.dlat

    def lon_of_col(self, col: int | np.ndarray) -> float | np.ndarray:
        return self.lon0 + col * self.dlon

    def center_mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """(lat, lon) arrays of shape (height, width) holding all cell centers."""
        lat = self.lat_of_row(np.arange(self.height, dtype=np.float64))
        lon = self.lon_of_col(np.arange(self.width, dtype=np.float64))
        return np.broadcast_to(lat[:, None], (self.height, self.width)).copy(), \
            np.broadcast_to(lon[None, :], (self.height, self.width)).copy()


#: 32 x 56 = 1792 cells at one degree, columns covering 44..99 E.
DEFAULT_GRID = GridSpec(lat0=0.0, lon0=44.0, dlat=1.0, dlon=1.0, height=32, width=56)


@dataclass(frozen=True)
class CellIndex:
    """A grid cell identified by (row, col) and its row-major flat index."""

    row: int
    col: int
    flat: int

    @classmethod
    def from_rc(cls, row: int, col: int, grid: GridSpec) -> "CellIndex":
        if not (0 <= row < grid.height and 0 <= col < grid.width):
            raise ConfigError(f"cell ({row}, {col}) outside {grid.height}x{grid.width} grid")
        return cls(row, col, row * grid.width + col)

    @classmethod
    def from_flat(cls, flat: int, grid: GridSpec) -> "CellIndex":
        if not 0 <= flat < grid.n_cells:
            raise ConfigError(f"flat index {flat} outside [0, {grid.n_cells})")
        return cls(flat // grid.width, flat % grid.width, flat)


def _round_half_away(x: float) -> int:
    """Round to nearest integer, ties away from zero."""
    return math.floor(x + 0.5) if x >= 0 else math.ceil(x - 0.5)


def cell_index(p: GeoPoint, grid: GridSpec) -> CellIndex:
    """Map a point to the nearest grid cell.

    Points up to half a cell outside the grid's bounding box are clamped to
    the edge cell; anything farther raises OutOfBasinError.
    """
    rx = (p.lat - grid.lat0) / grid.dlat
    cx = (p.lon - grid.lon0) / grid.dlon
    if rx < -0.5 - _EDGE_TOL or rx > grid.height - 0.5 + _EDGE_TOL:
        raise OutOfBasinError(f"latitude {p.lat} more than half a cell outside the grid")
    if cx < -0.5 - _EDGE_TOL or cx > grid.width - 0.5 + _EDGE_TOL:
        raise OutOfBasinError(f"longitude {p.lon} more than half a cell outside the grid")
    row = min(max(_round_half_away(rx), 0), grid.height - 1)
    col = min(max(_round_half_away(cx), 0), grid.width - 1)
    return CellIndex.from_rc(row, col, grid)


def cell_center(c: CellIndex, grid: GridSpec) -> GeoPoint:
    """Geographic center of a cell; inverse of cell_index on cell centers."""
    if not (0 <= c.row < grid.height and 0 <= c.col < grid.width):
        raise ConfigError(f"cell {c} invalid for {grid.height}x{grid.width} grid")
    return GeoPoint(lat=float(grid.lat_of_row(c.row)), lon=float(grid.lon_of_col(c.col)))


def coarsen(field: np.ndarray, factor: int) -> np.ndarray:
    """Block-mean a 2-D field by an integer factor.

    The mean (rather than subsampling) preserves large-scale structure and
    conserves the global mean exactly.
    """
    if factor < 1 or int(factor) != factor:
        raise DimensionError(f"coarsening factor must be a positive integer, got {factor}")
    field = np.asarray(field, dtype=np.float64)
    if field.ndim != 2:
        raise DimensionError(f"expected a 2-D field, got shape {field.shape}")
    h, w = field.shape
    if h % factor or w % factor:
        raise DimensionError(f"dims {h}x{w} not divisible by factor {factor}")
    return field.reshape(h // factor, factor, w // factor, factor).mean(axis=(1, 3))


def snap_filter(timestamps: Iterable[datetime]) -> list[datetime]:
    """Keep only timestamps lying on a whole 3-hour boundary, order preserved."""
    return [
        t for t in timestamps
        if t.hour % 3 == 0 and t.minute == 0 and t.second == 0 and t.microsecond == 0
    ]


def in_basin(p: GeoPoint) -> bool:
    """True iff the point is north of the equator and within 30..100 E."""
    return p.lat > 0.0 and BASIN_LON_MIN <= p.lon <= BASIN_LON_MAX


def great_circle_km(a: GeoPoint, b: GeoPoint) -> float:
    """Haversine distance in km."""
    la1, la2 = math.radians(a.lat), math.radians(b.lat)
    dla = la2 - la1
    dlo = math.radians(b.lon - a.lon)
    s = math.sin(dla / 2.0) ** 2 + math.cos(la1) * math.cos(la2) * math.sin(dlo / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(s)))


def distance_field_km(grid: GridSpec, p: GeoPoint) -> np.ndarray:
    """Haversine distance from every cell center to ``p``, shape (height, width)."""
    lat, lon = grid.center_mesh()
    la1 = np.radians(lat)
    la2 = math.radians(p.lat)
    dla = la2 - la1
    dlo = np.radians(p.lon - lon)
    s = np.sin(dla / 2.0) ** 2 + np.cos(la1) * math.cos(la2) * np.sin(dlo / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.minimum(1.0, np.sqrt(s)))
