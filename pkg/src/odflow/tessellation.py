"""Spatial tessellations: square grids, polygon sets, point location, validation.

Coordinates are plain lon/lat degrees throughout; no projection is applied.
Tessellation values are immutable after construction and all operations
here are read-only, so they are safe to share across threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from shapely.geometry import Polygon as _ShapelyPolygon
from shapely.geometry import box as _shapely_box
from shapely.ops import unary_union

__all__ = [
    "AREA_EPSILON",
    "BoundingBox",
    "Tile",
    "Tessellation",
    "TessellationError",
    "ValidationReport",
    "OverlapViolation",
    "build_square_grid",
    "load_polygon_tessellation",
    "locate",
    "validate",
]

#: Default tolerance, in square degrees, for overlap and coverage checks.
#: Irregular administrative boundaries share edges with floating-point
#: jitter; anything below this is treated as exact adjacency.
AREA_EPSILON = 1e-9


class TessellationError(ValueError):
    """Raised for malformed tessellation inputs."""


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned rectangle in lon/lat degrees."""

    west: float
    south: float
    east: float
    north: float

    @property
    def width(self) -> float:
        return self.east - self.west

    @property
    def height(self) -> float:
        return self.north - self.south

    @property
    def area(self) -> float:
        return self.width * self.height

    def contains(self, lon: float, lat: float) -> bool:
        return self.west <= lon <= self.east and self.south <= lat <= self.north

    @staticmethod
    def of(value: "BoundingBox | tuple[float, float, float, float]") -> "BoundingBox":
        if isinstance(value, BoundingBox):
            return value
        west, south, east, north = value
        return BoundingBox(float(west), float(south), float(east), float(north))


@dataclass(frozen=True)
class Tile:
    """One cell of a tessellation.

    Grid tiles carry ``row``/``col`` and a bounding rectangle; polygon tiles
    carry a closed lon/lat ``ring`` (first vertex repeated at the end) and
    ``bounds`` is the ring's bounding box.
    """

    id: int
    name: str
    bounds: BoundingBox
    ring: tuple[tuple[float, float], ...] | None = None
    row: int | None = None
    col: int | None = None

    @property
    def is_polygon(self) -> bool:
        return self.ring is not None


@dataclass(frozen=True, eq=False)
class Tessellation:
    """A finite set of non-overlapping tiles covering a region."""

    region: BoundingBox
    tiles: tuple[Tile, ...]
    kind: str  # "regular-grid" | "irregular"
    cell_size: float | None = None
    nrows: int | None = None
    ncols: int | None = None
    _name_index: dict[str, int] = field(repr=False, default_factory=dict)

    def __post_init__(self):
        if len(self.tiles) < 1:
            raise TessellationError("a tessellation needs at least one tile")
        if not self._name_index:
            index = {tile.name: tile.id for tile in self.tiles}
            object.__setattr__(self, "_name_index", index)

    @property
    def n(self) -> int:
        return len(self.tiles)

    def index_of(self, name: str) -> int:
        """Tile index for a string tile identifier."""
        try:
            return self._name_index[name]
        except KeyError:
            raise KeyError(f"unknown tile identifier: {name!r}") from None

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(tile.name for tile in self.tiles)


def build_square_grid(region, cell_size: float) -> Tessellation:
    """Regular square grid over ``region`` with cells of ``cell_size`` degrees.

    Tile ids are row-major starting at the south-west corner.  The grid may
    overhang the region's east/north edge; overhanging cells are clipped to
    the region only for coverage accounting, never for point location.
    """
    region = BoundingBox.of(region)
    if not (cell_size > 0):
        raise TessellationError(f"cell_size must be positive, got {cell_size}")
    if not (region.width > 0 and region.height > 0):
        raise TessellationError(f"degenerate region: {region}")

    ncols = math.ceil(region.width / cell_size)
    nrows = math.ceil(region.height / cell_size)
    tiles = []
    for row in range(nrows):
        south = region.south + row * cell_size
        for col in range(ncols):
            west = region.west + col * cell_size
            tile_id = row * ncols + col
            tiles.append(
                Tile(
                    id=tile_id,
                    name=str(tile_id),
                    bounds=BoundingBox(west, south, west + cell_size, south + cell_size),
                    row=row,
                    col=col,
                )
            )
    return Tessellation(
        region=region,
        tiles=tuple(tiles),
        kind="regular-grid",
        cell_size=float(cell_size),
        nrows=nrows,
        ncols=ncols,
    )


def _ring_bounds(ring) -> BoundingBox:
    lons = [p[0] for p in ring]
    lats = [p[1] for p in ring]
    return BoundingBox(min(lons), min(lats), max(lons), max(lats))


def load_polygon_tessellation(geojson_document: str) -> Tessellation:
    """Load an irregular tessellation from a GeoJSON FeatureCollection.

    Only Polygon geometries without interior rings are accepted, and every
    feature must carry a unique string property named ``id``.  Tiles keep
    their order of first appearance; the region is the union bounding box.
    """
    try:
        doc = json.loads(geojson_document)
    except json.JSONDecodeError as exc:
        raise TessellationError(f"malformed GeoJSON document: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise TessellationError("document is not a GeoJSON FeatureCollection")
    features = doc.get("features")
    if not isinstance(features, list):
        raise TessellationError("FeatureCollection has no feature list")
    if not features:
        raise TessellationError("empty FeatureCollection: a tessellation needs at least one tile")

    tiles: list[Tile] = []
    seen: set[str] = set()
    for pos, feature in enumerate(features):
        if not isinstance(feature, dict) or feature.get("type") != "Feature":
            raise TessellationError(f"feature {pos} is not a GeoJSON Feature")
        geometry = feature.get("geometry") or {}
        if geometry.get("type") != "Polygon":
            raise TessellationError(
                f"feature {pos}: geometry type {geometry.get('type')!r} is not Polygon"
            )
        coords = geometry.get("coordinates")
        if not isinstance(coords, list) or len(coords) == 0:
            raise TessellationError(f"feature {pos}: polygon has no coordinate rings")
        if len(coords) > 1:
            raise TessellationError(f"feature {pos}: polygons with interior rings are unsupported")
        ring = [(float(p[0]), float(p[1])) for p in coords[0]]
        if len(ring) < 4 or ring[0] != ring[-1]:
            raise TessellationError(f"feature {pos}: polygon ring must be closed (first == last)")
        name = (feature.get("properties") or {}).get("id")
        if not isinstance(name, str):
            raise TessellationError(f"feature {pos}: string property 'id' is required")
        if name in seen:
            raise TessellationError(f"duplicate tile identifier: {name!r}")
        seen.add(name)
        tiles.append(
            Tile(id=len(tiles), name=name, bounds=_ring_bounds(ring), ring=tuple(ring))
        )

    region = BoundingBox(
        west=min(t.bounds.west for t in tiles),
        south=min(t.bounds.south for t in tiles),
        east=max(t.bounds.east for t in tiles),
        north=max(t.bounds.north for t in tiles),
    )
    return Tessellation(region=region, tiles=tuple(tiles), kind="irregular")


def _point_in_ring(ring, lon: float, lat: float) -> bool:
    # Even-odd rule on the closed boundary; boundary points count as inside.
    inside = False
    for k in range(len(ring) - 1):
        x1, y1 = ring[k]
        x2, y2 = ring[k + 1]
        if (
            min(x1, x2) <= lon <= max(x1, x2)
            and min(y1, y2) <= lat <= max(y1, y2)
            and (x2 - x1) * (lat - y1) == (y2 - y1) * (lon - x1)
        ):
            return True
        if (y1 > lat) != (y2 > lat):
            xcross = x1 + (lat - y1) * (x2 - x1) / (y2 - y1)
            if lon < xcross:
                inside = not inside
    return inside


def locate(tess: Tessellation, lon: float, lat: float) -> int | None:
    """Tile id containing a lon/lat point, or None when no tile does.

    Grid cells are left-closed/right-open in both axes, so a point on a
    shared edge belongs to the tile east/north of it and every point maps
    to at most one tile.  Irregular tessellations return the first tile
    (by id order) whose closed boundary contains the point.
    """
    if tess.kind == "regular-grid":
        cell = tess.cell_size
        col = math.floor((lon - tess.region.west) / cell)
        row = math.floor((lat - tess.region.south) / cell)
        if 0 <= col < tess.ncols and 0 <= row < tess.nrows:
            return row * tess.ncols + col
        return None
    for tile in tess.tiles:
        b = tile.bounds
        if not (b.west <= lon <= b.east and b.south <= lat <= b.north):
            continue
        if _point_in_ring(tile.ring, lon, lat):
            return tile.id
    return None


@dataclass(frozen=True)
class OverlapViolation:
    first: int
    second: int
    area: float


@dataclass
class ValidationReport:
    """Findings from checking the tessellation properties.

    ``issues`` holds structural problems (duplicate ids, invalid rings),
    ``overlaps`` the tile pairs whose interiors intersect by more than
    ``area_epsilon``, and ``coverage_gap`` the region area left uncovered.
    """

    area_epsilon: float
    issues: list[str] = field(default_factory=list)
    overlaps: list[OverlapViolation] = field(default_factory=list)
    coverage_gap: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.issues and not self.overlaps and self.coverage_gap <= self.area_epsilon

    def summary(self) -> str:
        if self.ok:
            return "valid tessellation"
        parts = list(self.issues)
        parts.extend(
            f"tiles {v.first} and {v.second} overlap by {v.area:.6g} sq deg" for v in self.overlaps
        )
        if self.coverage_gap > self.area_epsilon:
            parts.append(f"coverage gap of {self.coverage_gap:.6g} sq deg")
        return "; ".join(parts)


def _tile_shape(tile: Tile):
    if tile.is_polygon:
        return _ShapelyPolygon(tile.ring)
    b = tile.bounds
    return _shapely_box(b.west, b.south, b.east, b.north)


def _rect_clip_area(b: BoundingBox, region: BoundingBox) -> float:
    w = max(0.0, min(b.east, region.east) - max(b.west, region.west))
    h = max(0.0, min(b.north, region.north) - max(b.south, region.south))
    return w * h


def validate(tess: Tessellation, area_epsilon: float = AREA_EPSILON) -> ValidationReport:
    """Check the three tessellation properties and report every violation.

    Overlaps are pairwise interior intersections with area above
    ``area_epsilon``; the coverage gap is the region area not covered by
    the union of tiles clipped to the region.  Rectangle tiles are checked
    with exact interval arithmetic; polygon tiles through exact geometry
    predicates with the epsilon absorbing shared-edge jitter.
    """
    report = ValidationReport(area_epsilon=area_epsilon)
    tiles = tess.tiles

    ids = [t.id for t in tiles]
    if len(set(ids)) != len(ids):
        report.issues.append("duplicate tile ids")
    names = [t.name for t in tiles]
    if len(set(names)) != len(names):
        report.issues.append("duplicate tile identifiers")
    for tile in tiles:
        if tile.is_polygon:
            if not _ShapelyPolygon(tile.ring).is_valid:
                report.issues.append(f"tile {tile.id}: invalid polygon ring")
        elif not (tile.bounds.width > 0 and tile.bounds.height > 0):
            report.issues.append(f"tile {tile.id}: degenerate rectangle")

    # Pairwise overlap: numpy bbox prefilter (strict, so exact shared edges
    # never become candidates), then exact rect math or shapely areas.
    n = len(tiles)
    west = np.array([t.bounds.west for t in tiles])
    south = np.array([t.bounds.south for t in tiles])
    east = np.array([t.bounds.east for t in tiles])
    north = np.array([t.bounds.north for t in tiles])
    shapes: dict[int, object] = {}

    def shape(i: int):
        if i not in shapes:
            shapes[i] = _tile_shape(tiles[i])
        return shapes[i]

    for i in range(n - 1):
        j = np.arange(i + 1, n)
        cand = j[
            (np.minimum(east[i], east[j]) > np.maximum(west[i], west[j]))
            & (np.minimum(north[i], north[j]) > np.maximum(south[i], south[j]))
        ]
        for jj in cand:
            jj = int(jj)
            if tiles[i].is_polygon or tiles[jj].is_polygon:
                area = shape(i).intersection(shape(jj)).area
            else:
                bi, bj = tiles[i].bounds, tiles[jj].bounds
                area = (min(bi.east, bj.east) - max(bi.west, bj.west)) * (
                    min(bi.north, bj.north) - max(bi.south, bj.south)
                )
            if area > area_epsilon:
                report.overlaps.append(OverlapViolation(tiles[i].id, tiles[jj].id, float(area)))

    # Coverage: with disjoint interiors the union area is the sum of the
    # per-tile clipped areas; with overlaps fall back to a true union.
    region = tess.region
    region_box = _shapely_box(region.west, region.south, region.east, region.north)
    if report.overlaps:
        clipped = [_tile_shape(t).intersection(region_box) for t in tiles]
        covered = unary_union(clipped).area
    else:
        covered = math.fsum(
            _ShapelyPolygon(t.ring).intersection(region_box).area
            if t.is_polygon
            else _rect_clip_area(t.bounds, region)
            for t in tiles
        )
    report.coverage_gap = max(0.0, region.area - covered)
    return report
