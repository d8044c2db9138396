from __future__ import annotations

import json
import math
import time

import numpy as np
import pytest

from odflow.tessellation import (
    BoundingBox,
    TessellationError,
    Tile,
    Tessellation,
    build_square_grid,
    load_polygon_tessellation,
    locate,
    validate,
)


def square_feature(name, west, south, size=1.0):
    ring = [
        [west, south],
        [west + size, south],
        [west + size, south + size],
        [west, south + size],
        [west, south],
    ]
    return {
        "type": "Feature",
        "properties": {"id": name},
        "geometry": {"type": "Polygon", "coordinates": [ring]},
    }


def collection(*features):
    return json.dumps({"type": "FeatureCollection", "features": list(features)})


def test_grid_exact_division():
    tess = build_square_grid((0.0, 0.0, 2.0, 2.0), 1.0)
    assert tess.n == 4
    assert [t.id for t in tess.tiles] == [0, 1, 2, 3]
    assert tess.kind == "regular-grid"


def test_grid_single_cell_equals_region():
    tess = build_square_grid((0.0, 0.0, 1.0, 1.0), 1.0)
    assert tess.n == 1
    b = tess.tiles[0].bounds
    assert (b.west, b.south, b.east, b.north) == (0.0, 0.0, 1.0, 1.0)


def test_grid_overhang_uses_ceil():
    tess = build_square_grid((0.0, 0.0, 2.5, 1.0), 1.0)
    assert tess.n == 3
    assert tess.ncols == 3 and tess.nrows == 1
    # Easternmost tile overhangs the region.
    assert tess.tiles[2].bounds.east == pytest.approx(3.0)


def test_grid_row_major_from_south_west():
    tess = build_square_grid((0.0, 0.0, 2.0, 2.0), 1.0)
    sw = tess.tiles[0]
    assert (sw.row, sw.col) == (0, 0)
    assert (sw.bounds.west, sw.bounds.south) == (0.0, 0.0)
    ne = tess.tiles[3]
    assert (ne.row, ne.col) == (1, 1)


def test_grid_rejects_bad_inputs():
    with pytest.raises(TessellationError):
        build_square_grid((0.0, 0.0, 2.0, 2.0), 0.0)
    with pytest.raises(TessellationError):
        build_square_grid((0.0, 0.0, 2.0, 2.0), -1.0)
    with pytest.raises(TessellationError):
        build_square_grid((0.0, 0.0, 0.0, 2.0), 1.0)


def test_grid_tile_count_matches_ceil_formula():
    rng = np.random.default_rng(11)
    for _ in range(50):
        width = float(rng.uniform(0.5, 10.0))
        height = float(rng.uniform(0.5, 10.0))
        cell = float(rng.uniform(0.1, 3.0))
        tess = build_square_grid((0.0, 0.0, width, height), cell)
        assert tess.n == math.ceil(width / cell) * math.ceil(height / cell)


def test_locate_south_west_cell():
    tess = build_square_grid((0.0, 0.0, 2.0, 2.0), 1.0)
    assert locate(tess, 0.5, 0.5) == 0


def test_locate_shared_edge_goes_east():
    tess = build_square_grid((0.0, 0.0, 2.0, 2.0), 1.0)
    assert locate(tess, 1.0, 0.5) == 1


def test_locate_shared_edge_goes_north():
    tess = build_square_grid((0.0, 0.0, 2.0, 2.0), 1.0)
    assert locate(tess, 0.5, 1.0) == 2


def test_locate_outside_region_is_none():
    tess = build_square_grid((0.0, 0.0, 2.0, 2.0), 1.0)
    assert locate(tess, 5.0, 5.0) is None
    assert locate(tess, -0.1, 0.5) is None


def test_locate_deterministic():
    tess = build_square_grid((0.0, 0.0, 3.0, 3.0), 0.7)
    point = (1.234, 2.345)
    first = locate(tess, *point)
    assert all(locate(tess, *point) == first for _ in range(10))


def test_random_interior_points_hit_exactly_one_tile():
    # Acceptance gate: 10,000 random interior points on random grids map to
    # exactly one tile each, and validate is clean on every grid. < 5 s.
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    points_done = 0
    while points_done < 10_000:
        west = float(rng.uniform(-50.0, 50.0))
        south = float(rng.uniform(-50.0, 50.0))
        width = float(rng.uniform(0.5, 8.0))
        height = float(rng.uniform(0.5, 8.0))
        cell = float(rng.uniform(0.05, 2.0))
        tess = build_square_grid((west, south, west + width, south + height), cell)
        report = validate(tess)
        assert report.ok, report.summary()

        batch = min(500, 10_000 - points_done)
        lons = rng.uniform(west, west + width, size=batch)
        lats = rng.uniform(south, south + height, size=batch)
        for lon, lat in zip(lons, lats):
            # Strictly inside the region.
            if lon == west + width or lat == south + height:
                continue
            tid = locate(tess, float(lon), float(lat))
            assert tid is not None
            # Cross-check by explicit membership: exactly one tile under the
            # left-closed/right-open convention contains the point.
            hits = [
                t.id
                for t in tess.tiles
                if t.bounds.west <= lon < t.bounds.east and t.bounds.south <= lat < t.bounds.north
            ]
            assert hits == [tid]
            points_done += 1
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0, f"point sweep took {elapsed:.2f}s"


def test_load_two_adjacent_squares():
    doc = collection(square_feature("a", 0.0, 0.0), square_feature("b", 1.0, 0.0))
    tess = load_polygon_tessellation(doc)
    assert tess.n == 2
    assert tess.kind == "irregular"
    assert tess.names == ("a", "b")
    assert (tess.region.west, tess.region.east) == (0.0, 2.0)


def test_load_duplicate_ids_rejected():
    doc = collection(square_feature("a", 0.0, 0.0), square_feature("a", 1.0, 0.0))
    with pytest.raises(TessellationError, match="duplicate"):
        load_polygon_tessellation(doc)


def test_load_empty_collection_rejected():
    with pytest.raises(TessellationError):
        load_polygon_tessellation(collection())


def test_load_non_polygon_rejected():
    feature = {
        "type": "Feature",
        "properties": {"id": "pt"},
        "geometry": {"type": "Point", "coordinates": [0.0, 0.0]},
    }
    with pytest.raises(TessellationError, match="Polygon"):
        load_polygon_tessellation(collection(feature))


def test_load_malformed_document_rejected():
    with pytest.raises(TessellationError):
        load_polygon_tessellation("{not json")
    with pytest.raises(TessellationError):
        load_polygon_tessellation(json.dumps({"type": "Feature"}))


def test_load_missing_id_property_rejected():
    feature = square_feature("x", 0.0, 0.0)
    del feature["properties"]["id"]
    with pytest.raises(TessellationError, match="id"):
        load_polygon_tessellation(collection(feature))


def test_load_open_ring_rejected():
    feature = square_feature("x", 0.0, 0.0)
    feature["geometry"]["coordinates"][0].pop()
    with pytest.raises(TessellationError, match="closed"):
        load_polygon_tessellation(collection(feature))


def test_locate_irregular_first_match_wins():
    doc = collection(square_feature("a", 0.0, 0.0), square_feature("b", 1.0, 0.0))
    tess = load_polygon_tessellation(doc)
    assert locate(tess, 0.5, 0.5) == 0
    assert locate(tess, 1.5, 0.5) == 1
    # Shared edge: both closed polygons contain it, lower id wins.
    assert locate(tess, 1.0, 0.5) == 0
    assert locate(tess, 9.0, 9.0) is None


def test_index_of_maps_names():
    doc = collection(square_feature("north", 0.0, 1.0), square_feature("south", 0.0, 0.0))
    tess = load_polygon_tessellation(doc)
    assert tess.index_of("north") == 0
    assert tess.index_of("south") == 1
    with pytest.raises(KeyError):
        tess.index_of("west")


def test_validate_clean_grid():
    report = validate(build_square_grid((0.0, 0.0, 4.0, 3.0), 0.5))
    assert report.ok
    assert report.summary() == "valid tessellation"


def test_validate_detects_full_overlap():
    doc = collection(square_feature("a", 0.0, 0.0), square_feature("b", 0.0, 0.0))
    report = validate(load_polygon_tessellation(doc))
    assert not report.ok
    assert len(report.overlaps) == 1
    v = report.overlaps[0]
    assert (v.first, v.second) == (0, 1)
    assert v.area == pytest.approx(1.0, abs=1e-9)


def test_validate_detects_coverage_gap():
    # Single unit square declared over a 2x2 region leaves 3.0 uncovered.
    tile = Tile(id=0, name="0", bounds=BoundingBox(0.0, 0.0, 1.0, 1.0))
    tess = Tessellation(
        region=BoundingBox(0.0, 0.0, 2.0, 2.0), tiles=(tile,), kind="regular-grid", cell_size=1.0,
        nrows=1, ncols=1,
    )
    report = validate(tess)
    assert not report.ok
    assert report.coverage_gap == pytest.approx(3.0, abs=1e-9)
    assert "coverage gap" in report.summary()


def test_validate_adjacent_squares_clean():
    doc = collection(
        square_feature("a", 0.0, 0.0),
        square_feature("b", 1.0, 0.0),
        square_feature("c", 0.0, 1.0),
        square_feature("d", 1.0, 1.0),
    )
    report = validate(load_polygon_tessellation(doc))
    assert report.ok, report.summary()


def test_validate_detects_duplicate_identifiers():
    tiles = (
        Tile(id=0, name="x", bounds=BoundingBox(0.0, 0.0, 1.0, 1.0)),
        Tile(id=1, name="x", bounds=BoundingBox(1.0, 0.0, 2.0, 1.0)),
    )
    tess = Tessellation(
        region=BoundingBox(0.0, 0.0, 2.0, 1.0), tiles=tiles, kind="regular-grid",
        cell_size=1.0, nrows=1, ncols=2,
    )
    report = validate(tess)
    assert any("duplicate" in issue for issue in report.issues)


def test_empty_tessellation_rejected():
    with pytest.raises(TessellationError):
        Tessellation(region=BoundingBox(0.0, 0.0, 1.0, 1.0), tiles=(), kind="regular-grid")
