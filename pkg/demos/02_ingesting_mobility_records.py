"""
Parsing mobility records with reject tracking
=============================================

Three raw shapes come in from providers: trip records, GPS trajectories,
and pre-aggregated origin-destination counts. Each parser returns the
clean records plus a reject list carrying line numbers and reasons, so a
dirty file never silently shrinks.
"""

from odflow import (
    BoundingBox,
    TimeAxis,
    bin_time,
    build_square_grid,
    parse_od_counts,
    parse_trips,
    trajectory_to_trips,
)
from odflow.ingestion import parse_trajectories, rejects_to_csv

# Trip records: timestamps may be epoch seconds or ISO-8601. Row 3 has an
# unparseable latitude; row 4 ends before it starts. Both become rejects
# instead of exceptions. (Coordinates are not range-checked here: a point
# nowhere near the tessellation is skipped later, at tensor-build time.)
trips_csv = """\
start_time,end_time,origin_lon,origin_lat,dest_lon,dest_lat
2024-05-01T08:00:00Z,2024-05-01T08:11:00Z,0.2,0.3,1.6,0.4
1714551060,1714551660,0.7,1.2,2.1,1.8
2024-05-01T08:02:00Z,2024-05-01T08:09:00Z,0.5,4x.1,1.0,1.0
2024-05-01T09:00:00Z,2024-05-01T08:00:00Z,0.5,0.5,1.0,1.0
"""
result = parse_trips(trips_csv)
print(f"trips: {len(result.records)} parsed, {len(result.rejects)} rejected")
for reject in result.rejects:
    print(f"  line {reject.line_number}: {reject.reason}")
print("reject report:")
print(rejects_to_csv(result.rejects))

# Provider headers rarely match; a column map renames them once at the edge.
renamed = parse_trips(
    "t0,lng_a,lat_a,lng_b,lat_b\n1714550400,0.1,0.2,1.4,1.5\n",
    column_map={
        "start_time": "t0",
        "origin_lon": "lng_a",
        "origin_lat": "lat_a",
        "dest_lon": "lng_b",
        "dest_lat": "lat_b",
    },
)
print(f"renamed columns: parsed {len(renamed.records)} trip(s), "
      f"end_time defaulted to {renamed.records[0].end_time}")

# GPS trajectories: grouped per entity, time-sorted, then reduced to
# tile-transition trips. Consecutive fixes inside one tile produce nothing.
traj_csv = """\
entity_id,timestamp,lon,lat
cab-7,1714550400,0.2,0.2
cab-7,1714550500,0.8,0.4
cab-7,1714550600,1.4,0.6
cab-7,1714550700,1.6,1.5
"""
tess = build_square_grid(BoundingBox(west=0, south=0, east=2, north=2), 1.0)
trajectories = parse_trajectories(traj_csv)
for traj in trajectories.records:
    moves = trajectory_to_trips(traj, tess)
    print(f"{traj.entity_id}: {len(traj.points)} fixes -> {len(moves)} tile transitions")
    for move in moves:
        print(f"  {move.start_time:.0f}: ({move.origin_lon}, {move.origin_lat})"
              f" -> ({move.dest_lon}, {move.dest_lat})")

# Time binning maps instants onto a uniform axis of left-closed intervals.
axis = TimeAxis(origin_time=1714550400.0, interval_seconds=3600, num_intervals=24)
for instant in (1714550400.0, 1714553999.9, 1714554000.0):
    print(f"bin_time({instant:.1f}) -> interval {bin_time(instant, axis)}")

# Pre-aggregated counts skip the spatial step entirely; they validate
# against the axis and the tile names.
counts_csv = """\
interval_start,origin_id,destination_id,count
1714550400,0,3,14
1714554000,2,1,9
"""
od = parse_od_counts(counts_csv, axis)
print(f"od counts: {len(od.records)} rows, rejects {len(od.rejects)}")
