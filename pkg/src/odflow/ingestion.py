"""Parsers for the three dataset shapes: trip records, GPS trajectories,
pre-aggregated OD counts.

All timestamps are normalized to UTC epoch seconds at parse time; naive
ISO-8601 strings are read as UTC.  Rows that fail to parse are never
silently dropped: each parser returns the valid records together with a
reject report carrying line numbers and reasons.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone

from .tessellation import Tessellation, locate

__all__ = [
    "TripRecord",
    "Trajectory",
    "ODCountRecord",
    "TimeAxis",
    "RejectedRow",
    "ParseResult",
    "MissingColumnError",
    "TRIP_COLUMNS",
    "TRAJECTORY_COLUMNS",
    "OD_COUNT_COLUMNS",
    "parse_timestamp",
    "parse_trips",
    "parse_trajectories",
    "trajectory_to_trips",
    "bin_time",
    "parse_od_counts",
    "trips_to_csv",
    "trajectories_to_csv",
    "od_counts_to_csv",
    "rejects_to_csv",
]


class MissingColumnError(ValueError):
    """A mapped column is absent from the CSV header."""


@dataclass(frozen=True)
class TripRecord:
    start_time: float
    end_time: float
    origin_lon: float
    origin_lat: float
    dest_lon: float
    dest_lat: float


@dataclass(frozen=True)
class Trajectory:
    entity_id: str
    points: tuple[tuple[float, float, float], ...]  # (epoch seconds, lon, lat)


@dataclass(frozen=True)
class ODCountRecord:
    interval_start: float
    origin_id: str
    destination_id: str
    count: int


@dataclass(frozen=True)
class TimeAxis:
    """Uniform time grid: left-closed, right-open intervals."""

    origin_time: float
    interval_seconds: int
    num_intervals: int

    def __post_init__(self):
        if self.interval_seconds <= 0:
            raise ValueError("interval_seconds must be positive")
        if self.num_intervals < 1:
            raise ValueError("a time axis needs at least one interval")

    @property
    def end_time(self) -> float:
        return self.origin_time + self.interval_seconds * self.num_intervals

    def interval_start(self, index: int) -> float:
        return self.origin_time + self.interval_seconds * index


@dataclass(frozen=True)
class RejectedRow:
    line_number: int
    reason: str


@dataclass
class ParseResult:
    records: list
    rejects: list[RejectedRow] = field(default_factory=list)


# Canonical field -> CSV header name.  Harness configs override these.
TRIP_COLUMNS = {
    "start_time": "start_time",
    "end_time": "end_time",
    "origin_lon": "origin_lon",
    "origin_lat": "origin_lat",
    "dest_lon": "dest_lon",
    "dest_lat": "dest_lat",
}
TRAJECTORY_COLUMNS = {
    "entity_id": "entity_id",
    "timestamp": "timestamp",
    "lon": "lon",
    "lat": "lat",
}
OD_COUNT_COLUMNS = {
    "interval_start": "interval_start",
    "origin_id": "origin_id",
    "destination_id": "destination_id",
    "count": "count",
}


def parse_timestamp(text: str) -> float:
    """UTC epoch seconds from a numeric string or an ISO-8601 datetime."""
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        pass
    iso = text[:-1] + "+00:00" if text.endswith("Z") else text
    moment = datetime.fromisoformat(iso)
    if moment.tzinfo is None:
        moment = moment.replace(tzinfo=timezone.utc)
    return moment.timestamp()


def _reader_with_columns(csv_text: str, column_map: dict, required: list[str], explicit: set[str]):
    reader = csv.DictReader(io.StringIO(csv_text))
    header = reader.fieldnames or []
    for name in required:
        mapped = column_map.get(name)
        if mapped is None:
            raise MissingColumnError(f"column map does not name {name!r}")
        if mapped not in header:
            raise MissingColumnError(f"mapped column {mapped!r} (for {name!r}) not in header {header}")
    # Optional columns are hard errors only when mapped explicitly.
    for name in explicit:
        if name not in required and column_map[name] not in header:
            raise MissingColumnError(f"mapped column {column_map[name]!r} (for {name!r}) not in header")
    return reader


def parse_trips(csv_text: str, column_map: dict | None = None) -> ParseResult:
    """Parse trip records from CSV text.

    ``column_map`` maps canonical field names (``start_time``, ``end_time``,
    ``origin_lon``, ``origin_lat``, ``dest_lon``, ``dest_lat``) to header
    names; ``end_time`` is optional and defaults to the start time.  A
    missing mapped column is a hard error; a row that fails to parse or
    violates an invariant becomes a reject entry with its line number.
    """
    columns = dict(TRIP_COLUMNS, **(column_map or {}))
    required = ["start_time", "origin_lon", "origin_lat", "dest_lon", "dest_lat"]
    reader = _reader_with_columns(csv_text, columns, required, explicit=set(column_map or {}))
    has_end = columns["end_time"] in (reader.fieldnames or [])

    result = ParseResult(records=[])
    for row in reader:
        line = reader.line_num
        try:
            start = parse_timestamp(row[columns["start_time"]])
            end = parse_timestamp(row[columns["end_time"]]) if has_end else start
            record = TripRecord(
                start_time=start,
                end_time=end,
                origin_lon=float(row[columns["origin_lon"]]),
                origin_lat=float(row[columns["origin_lat"]]),
                dest_lon=float(row[columns["dest_lon"]]),
                dest_lat=float(row[columns["dest_lat"]]),
            )
        except (ValueError, TypeError, KeyError) as exc:
            result.rejects.append(RejectedRow(line, f"unparseable row: {exc}"))
            continue
        if record.end_time < record.start_time:
            result.rejects.append(RejectedRow(line, "end_time before start_time"))
            continue
        result.records.append(record)
    return result


def parse_trajectories(csv_text: str, column_map: dict | None = None) -> ParseResult:
    """Parse GPS trajectories from CSV with entity id, timestamp, lon, lat.

    Rows are grouped by entity id (groups ordered by first appearance) and
    time-sorted within each group; the sort is stable so equal timestamps
    keep file order.
    """
    columns = dict(TRAJECTORY_COLUMNS, **(column_map or {}))
    required = ["entity_id", "timestamp", "lon", "lat"]
    reader = _reader_with_columns(csv_text, columns, required, explicit=set(column_map or {}))

    result = ParseResult(records=[])
    groups: dict[str, list[tuple[float, float, float]]] = {}
    for row in reader:
        line = reader.line_num
        try:
            entity = row[columns["entity_id"]]
            if entity is None or entity == "":
                raise ValueError("empty entity id")
            point = (
                parse_timestamp(row[columns["timestamp"]]),
                float(row[columns["lon"]]),
                float(row[columns["lat"]]),
            )
        except (ValueError, TypeError, KeyError) as exc:
            result.rejects.append(RejectedRow(line, f"unparseable row: {exc}"))
            continue
        groups.setdefault(entity, []).append(point)

    for entity, points in groups.items():
        points.sort(key=lambda p: p[0])
        result.records.append(Trajectory(entity_id=entity, points=tuple(points)))
    return result


def trajectory_to_trips(traj: Trajectory, tess: Tessellation) -> list[TripRecord]:
    """Tile-transition events of a trajectory as trip records.

    One trip per consecutive point pair whose located tiles differ; points
    outside all tiles break the chain, so no trip ever spans an outside gap.
    """
    located = [locate(tess, lon, lat) for _, lon, lat in traj.points]
    trips = []
    for k in range(len(traj.points) - 1):
        a, b = located[k], located[k + 1]
        if a is None or b is None or a == b:
            continue
        (t0, lon0, lat0), (t1, lon1, lat1) = traj.points[k], traj.points[k + 1]
        trips.append(
            TripRecord(
                start_time=t0,
                end_time=t1,
                origin_lon=lon0,
                origin_lat=lat0,
                dest_lon=lon1,
                dest_lat=lat1,
            )
        )
    return trips


def bin_time(ts: float, axis: TimeAxis) -> int | None:
    """Interval index of an epoch timestamp, or None when outside the axis."""
    index = math.floor((ts - axis.origin_time) / axis.interval_seconds)
    if 0 <= index < axis.num_intervals:
        return index
    return None


def parse_od_counts(csv_text: str, axis: TimeAxis, column_map: dict | None = None) -> ParseResult:
    """Parse pre-aggregated OD count rows, rejecting out-of-axis timestamps."""
    columns = dict(OD_COUNT_COLUMNS, **(column_map or {}))
    required = ["interval_start", "origin_id", "destination_id", "count"]
    reader = _reader_with_columns(csv_text, columns, required, explicit=set(column_map or {}))

    result = ParseResult(records=[])
    for row in reader:
        line = reader.line_num
        try:
            start = parse_timestamp(row[columns["interval_start"]])
            count_text = row[columns["count"]].strip()
            try:
                count = int(count_text)
            except ValueError:
                as_float = float(count_text)
                if not as_float.is_integer():
                    raise ValueError(f"count {count_text!r} is not an integer") from None
                count = int(as_float)
            record = ODCountRecord(
                interval_start=start,
                origin_id=row[columns["origin_id"]],
                destination_id=row[columns["destination_id"]],
                count=count,
            )
        except (ValueError, TypeError, KeyError, AttributeError) as exc:
            result.rejects.append(RejectedRow(line, f"unparseable row: {exc}"))
            continue
        if record.count < 0:
            result.rejects.append(RejectedRow(line, "negative count"))
            continue
        if bin_time(record.interval_start, axis) is None:
            result.rejects.append(RejectedRow(line, "timestamp outside time axis"))
            continue
        result.records.append(record)
    return result


def _format_epoch(ts: float) -> str:
    return str(int(ts)) if float(ts).is_integer() else repr(float(ts))


def _format_float(x: float) -> str:
    return repr(float(x))


def trips_to_csv(records: list[TripRecord]) -> str:
    """Serialize trips in the canonical column order (lossless round trip)."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(list(TRIP_COLUMNS.values()))
    for r in records:
        writer.writerow(
            [
                _format_epoch(r.start_time),
                _format_epoch(r.end_time),
                _format_float(r.origin_lon),
                _format_float(r.origin_lat),
                _format_float(r.dest_lon),
                _format_float(r.dest_lat),
            ]
        )
    return out.getvalue()


def trajectories_to_csv(records: list[Trajectory]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(list(TRAJECTORY_COLUMNS.values()))
    for traj in records:
        for ts, lon, lat in traj.points:
            writer.writerow([traj.entity_id, _format_epoch(ts), _format_float(lon), _format_float(lat)])
    return out.getvalue()


def od_counts_to_csv(records: list[ODCountRecord]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(list(OD_COUNT_COLUMNS.values()))
    for r in records:
        writer.writerow([_format_epoch(r.interval_start), r.origin_id, r.destination_id, str(r.count)])
    return out.getvalue()


def rejects_to_csv(rejects: list[RejectedRow]) -> str:
    """Reject report as CSV (line_number, reason)."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["line_number", "reason"])
    for r in rejects:
        writer.writerow([str(r.line_number), r.reason])
    return out.getvalue()
