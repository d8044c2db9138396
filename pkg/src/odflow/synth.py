"""Deterministic synthetic city generator for desk-scale benchmarks.

Produces a square-grid city whose OD counts follow an exact daily cycle
(a raised-cosine rate per tile pair) plus optional bounded integer noise.
With zero noise the tensor is exactly periodic, so a season-aware model
can forecast it perfectly; with noise, autoregressive models keep an edge
over short moving averages.  Output is the canonical trip CSV plus the
ground-truth tensor, byte-identical for a fixed seed and parameters.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .flows import ODTensor, export_tensor_csv, import_tensor_csv
from .ingestion import TimeAxis, TripRecord, parse_trips, trips_to_csv
from .tessellation import BoundingBox, Tessellation, build_square_grid

__all__ = [
    "DEFAULT_ORIGIN_TIME",
    "DEFAULT_CELL_SIZE",
    "CityPattern",
    "SyntheticCity",
    "generate_synthetic_city",
    "write_synthetic_city",
    "load_synthetic_city",
]

#: 2025-01-01T00:00:00Z, the epoch every generated axis starts at.
DEFAULT_ORIGIN_TIME = 1735689600.0
DEFAULT_CELL_SIZE = 0.01

CITY_FILE = "city.json"
TRIPS_FILE = "trips.csv"
TENSOR_FILE = "truth_tensor.csv"


@dataclass(frozen=True)
class CityPattern:
    """Raised-cosine daily rate per tile pair plus bounded integer noise."""

    peak_low: float = 2.0
    peak_high: float = 10.0
    noise_amplitude: int = 1

    def __post_init__(self):
        if not (0 < self.peak_low <= self.peak_high):
            raise ValueError(
                f"need 0 < peak_low <= peak_high, got {self.peak_low}, {self.peak_high}"
            )
        if self.noise_amplitude < 0:
            raise ValueError(f"noise_amplitude must be >= 0, got {self.noise_amplitude}")


@dataclass(eq=False)
class SyntheticCity:
    """A generated city: tessellation, axis, truth tensor, and the trips."""

    tess: Tessellation
    axis: TimeAxis
    tensor: ODTensor
    trips: list[TripRecord]
    meta: dict
    peaks: np.ndarray | None = None
    profile: np.ndarray | None = None


def _grid_shape(n_tiles: int) -> tuple[int, int]:
    """Most-square factorization: largest divisor <= sqrt(n) becomes rows."""
    for rows in range(int(math.isqrt(n_tiles)), 0, -1):
        if n_tiles % rows == 0:
            return rows, n_tiles // rows
    raise AssertionError("unreachable: 1 always divides")


def generate_synthetic_city(
    seed: int,
    n_tiles: int,
    days: int,
    interval_seconds: float,
    pattern: CityPattern = CityPattern(),
) -> SyntheticCity:
    """Build a seed-deterministic city with an exact daily cycle.

    Count at (interval, i, j) is round(peak_ij * w_k) + noise, clipped at
    zero, where w_k = 0.5*(1 - cos(2*pi*k/s)) over the k-th interval of the
    day and s intervals make one day.  Trips are placed at tile centers,
    spread evenly inside their interval.
    """
    if n_tiles < 2:
        raise ValueError(f"n_tiles must be >= 2, got {n_tiles}")
    if days < 2:
        raise ValueError(f"days must be >= 2, got {days}")
    if not (interval_seconds > 0):
        raise ValueError(f"interval_seconds must be positive, got {interval_seconds}")

    rows, cols = _grid_shape(n_tiles)
    region = BoundingBox(
        west=0.0, south=0.0, east=cols * DEFAULT_CELL_SIZE, north=rows * DEFAULT_CELL_SIZE
    )
    tess = build_square_grid(region, DEFAULT_CELL_SIZE)
    assert tess.n == n_tiles

    season = max(1, round(86400.0 / interval_seconds))
    num_intervals = days * season
    axis = TimeAxis(DEFAULT_ORIGIN_TIME, float(interval_seconds), num_intervals)

    rng = np.random.default_rng(seed)
    peaks = rng.uniform(pattern.peak_low, pattern.peak_high, size=(n_tiles, n_tiles))
    k = np.arange(season)
    profile = 0.5 * (1.0 - np.cos(2.0 * np.pi * k / season))

    base = np.round(peaks[None, :, :] * profile[:, None, None])  # (season, n, n)
    counts = np.tile(base, (days, 1, 1)).astype(np.int64)
    if pattern.noise_amplitude > 0:
        counts = counts + rng.integers(
            -pattern.noise_amplitude,
            pattern.noise_amplitude + 1,
            size=(num_intervals, n_tiles, n_tiles),
        )
    np.clip(counts, 0, None, out=counts)
    tensor = ODTensor(axis=axis, n=n_tiles, counts=counts)

    centers = [
        ((t.bounds.west + t.bounds.east) / 2.0, (t.bounds.south + t.bounds.north) / 2.0)
        for t in tess.tiles
    ]
    trips: list[TripRecord] = []
    for tau, i, j in np.argwhere(counts):
        cell = int(counts[tau, i, j])
        start0 = axis.interval_start(int(tau))
        olon, olat = centers[int(i)]
        dlon, dlat = centers[int(j)]
        for r in range(cell):
            start = start0 + (r + 0.5) * interval_seconds / cell
            trips.append(
                TripRecord(
                    start_time=start,
                    end_time=start + interval_seconds / 4.0,
                    origin_lon=olon,
                    origin_lat=olat,
                    dest_lon=dlon,
                    dest_lat=dlat,
                )
            )

    meta = {
        "seed": seed,
        "n_tiles": n_tiles,
        "rows": rows,
        "cols": cols,
        "cell_size": DEFAULT_CELL_SIZE,
        "west": region.west,
        "south": region.south,
        "east": region.east,
        "north": region.north,
        "days": days,
        "interval_seconds": float(interval_seconds),
        "intervals_per_day": season,
        "num_intervals": num_intervals,
        "origin_time": DEFAULT_ORIGIN_TIME,
        "pattern": {
            "peak_low": pattern.peak_low,
            "peak_high": pattern.peak_high,
            "noise_amplitude": pattern.noise_amplitude,
        },
        "total_trips": int(counts.sum()),
    }
    return SyntheticCity(
        tess=tess, axis=axis, tensor=tensor, trips=trips, meta=meta,
        peaks=peaks, profile=profile,
    )


def write_synthetic_city(city: SyntheticCity, out_dir: str | Path) -> dict[str, Path]:
    """Write trips.csv, truth_tensor.csv, and city.json into a directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "city": out / CITY_FILE,
        "trips": out / TRIPS_FILE,
        "tensor": out / TENSOR_FILE,
    }
    paths["city"].write_text(json.dumps(city.meta, indent=2, sort_keys=True) + "\n", "utf-8")
    paths["trips"].write_text(trips_to_csv(city.trips), "utf-8")
    paths["tensor"].write_text(export_tensor_csv(city.tensor), "utf-8")
    return paths


def load_synthetic_city(city_dir: str | Path) -> SyntheticCity:
    """Rebuild tessellation, axis, tensor, and trips from a written city."""
    root = Path(city_dir)
    meta = json.loads((root / CITY_FILE).read_text("utf-8"))
    region = BoundingBox(
        west=meta["west"], south=meta["south"], east=meta["east"], north=meta["north"]
    )
    tess = build_square_grid(region, meta["cell_size"])
    axis = TimeAxis(meta["origin_time"], meta["interval_seconds"], meta["num_intervals"])
    tensor = import_tensor_csv((root / TENSOR_FILE).read_text("utf-8"), axis, tess.n)
    trips_path = root / TRIPS_FILE
    trips: list[TripRecord] = []
    if trips_path.exists():
        trips = parse_trips(trips_path.read_text("utf-8")).records
    return SyntheticCity(tess=tess, axis=axis, tensor=tensor, trips=trips, meta=meta)
