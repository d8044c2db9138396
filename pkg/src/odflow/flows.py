"""Origin-destination tensors and their derived views.

The OD tensor is a dense integer array indexed (interval, origin tile,
destination tile).  Construction is single-writer; every derived view
(inflow/outflow series, per-origin decomposition, train/test splits) is
read-only over an immutable tensor.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .ingestion import ODCountRecord, TimeAxis, TripRecord, bin_time
from .tessellation import Tessellation, locate

__all__ = [
    "DEFAULT_CELL_BUDGET",
    "ODTensor",
    "FlowSeries",
    "OriginSeries",
    "TensorBuildResult",
    "SizeGuardError",
    "UnknownTileError",
    "build_od_tensor",
    "build_od_tensor_from_counts",
    "derive_flows",
    "decompose_per_origin",
    "recompose_od_tensor",
    "split_train_test",
    "export_tensor_csv",
    "import_tensor_csv",
]

#: Maximum number of tensor cells (t * n * n) allocated without error.
DEFAULT_CELL_BUDGET = 2**31


class SizeGuardError(ValueError):
    """Dense tensor allocation would exceed the configured cell budget."""


class UnknownTileError(ValueError):
    """An OD count record names a tile identifier absent from the tessellation."""


def _check_budget(axis: TimeAxis, n: int, cell_budget: int) -> None:
    cells = axis.num_intervals * n * n
    if cells > cell_budget:
        raise SizeGuardError(
            f"dense tensor of {axis.num_intervals} x {n} x {n} = {cells} cells "
            f"exceeds the cell budget of {cell_budget}"
        )


@dataclass(eq=False)
class ODTensor:
    """Dense non-negative integer counts indexed (interval, origin, destination)."""

    axis: TimeAxis
    n: int
    counts: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.counts)
        if not np.issubdtype(arr.dtype, np.integer):
            raise TypeError(f"tensor counts must be integers, got dtype {arr.dtype}")
        expected = (self.axis.num_intervals, self.n, self.n)
        if arr.shape != expected:
            raise ValueError(f"tensor shape {arr.shape} does not match {expected}")
        if arr.size and arr.min() < 0:
            raise ValueError("tensor counts must be non-negative")
        arr = np.array(arr, dtype=np.int64)
        arr.setflags(write=False)
        self.counts = arr

    @property
    def t(self) -> int:
        return self.axis.num_intervals

    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(eq=False)
class FlowSeries:
    """Per-tile inflow/outflow counts per interval, both shaped (t, n)."""

    axis: TimeAxis
    inflow: np.ndarray
    outflow: np.ndarray


@dataclass(eq=False)
class OriginSeries:
    """Time-ordered outgoing-flow vectors of one origin tile, shaped (t, n)."""

    origin_id: int
    vectors: np.ndarray


@dataclass
class TensorBuildResult:
    tensor: ODTensor
    processed: int
    skipped: int
    skipped_by_reason: dict[str, int] = field(default_factory=dict)


def build_od_tensor(
    trips: list[TripRecord],
    tess: Tessellation,
    axis: TimeAxis,
    cell_budget: int = DEFAULT_CELL_BUDGET,
) -> TensorBuildResult:
    """Count trips into a dense OD tensor.

    A trip contributes one count at (interval of start_time, origin tile,
    destination tile).  Trips whose endpoints fall outside every tile or
    whose start time falls outside the axis are skipped and tallied by
    reason, never silently dropped.
    """
    _check_budget(axis, tess.n, cell_budget)
    counts = np.zeros((axis.num_intervals, tess.n, tess.n), dtype=np.int64)
    skipped: dict[str, int] = {}
    for trip in trips:
        origin = locate(tess, trip.origin_lon, trip.origin_lat)
        if origin is None:
            skipped["origin_outside_tessellation"] = skipped.get("origin_outside_tessellation", 0) + 1
            continue
        dest = locate(tess, trip.dest_lon, trip.dest_lat)
        if dest is None:
            skipped["destination_outside_tessellation"] = (
                skipped.get("destination_outside_tessellation", 0) + 1
            )
            continue
        interval = bin_time(trip.start_time, axis)
        if interval is None:
            skipped["outside_time_axis"] = skipped.get("outside_time_axis", 0) + 1
            continue
        counts[interval, origin, dest] += 1
    return TensorBuildResult(
        tensor=ODTensor(axis=axis, n=tess.n, counts=counts),
        processed=len(trips),
        skipped=sum(skipped.values()),
        skipped_by_reason=skipped,
    )


def build_od_tensor_from_counts(
    records: list[ODCountRecord],
    tess: Tessellation,
    axis: TimeAxis,
    cell_budget: int = DEFAULT_CELL_BUDGET,
) -> TensorBuildResult:
    """Accumulate pre-aggregated OD counts into a tensor.

    Duplicate (interval, origin, destination) records sum.  Records naming
    unknown tile identifiers are a hard error listing the first 10 offenders.
    """
    _check_budget(axis, tess.n, cell_budget)
    unknown: list[str] = []
    seen_unknown: set[str] = set()
    for record in records:
        for name in (record.origin_id, record.destination_id):
            if name not in seen_unknown:
                try:
                    tess.index_of(name)
                except KeyError:
                    seen_unknown.add(name)
                    unknown.append(name)
    if unknown:
        shown = ", ".join(repr(u) for u in unknown[:10])
        raise UnknownTileError(
            f"{len(unknown)} unknown tile identifier(s) in OD count records; first: {shown}"
        )

    counts = np.zeros((axis.num_intervals, tess.n, tess.n), dtype=np.int64)
    skipped: dict[str, int] = {}
    for record in records:
        interval = bin_time(record.interval_start, axis)
        if interval is None:
            skipped["outside_time_axis"] = skipped.get("outside_time_axis", 0) + 1
            continue
        counts[interval, tess.index_of(record.origin_id), tess.index_of(record.destination_id)] += (
            record.count
        )
    return TensorBuildResult(
        tensor=ODTensor(axis=axis, n=tess.n, counts=counts),
        processed=len(records),
        skipped=sum(skipped.values()),
        skipped_by_reason=skipped,
    )


def derive_flows(tensor: ODTensor, include_self_loops: bool = False) -> FlowSeries:
    """Inflow/outflow series from an OD tensor.

    Outflow of tile i sums its row, inflow of tile j its column.  By default
    the diagonal is excluded from both sums: staying in place is neither
    entering nor leaving.  The tensor itself always keeps its diagonal.
    """
    work = tensor.counts
    if not include_self_loops:
        work = work.copy()
        idx = np.arange(tensor.n)
        work[:, idx, idx] = 0
    outflow = work.sum(axis=2)
    inflow = work.sum(axis=1)
    outflow.setflags(write=False)
    inflow.setflags(write=False)
    return FlowSeries(axis=tensor.axis, inflow=inflow, outflow=outflow)


def decompose_per_origin(tensor: ODTensor) -> list[OriginSeries]:
    """Split the tensor into n independent per-origin multivariate series.

    Series i holds, for each interval, the n-vector of counts leaving
    origin i; stacking all series along the origin axis reconstructs the
    tensor exactly.
    """
    return [
        OriginSeries(origin_id=i, vectors=tensor.counts[:, i, :]) for i in range(tensor.n)
    ]


def recompose_od_tensor(series: list[OriginSeries], axis: TimeAxis) -> ODTensor:
    """Inverse of :func:`decompose_per_origin`."""
    ordered = sorted(series, key=lambda s: s.origin_id)
    counts = np.stack([s.vectors for s in ordered], axis=1)
    return ODTensor(axis=axis, n=len(ordered), counts=counts)


def split_train_test(tensor: ODTensor, split_instant: float) -> tuple[ODTensor, ODTensor]:
    """Split along time: intervals starting before the instant go to train."""
    axis = tensor.axis
    k = math.ceil((split_instant - axis.origin_time) / axis.interval_seconds)
    if k < 1:
        raise ValueError(f"split instant {split_instant} leaves an empty training window")
    if k >= axis.num_intervals:
        raise ValueError(f"split instant {split_instant} leaves an empty test window")
    train_axis = TimeAxis(axis.origin_time, axis.interval_seconds, k)
    test_axis = TimeAxis(
        axis.origin_time + k * axis.interval_seconds,
        axis.interval_seconds,
        axis.num_intervals - k,
    )
    train = ODTensor(axis=train_axis, n=tensor.n, counts=tensor.counts[:k])
    test = ODTensor(axis=test_axis, n=tensor.n, counts=tensor.counts[k:])
    return train, test


def export_tensor_csv(tensor: ODTensor) -> str:
    """Tensor as CSV triples, zeros omitted, rows ordered by (interval, i, j)."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["interval_index", "origin_id", "destination_id", "count"])
    for tau, i, j in np.argwhere(tensor.counts):  # argwhere yields C order = (tau, i, j) sorted
        writer.writerow([int(tau), int(i), int(j), int(tensor.counts[tau, i, j])])
    return out.getvalue()


def import_tensor_csv(csv_text: str, axis: TimeAxis, n: int) -> ODTensor:
    """Rebuild a tensor from its CSV triple export; duplicate rows accumulate."""
    counts = np.zeros((axis.num_intervals, n, n), dtype=np.int64)
    reader = csv.DictReader(io.StringIO(csv_text))
    expected = ["interval_index", "origin_id", "destination_id", "count"]
    if reader.fieldnames != expected:
        raise ValueError(f"tensor CSV header {reader.fieldnames} != {expected}")
    for row in reader:
        tau = int(row["interval_index"])
        i = int(row["origin_id"])
        j = int(row["destination_id"])
        value = int(row["count"])
        if not (0 <= tau < axis.num_intervals and 0 <= i < n and 0 <= j < n):
            raise ValueError(f"tensor CSV row out of range: {row}")
        if value < 0:
            raise ValueError(f"negative count in tensor CSV: {row}")
        counts[tau, i, j] += value
    return ODTensor(axis=axis, n=n, counts=counts)
