"""
From trips to an origin-destination tensor
==========================================

Aggregate trips onto (interval, origin tile, destination tile) counts,
derive the classic inflow/outflow series, split the tensor per origin
for independent forecasting, and round-trip everything through CSV.
"""

import numpy as np

from odflow import (
    BoundingBox,
    TimeAxis,
    TripRecord,
    build_od_tensor,
    build_square_grid,
    decompose_per_origin,
    derive_flows,
    export_tensor_csv,
    import_tensor_csv,
    recompose_od_tensor,
    split_train_test,
)

tess = build_square_grid(BoundingBox(west=0, south=0, east=2, north=2), 1.0)
axis = TimeAxis(origin_time=0.0, interval_seconds=3600, num_intervals=4)


def trip(start, o, d):
    (olon, olat), (dlon, dlat) = o, d
    return TripRecord(start, start + 600.0, olon, olat, dlon, dlat)


# Two trips leave tile 0 for tile 3 in hour 0, one goes back in hour 1,
# one starts outside the region and one before the axis: both are skipped
# with a reason, never dropped silently.
trips = [
    trip(100.0, (0.5, 0.5), (1.5, 1.5)),
    trip(200.0, (0.2, 0.8), (1.7, 1.2)),
    trip(3700.0, (1.5, 1.5), (0.5, 0.5)),
    trip(300.0, (9.0, 9.0), (0.5, 0.5)),
    trip(-50.0, (0.5, 0.5), (1.5, 0.5)),
]
result = build_od_tensor(trips, tess, axis)
print(f"processed {result.processed}, skipped {result.skipped}: {result.skipped_by_reason}")
tensor = result.tensor
print(f"tensor shape {tensor.counts.shape}, total movers {tensor.counts.sum()}")
print("hour 0 matrix:")
print(tensor.counts[0])

# Outflow counts leavers per tile and interval, inflow counts arrivers;
# self-loops stay out of both by default so the two totals always agree.
flows = derive_flows(tensor)
print(f"hour 0 outflow {flows.outflow[0]}, inflow {flows.inflow[0]}")
assert flows.outflow.sum() == flows.inflow.sum() == 3

# Each origin's outgoing rows form an independent multivariate series;
# gluing them back is lossless.
series = decompose_per_origin(tensor)
print(f"decomposed into {len(series)} origin series, "
      f"origin 0 history shape {series[0].vectors.shape}")
assert np.array_equal(recompose_od_tensor(series, axis).counts, tensor.counts)

# Chronological split at an instant; the boundary interval goes to test.
train, test = split_train_test(tensor, split_instant=2 * 3600.0)
print(f"split -> train {train.counts.shape[0]} intervals, test {test.counts.shape[0]}")

# The CSV form is deterministic (sorted sparse triples), so identical
# tensors serialize to identical bytes.
csv_text = export_tensor_csv(tensor)
print("csv head:", csv_text.splitlines()[:3])
assert np.array_equal(import_tensor_csv(csv_text, axis, tess.n).counts, tensor.counts)
print("csv round trip exact")
