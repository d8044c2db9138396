from __future__ import annotations

import numpy as np
import pytest

from odflow.flows import (
    ODTensor,
    SizeGuardError,
    UnknownTileError,
    build_od_tensor,
    build_od_tensor_from_counts,
    decompose_per_origin,
    derive_flows,
    export_tensor_csv,
    import_tensor_csv,
    recompose_od_tensor,
    split_train_test,
)
from odflow.ingestion import ODCountRecord, TimeAxis, TripRecord
from odflow.tessellation import build_square_grid


def make_axis(t=4, interval=3600, origin=0.0):
    return TimeAxis(origin_time=origin, interval_seconds=interval, num_intervals=t)


def make_tess():
    # 2x2 unit grid, tiles 0..3 row-major from the south-west.
    return build_square_grid((0.0, 0.0, 2.0, 2.0), 1.0)


def trip(start, o_lon, o_lat, d_lon, d_lat):
    return TripRecord(start, start + 60.0, o_lon, o_lat, d_lon, d_lat)


def test_build_tensor_two_trips_same_cell_pair():
    tess = make_tess()
    axis = make_axis()
    trips = [trip(100.0, 0.5, 0.5, 1.5, 0.5), trip(200.0, 0.4, 0.4, 1.6, 0.6)]
    result = build_od_tensor(trips, tess, axis)
    expected = np.zeros((4, 4, 4), dtype=np.int64)
    expected[0, 0, 1] = 2
    assert np.array_equal(result.tensor.counts, expected)
    assert result.processed == 2
    assert result.skipped == 0


def test_build_tensor_skips_outside_destination():
    tess = make_tess()
    axis = make_axis()
    result = build_od_tensor([trip(100.0, 0.5, 0.5, 9.0, 9.0)], tess, axis)
    assert result.tensor.counts.sum() == 0
    assert result.skipped == 1
    assert result.skipped_by_reason["destination_outside_tessellation"] == 1


def test_build_tensor_skips_outside_origin_and_time():
    tess = make_tess()
    axis = make_axis()
    result = build_od_tensor(
        [trip(100.0, -5.0, 0.5, 1.5, 0.5), trip(1e9, 0.5, 0.5, 1.5, 0.5)], tess, axis
    )
    assert result.skipped == 2
    assert result.skipped_by_reason["origin_outside_tessellation"] == 1
    assert result.skipped_by_reason["outside_time_axis"] == 1


def test_build_tensor_empty_trip_list():
    result = build_od_tensor([], make_tess(), make_axis())
    assert result.tensor.counts.sum() == 0
    assert result.processed == 0


def test_build_tensor_bins_by_start_time():
    tess = make_tess()
    axis = make_axis()
    # Starts in interval 1, ends in interval 2: counted in interval 1.
    t = TripRecord(3700.0, 7300.0, 0.5, 0.5, 1.5, 0.5)
    result = build_od_tensor([t], tess, axis)
    assert result.tensor.counts[1, 0, 1] == 1


def test_build_from_counts_duplicates_accumulate():
    tess = make_tess()
    axis = make_axis()
    records = [ODCountRecord(0.0, "0", "1", 3), ODCountRecord(0.0, "0", "1", 2)]
    result = build_od_tensor_from_counts(records, tess, axis)
    assert result.tensor.counts[0, 0, 1] == 5


def test_build_from_counts_unknown_tile_is_hard_error():
    tess = make_tess()
    axis = make_axis()
    records = [ODCountRecord(0.0, "0", "nowhere", 3)]
    with pytest.raises(UnknownTileError, match="nowhere"):
        build_od_tensor_from_counts(records, tess, axis)


def test_build_from_counts_error_lists_first_ten_offenders():
    tess = make_tess()
    axis = make_axis()
    records = [ODCountRecord(0.0, f"bad{k}", "0", 1) for k in range(15)]
    with pytest.raises(UnknownTileError) as info:
        build_od_tensor_from_counts(records, tess, axis)
    message = str(info.value)
    assert "bad9" in message
    assert "bad10" not in message


def test_build_from_counts_empty_records():
    result = build_od_tensor_from_counts([], make_tess(), make_axis())
    assert result.tensor.counts.sum() == 0


def test_derive_flows_hand_example():
    axis = make_axis(t=1)
    counts = np.array([[[0, 3], [1, 0]]], dtype=np.int64)
    tensor = ODTensor(axis=axis, n=2, counts=counts)
    flows = derive_flows(tensor)
    assert flows.outflow.tolist() == [[3, 1]]
    assert flows.inflow.tolist() == [[1, 3]]


def test_derive_flows_diagonal_only_excluded():
    axis = make_axis(t=1)
    counts = np.array([[[5, 0], [0, 7]]], dtype=np.int64)
    tensor = ODTensor(axis=axis, n=2, counts=counts)
    flows = derive_flows(tensor)
    assert flows.outflow.sum() == 0
    assert flows.inflow.sum() == 0


def test_derive_flows_self_loops_included_on_request():
    axis = make_axis(t=1)
    counts = np.array([[[5, 0], [0, 7]]], dtype=np.int64)
    tensor = ODTensor(axis=axis, n=2, counts=counts)
    flows = derive_flows(tensor, include_self_loops=True)
    assert flows.outflow.tolist() == [[5, 7]]
    assert flows.inflow.tolist() == [[5, 7]]


def test_derive_flows_zero_tensor():
    axis = make_axis(t=2)
    tensor = ODTensor(axis=axis, n=3, counts=np.zeros((2, 3, 3), dtype=np.int64))
    flows = derive_flows(tensor)
    assert flows.outflow.sum() == 0 and flows.inflow.sum() == 0


def test_flow_mass_balance_per_interval():
    rng = np.random.default_rng(31)
    axis = make_axis(t=6)
    counts = rng.integers(0, 9, size=(6, 5, 5)).astype(np.int64)
    tensor = ODTensor(axis=axis, n=5, counts=counts)
    flows = derive_flows(tensor)
    for tau in range(6):
        off_diag = counts[tau].sum() - np.trace(counts[tau])
        assert flows.outflow[tau].sum() == off_diag
        assert flows.inflow[tau].sum() == off_diag


def test_decompose_hand_example():
    axis = make_axis(t=1)
    tensor = ODTensor(axis=axis, n=2, counts=np.array([[[0, 3], [1, 0]]], dtype=np.int64))
    series = decompose_per_origin(tensor)
    assert len(series) == 2
    assert series[0].origin_id == 0
    assert series[0].vectors.tolist() == [[0, 3]]
    assert series[1].vectors.tolist() == [[1, 0]]


def test_decompose_recompose_identity():
    rng = np.random.default_rng(32)
    for _ in range(20):
        t = int(rng.integers(1, 6))
        n = int(rng.integers(2, 7))
        counts = rng.integers(0, 20, size=(t, n, n)).astype(np.int64)
        tensor = ODTensor(axis=make_axis(t=t), n=n, counts=counts)
        back = recompose_od_tensor(decompose_per_origin(tensor), tensor.axis)
        assert np.array_equal(back.counts, tensor.counts)


def test_conservation_on_100_random_trip_sets():
    # Acceptance gate: tensor total == processed - skipped on random trips.
    rng = np.random.default_rng(99)
    tess = make_tess()
    axis = make_axis(t=5)
    for _ in range(100):
        n_trips = int(rng.integers(0, 60))
        trips = []
        for _ in range(n_trips):
            # Mix of in-region and out-of-region endpoints and times.
            start = float(rng.uniform(-3600.0, axis.end_time + 3600.0))
            o = rng.uniform(-0.5, 2.5, size=2)
            d = rng.uniform(-0.5, 2.5, size=2)
            trips.append(trip(start, o[0], o[1], d[0], d[1]))
        result = build_od_tensor(trips, tess, axis)
        assert result.processed == n_trips
        assert result.tensor.counts.sum() == result.processed - result.skipped
        assert sum(result.skipped_by_reason.values()) == result.skipped

        flows = derive_flows(result.tensor)
        counts = result.tensor.counts
        for tau in range(axis.num_intervals):
            off_diag = counts[tau].sum() - np.trace(counts[tau])
            assert flows.outflow[tau].sum() == off_diag == flows.inflow[tau].sum()

        back = recompose_od_tensor(decompose_per_origin(result.tensor), axis)
        assert np.array_equal(back.counts, counts)


def test_split_train_test_by_interval_start():
    axis = make_axis(t=10)
    counts = np.arange(10 * 4, dtype=np.int64).reshape(10, 2, 2)
    tensor = ODTensor(axis=axis, n=2, counts=counts)
    train, test = split_train_test(tensor, axis.interval_start(7))
    assert (train.axis.num_intervals, test.axis.num_intervals) == (7, 3)
    assert np.array_equal(np.concatenate([train.counts, test.counts]), counts)
    assert test.axis.origin_time == axis.interval_start(7)
    assert train.axis.origin_time == axis.origin_time


def test_split_midinterval_rounds_up():
    axis = make_axis(t=10)
    tensor = ODTensor(axis=axis, n=2, counts=np.zeros((10, 2, 2), dtype=np.int64))
    # An instant inside interval 6 puts interval 6 (which starts before it)
    # into train and intervals 7.. into test.
    train, test = split_train_test(tensor, axis.interval_start(6) + 1.0)
    assert (train.axis.num_intervals, test.axis.num_intervals) == (7, 3)


def test_split_at_origin_rejected():
    axis = make_axis(t=10)
    tensor = ODTensor(axis=axis, n=2, counts=np.zeros((10, 2, 2), dtype=np.int64))
    with pytest.raises(ValueError):
        split_train_test(tensor, axis.origin_time)


def test_split_beyond_end_rejected():
    axis = make_axis(t=10)
    tensor = ODTensor(axis=axis, n=2, counts=np.zeros((10, 2, 2), dtype=np.int64))
    with pytest.raises(ValueError):
        split_train_test(tensor, axis.end_time)
    with pytest.raises(ValueError):
        split_train_test(tensor, axis.end_time + 50.0)


def test_tensor_rejects_bad_shapes_and_values():
    axis = make_axis(t=2)
    with pytest.raises(ValueError):
        ODTensor(axis=axis, n=2, counts=np.zeros((3, 2, 2), dtype=np.int64))
    with pytest.raises(ValueError):
        ODTensor(axis=axis, n=2, counts=np.zeros((2, 2, 3), dtype=np.int64))
    with pytest.raises(ValueError):
        ODTensor(axis=axis, n=2, counts=np.full((2, 2, 2), -1, dtype=np.int64))


def test_tensor_counts_read_only():
    axis = make_axis(t=1)
    tensor = ODTensor(axis=axis, n=2, counts=np.zeros((1, 2, 2), dtype=np.int64))
    with pytest.raises(ValueError):
        tensor.counts[0, 0, 0] = 5


def test_size_guard():
    axis = TimeAxis(0.0, 3600, 1000)
    with pytest.raises(SizeGuardError):
        build_od_tensor([], build_square_grid((0.0, 0.0, 2.0, 2.0), 1.0), axis, cell_budget=100)


def test_csv_export_deterministic_order_and_zero_omission():
    axis = make_axis(t=2)
    counts = np.zeros((2, 3, 3), dtype=np.int64)
    counts[1, 2, 0] = 4
    counts[0, 1, 2] = 7
    counts[0, 0, 1] = 1
    tensor = ODTensor(axis=axis, n=3, counts=counts)
    text = export_tensor_csv(tensor)
    lines = text.strip().split("\n")
    assert lines[0] == "interval_index,origin_id,destination_id,count"
    assert lines[1:] == ["0,0,1,1", "0,1,2,7", "1,2,0,4"]


def test_csv_round_trip():
    rng = np.random.default_rng(33)
    axis = make_axis(t=4)
    counts = (rng.random((4, 5, 5)) < 0.3) * rng.integers(1, 50, size=(4, 5, 5))
    tensor = ODTensor(axis=axis, n=5, counts=counts.astype(np.int64))
    back = import_tensor_csv(export_tensor_csv(tensor), axis, n=5)
    assert np.array_equal(back.counts, tensor.counts)


def test_csv_import_rejects_bad_rows():
    axis = make_axis(t=2)
    header = "interval_index,origin_id,destination_id,count\n"
    with pytest.raises(ValueError):
        import_tensor_csv(header + "5,0,0,1\n", axis, n=2)
    with pytest.raises(ValueError):
        import_tensor_csv(header + "0,9,0,1\n", axis, n=2)
    with pytest.raises(ValueError):
        import_tensor_csv(header + "0,0,0,-2\n", axis, n=2)
    with pytest.raises(ValueError):
        import_tensor_csv("wrong,header\n", axis, n=2)
