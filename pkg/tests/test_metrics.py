from __future__ import annotations

import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from odflow.metrics import cpc, mae, relative_change, rmse


def brute_rmse(p, a):
    # Pure-Python re-evaluation, independent of the vectorized implementation.
    flat_p = [float(x) for x in np.asarray(p).ravel()]
    flat_a = [float(x) for x in np.asarray(a).ravel()]
    total = sum((x - y) ** 2 for x, y in zip(flat_p, flat_a))
    return math.sqrt(total / len(flat_p))


def brute_mae(p, a):
    flat_p = [float(x) for x in np.asarray(p).ravel()]
    flat_a = [float(x) for x in np.asarray(a).ravel()]
    return sum(abs(x - y) for x, y in zip(flat_p, flat_a)) / len(flat_p)


def brute_cpc(p, a):
    flat_p = [float(x) for x in np.asarray(p).ravel()]
    flat_a = [float(x) for x in np.asarray(a).ravel()]
    denom = sum(flat_p) + sum(flat_a)
    if denom == 0.0:
        return 1.0
    return 2.0 * sum(min(x, y) for x, y in zip(flat_p, flat_a)) / denom


def test_rmse_identity_is_zero():
    assert rmse([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0


def test_rmse_hand_example():
    assert rmse([3.0, 4.0], [0.0, 0.0]) == pytest.approx(math.sqrt(12.5), abs=1e-9)


def test_rmse_single_element():
    assert rmse([5.0], [3.0]) == 2.0


def test_mae_identity_is_zero():
    assert mae([1.0, 2.0], [1.0, 2.0]) == 0.0


def test_mae_hand_example():
    assert mae([3.0, 4.0], [0.0, 0.0]) == pytest.approx(3.5, abs=1e-12)


def test_mae_sign_flipped_errors():
    assert mae([1.0, -1.0], [0.0, 0.0]) == 1.0


def test_cpc_identical_positive_mass_is_one():
    m = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert cpc(m, m) == 1.0


def test_cpc_disjoint_supports_is_zero():
    a = np.array([[2.0, 0.0], [0.0, 2.0]])
    b = np.array([[0.0, 3.0], [3.0, 0.0]])
    assert cpc(a, b) == 0.0


def test_cpc_hand_example():
    pred = np.array([[2.0, 0.0], [0.0, 2.0]])
    act = np.ones((2, 2))
    assert cpc(pred, act) == pytest.approx(0.5, abs=1e-12)


def test_cpc_both_zero_is_one():
    z = np.zeros((3, 3))
    assert cpc(z, z) == 1.0


def test_cpc_one_side_zero_is_zero():
    z = np.zeros((2, 2))
    assert cpc(z, np.ones((2, 2))) == 0.0
    assert cpc(np.ones((2, 2)), z) == 0.0


def test_cpc_rejects_negative_entries():
    with pytest.raises(ValueError):
        cpc(np.array([[-1.0, 0.0], [0.0, 0.0]]), np.zeros((2, 2)))
    with pytest.raises(ValueError):
        cpc(np.zeros((2, 2)), np.array([[0.0, -2.0], [0.0, 0.0]]))


def test_shape_mismatch_rejected():
    for fn in (rmse, mae, cpc):
        with pytest.raises(ValueError):
            fn(np.zeros((2, 2)), np.zeros((2, 3)))


def test_empty_input_rejected():
    for fn in (rmse, mae, cpc):
        with pytest.raises(ValueError):
            fn(np.zeros((0,)), np.zeros((0,)))


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        rmse([np.nan], [0.0])
    with pytest.raises(ValueError):
        mae([np.inf], [0.0])


def test_relative_change_table_examples():
    # Published-table arithmetic; prose rounds to 4 dp so allow 1e-4 slack.
    assert relative_change(0.62, 0.58) == pytest.approx((0.62 - 0.58) / 0.58, abs=1e-15)
    assert relative_change(0.62, 0.58) == pytest.approx(0.0690, abs=1e-4)
    assert relative_change(6.09, 8.02) == pytest.approx((6.09 - 8.02) / 8.02, abs=1e-15)
    assert relative_change(6.09, 8.02) == pytest.approx(-0.2407, abs=1e-4)


def test_relative_change_identity_is_zero():
    assert relative_change(3.3, 3.3) == 0.0


def test_relative_change_zero_baseline_rejected():
    with pytest.raises(ValueError):
        relative_change(1.0, 0.0)


def test_metric_oracle_1000_random_matrices():
    # Acceptance gate: agree with brute-force evaluation on 1,000 matrices, < 5 s.
    rng = np.random.default_rng(1234)
    start = time.perf_counter()
    for _ in range(1000):
        n = int(rng.integers(1, 7))
        pred = rng.uniform(0.0, 50.0, size=(n, n))
        act = rng.uniform(0.0, 50.0, size=(n, n))
        if rng.random() < 0.1:
            pred = np.round(pred)
            act = np.round(act)
        assert abs(rmse(pred, act) - brute_rmse(pred, act)) < 1e-9
        assert abs(mae(pred, act) - brute_mae(pred, act)) < 1e-9
        assert abs(cpc(pred, act) - brute_cpc(pred, act)) < 1e-9
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0, f"oracle sweep took {elapsed:.2f}s"


def test_cpc_bounds_1000_random_cases():
    rng = np.random.default_rng(77)
    for _ in range(1000):
        n = int(rng.integers(1, 8))
        a = rng.uniform(0.0, 100.0, size=(n, n))
        b = rng.uniform(0.0, 100.0, size=(n, n))
        v = cpc(a, b)
        assert 0.0 <= v <= 1.0


def test_cpc_symmetry_1000_random_cases():
    rng = np.random.default_rng(78)
    for _ in range(1000):
        n = int(rng.integers(1, 8))
        a = rng.uniform(0.0, 100.0, size=(n, n))
        b = rng.uniform(0.0, 100.0, size=(n, n))
        assert cpc(a, b) == cpc(b, a)


def test_cpc_scale_invariance_1000_random_cases():
    rng = np.random.default_rng(79)
    for _ in range(1000):
        n = int(rng.integers(1, 8))
        a = rng.uniform(0.0, 100.0, size=(n, n))
        b = rng.uniform(0.0, 100.0, size=(n, n))
        k = float(rng.uniform(0.1, 10.0))
        assert cpc(k * a, k * b) == pytest.approx(cpc(a, b), abs=1e-12)


# Quantized values keep |error| at 0 or >= 1e-6, so squaring in rmse
# cannot underflow to zero while mae stays positive.
finite_values = st.floats(-1e6, 1e6).map(lambda v: round(v, 6))

finite_pairs = st.integers(1, 30).flatmap(
    lambda n: st.tuples(
        hnp.arrays(np.float64, n, elements=finite_values),
        hnp.arrays(np.float64, n, elements=finite_values),
    )
)


@settings(max_examples=200, deadline=None)
@given(finite_pairs)
def test_rmse_at_least_mae(pair):
    p, a = pair
    r = rmse(p, a)
    m = mae(p, a)
    assert r >= m * (1.0 - 1e-12)
    assert m >= 0.0


@settings(max_examples=200, deadline=None)
@given(finite_pairs, st.randoms(use_true_random=False))
def test_pooled_metrics_permutation_invariant(pair, rnd):
    p, a = pair
    order = list(range(len(p)))
    rnd.shuffle(order)
    assert rmse(p[order], a[order]) == pytest.approx(rmse(p, a), rel=1e-12, abs=1e-12)
    assert mae(p[order], a[order]) == pytest.approx(mae(p, a), rel=1e-12, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(
    st.integers(1, 6).flatmap(
        lambda n: hnp.arrays(np.float64, (n, n), elements=st.floats(0.0, 1e6))
    )
)
def test_cpc_identity_property(m):
    v = cpc(m, m)
    assert v == 1.0
