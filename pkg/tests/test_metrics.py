import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from voltforecast.errors import ShapeError, ZeroTargetError
from voltforecast.metrics import MetricsBundle, bundle, check_bundle, mae, mape, mape_with_count, mse, rmse

# magnitudes below 1e-100 would underflow when squared, breaking rmse^2 == mse in floating point
finite = st.floats(-1e3, 1e3, allow_nan=False).filter(lambda x: x == 0 or abs(x) > 1e-100)
pairs = st.integers(1, 40).flatmap(
    lambda n: st.tuples(st.lists(finite, min_size=n, max_size=n), st.lists(finite, min_size=n, max_size=n))
)


def test_mse_examples():
    assert mse([1, 2, 3], [1, 2, 3]) == 0
    assert mse([1, 2, 3], [2, 2, 2]) == pytest.approx(2 / 3, rel=1e-15)
    assert mse([0], [3]) == 9


@pytest.mark.parametrize("m,r", [(1.77, 1.33), (0.54, 0.73)])
def test_rmse_printed_rows(m, r):
    # MSE of a constant residual sqrt(m) is m
    e = math.sqrt(m)
    assert round(rmse([0.0], [e]), 2) == r


def test_mae_examples():
    assert mae([1, 2, 3], [1, 2, 3]) == 0
    assert mae([1, 2, 3], [2, 2, 2]) == pytest.approx(2 / 3)
    assert mae([1, -1], [-1, 1]) == 2


def test_mape_examples():
    assert mape([1.0, 2.0], [1.0, 2.0]) == 0
    assert mape([2, 4], [1, 5]) == pytest.approx(37.5)
    value, skipped = mape_with_count([0, 2], [1, 2], "skip_zero_targets")
    assert value == 0 and skipped == 1


def test_mape_all_zero_targets_absent():
    assert mape([0.0, 0.0], [1.0, 2.0]) is None


def test_mape_error_policy_names_index():
    with pytest.raises(ZeroTargetError) as exc:
        mape([1.0, 0.0, 3.0], [1, 1, 1], zero_policy="error")
    assert exc.value.index == 1


def test_bundle_example():
    b = bundle([1, 2, 3], [2, 2, 2])
    assert b.mse == pytest.approx(2 / 3)
    assert b.rmse == pytest.approx(math.sqrt(2 / 3))
    assert b.mae == pytest.approx(2 / 3)
    assert b.mape == pytest.approx(400 / 9)


def test_perfect_bundle():
    b = bundle([3.5, 4.0], [3.5, 4.0])
    assert b.as_row() == (0.0, 0.0, 0.0, 0.0)


def test_pair_validation():
    with pytest.raises(ShapeError):
        mse([1, 2], [1])
    with pytest.raises(ShapeError):
        mse([], [])
    with pytest.raises(ShapeError):
        mse([np.nan], [1])


def test_check_bundle_flags_printed_sgd_row():
    row = MetricsBundle(mse=1.24, rmse=1.11, mae=9.79, mape=None)
    problems = check_bundle(row, rel_tol=0.01)
    assert any("mae" in p for p in problems)


def test_dominated_by():
    a = MetricsBundle(2.0, math.sqrt(2), 1.0, 5.0)
    b = MetricsBundle(1.0, 1.0, 0.5, 3.0)
    assert a.dominated_by(b) and not b.dominated_by(a)


@settings(max_examples=200, deadline=None)
@given(pairs)
def test_bundle_invariants(p):
    b = bundle(*p)
    assert check_bundle(b) == []
    assert 0 <= b.mae <= b.rmse * (1 + 1e-12)


@settings(max_examples=100, deadline=None)
@given(pairs, st.randoms(use_true_random=False))
def test_joint_permutation_invariance(p, r):
    y, yhat = p
    idx = list(range(len(y)))
    r.shuffle(idx)
    a = bundle(y, yhat)
    b = bundle([y[i] for i in idx], [yhat[i] for i in idx])
    assert a.mse == pytest.approx(b.mse, rel=1e-12, abs=1e-300)
    assert a.mae == pytest.approx(b.mae, rel=1e-12, abs=1e-300)
    if a.mape is not None:
        assert a.mape == pytest.approx(b.mape, rel=1e-12, abs=1e-300)


@settings(max_examples=100, deadline=None)
@given(pairs, st.floats(0.01, 100))
def test_scale_covariance(p, c):
    y, yhat = np.asarray(p[0]), np.asarray(p[1])
    a = bundle(y, yhat)
    b = bundle(c * y, c * yhat)
    assert b.mse == pytest.approx(c * c * a.mse, rel=1e-9, abs=1e-200)
    assert b.rmse == pytest.approx(c * a.rmse, rel=1e-9, abs=1e-200)
    assert b.mae == pytest.approx(c * a.mae, rel=1e-9, abs=1e-200)
    if a.mape is not None:
        assert b.mape == pytest.approx(a.mape, rel=1e-9, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(pairs, st.floats(-100, 100))
def test_translation_invariance(p, k):
    y, yhat = np.asarray(p[0]), np.asarray(p[1])
    a = bundle(y, yhat)
    b = bundle(y + k, yhat + k)
    assert b.mse == pytest.approx(a.mse, rel=1e-6, abs=1e-6)
    assert b.mae == pytest.approx(a.mae, rel=1e-6, abs=1e-6)
