import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from hookcost.regression import (
    RegressionError,
    fit_multiple_ols,
    fit_ols,
    regression_rate,
)

GRID = np.arange(0, 111, 10, dtype=float)


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def test_exact_line():
    fit = fit_ols(GRID, 3 * GRID + 5)
    assert rel(fit.slope, 3) < 1e-12
    assert rel(fit.intercept, 5) < 1e-12
    assert fit.r_squared == 1.0


@pytest.mark.parametrize("x,y", [
    ([1, 2, 3], [4, 4, 4]),   # constant response
    ([2, 2, 2], [1, 2, 3]),   # constant x
    ([1, 2], [1, 2]),         # too short
    ([1, 2, 3], [1, 2]),      # length mismatch
])
def test_degenerate_simple(x, y):
    with pytest.raises(RegressionError):
        fit_ols(x, y)


@given(
    st.floats(-1e3, 1e3), st.floats(-1e6, 1e6),
    st.lists(st.floats(-1e4, 1e4), min_size=3, max_size=30, unique=True),
)
def test_simple_recovers_affine(a, b, xs):
    x = np.asarray(xs)
    assume(np.ptp(x) > 1e-2 and abs(a) > 1e-3)
    fit = fit_ols(x, a * x + b)
    assert rel(fit.slope, a) < 1e-9
    scale = abs(b) + abs(a) * np.abs(x).max()
    assert abs(fit.intercept - b) <= 1e-9 * scale


@given(
    st.lists(st.floats(-100, 100), min_size=4, max_size=20, unique=True),
    st.floats(0.01, 1e3), st.floats(-1e3, 1e3), st.integers(0, 2**31),
)
def test_r_squared_invariant_under_affine_x(xs, scale, shift, seed):
    x = np.asarray(xs)
    assume(np.ptp(x) > 1e-3)
    y = 2 * x + np.random.default_rng(seed).normal(0, 10, x.size)
    r1 = fit_ols(x, y).r_squared
    r2 = fit_ols(scale * x + shift, y).r_squared
    assert 0.0 <= r1 <= 1.0
    assert r1 == pytest.approx(r2, abs=1e-9)


def test_multiple_exact():
    rng = np.random.default_rng(1)
    X = rng.uniform(0, 10, size=(15, 2))
    y = 2 * X[:, 0] + 3 * X[:, 1] + 1
    fit = fit_multiple_ols(X, y)
    for got, want in zip(fit.coefficients, (1, 2, 3)):
        assert rel(got, want) < 1e-9
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)


def test_multiple_large_offsets_exact():
    # predictors in nanoseconds far from the origin
    x1 = np.arange(0, 110001, 10000, dtype=float) + 5e5
    x2 = (x1 - 5e5) ** 1.5
    y = 1312.0 + 3.0 * x1 + 0.25 * x2
    fit = fit_multiple_ols(np.column_stack([x1, x2]), y)
    for got, want in zip(fit.coefficients, (1312.0, 3.0, 0.25)):
        assert rel(got, want) < 1e-9


def test_identical_columns_rank_deficient():
    x = np.arange(10, dtype=float)
    with pytest.raises(RegressionError):
        fit_multiple_ols(np.column_stack([x, x]), 2 * x + 1)
    with pytest.raises(RegressionError):
        fit_multiple_ols(np.column_stack([x, np.full(10, 4.0)]), x)
    with pytest.raises(RegressionError):
        fit_multiple_ols(np.column_stack([x, 2 * x + 3]), x)


@pytest.mark.parametrize("seed", range(50))
def test_multiple_matches_normal_equation_oracle(seed):
    rng = np.random.default_rng(seed)
    n, p = rng.integers(8, 40), rng.integers(1, 5)
    X = rng.normal(rng.uniform(-50, 50, p), rng.uniform(0.5, 20, p), size=(n, p))
    y = X @ rng.normal(0, 5, p) + rng.normal(0, 3) + rng.normal(0, 1, n)
    A = np.column_stack([np.ones(n), X])
    oracle = np.linalg.solve(A.T @ A, A.T @ y)
    got = np.asarray(fit_multiple_ols(X, y).coefficients)
    assert np.allclose(got, oracle, rtol=1e-6, atol=1e-6 * np.abs(oracle).max())
    lstsq = np.linalg.lstsq(A, y, rcond=None)[0]
    assert np.allclose(got, lstsq, rtol=1e-6, atol=1e-6 * np.abs(lstsq).max())


def test_multiple_recovers_within_standard_errors():
    rng = np.random.default_rng(20)
    X = rng.uniform(0, 1, size=(20, 2))
    truth = np.array([1.0, 2.0, 3.0])
    y = truth[0] + X @ truth[1:] + rng.normal(0, 0.01, 20)
    fit = fit_multiple_ols(X, y)
    for got, want, se in zip(fit.coefficients, truth, fit.std_errors):
        assert abs(got - want) <= 3 * se
    # standard errors agree with the textbook covariance formula
    A = np.column_stack([np.ones(20), X])
    resid = y - A @ np.asarray(fit.coefficients)
    cov = resid @ resid / (20 - 3) * np.linalg.inv(A.T @ A)
    assert np.allclose(fit.std_errors, np.sqrt(np.diag(cov)), rtol=1e-6)


def test_simple_std_errors_match_multiple():
    rng = np.random.default_rng(3)
    x = rng.uniform(0, 100, 30)
    y = 4 * x - 2 + rng.normal(0, 5, 30)
    a, b = fit_ols(x, y), fit_multiple_ols(x, y)
    assert np.allclose(a.coefficients, b.coefficients, rtol=1e-10)
    assert np.allclose(a.std_errors, b.std_errors, rtol=1e-8)


def test_regression_rate_examples():
    assert math.isclose(regression_rate(1.87, 1.0).rate, 0.87, rel_tol=1e-12)
    assert math.isclose(regression_rate(12.7, 10.0).rate, 0.27, rel_tol=1e-12)
    assert regression_rate(5.0, 5.0).rate == 0
    thr = regression_rate(800.0, 1000.0, "throughput")
    assert thr.rate == pytest.approx(0.2)
    with pytest.raises(ValueError):
        regression_rate(1.0, 0.0)
    with pytest.raises(ValueError):
        regression_rate(1.0, 1.0, "energy")


@given(st.floats(0.01, 1e6), st.floats(0.01, 1e6), st.sampled_from(["latency", "throughput"]))
def test_rate_zero_iff_equal(target, baseline, kind):
    r = regression_rate(target, baseline, kind).rate
    assert (r == 0) == (target == baseline)
    swapped = regression_rate(baseline, target, kind).rate
    if abs(target - baseline) > 1e-6 * max(target, baseline):
        assert r != -swapped
