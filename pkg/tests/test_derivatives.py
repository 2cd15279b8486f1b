import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst

from probe_homodyne.derivatives import METHODS, derivative_at_zero, polyfit
from probe_homodyne.errors import AsymmetricGrid, BadParameter, IllConditionedFit, WindowTooSmall
from probe_homodyne.evolution import PopulationSeries

GRID = np.linspace(-1, 1, 201)


def _series(f, grid=GRID):
    return PopulationSeries(grid, f(grid), "excited", "analytic", signed=True)


def _source(method, f):
    return _series(f) if method == "polyfit" else f


CASES = [
    (lambda t: np.sin(2 * t) / 4, 1, 0.5),
    (lambda t: 0.3 + 0 * t, 1, 0.0),
    (lambda t: np.sin(t) ** 2, 2, 2.0),
    (lambda t: np.cos(t) ** 2, 2, -2.0),
]


@pytest.mark.parametrize("method", METHODS)
@pytest.mark.parametrize("f,order,expected", CASES)
def test_examples(method, f, order, expected):
    est = derivative_at_zero(_source(method, f), order, method,
                             **({"halvings": 3} if method == "kernel_integral" else {}))
    tol = {"central_fd": 1e-5, "richardson": 1e-9, "polyfit": 1e-3, "kernel_integral": 1e-6}[method]
    assert est.value == pytest.approx(expected, abs=tol)
    assert est.error_estimate >= 0 and est.method == method
    assert abs(est.value - expected) <= 10 * est.error_estimate + 1e-12


@pytest.mark.parametrize("method", ["richardson", "kernel_integral"])
def test_error_estimate_covers_actual_error(method):
    f = lambda t: np.sin(1.7 * t) ** 2 + 0.2 * np.sin(0.8 * t)  # noqa: E731
    for order, exact in ((1, 0.16), (2, 2 * 1.7 ** 2)):
        est = derivative_at_zero(f, order, method, **({"halvings": 3} if method == "kernel_integral" else {}))
        assert abs(est.value - exact) <= max(10 * est.error_estimate, 1e-10)


@settings(max_examples=30, deadline=None)
@given(hst.floats(-2, 2), hst.floats(-2, 2), hst.floats(0.2, 2.5))
def test_richardson_on_trig_polynomial(a, b, w):
    f = lambda t: a * np.sin(w * t) + b * np.cos(w * t)  # noqa: E731
    assert derivative_at_zero(f, 1).value == pytest.approx(a * w, abs=1e-8)
    assert derivative_at_zero(f, 2).value == pytest.approx(-b * w * w, abs=1e-7)


def test_kernel_bias_shrinks_quadratically():
    f = lambda t: np.sin(t) ** 2  # noqa: E731
    errs = [abs(derivative_at_zero(f, 2, "kernel_integral", s).value - 2) for s in (0.2, 0.1)]
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.1)


def test_polyfit_window_too_small():
    with pytest.raises(WindowTooSmall):
        polyfit(_series(np.sin), 1, window=0.01, degree=4)


def test_polyfit_ill_conditioned():
    grid = np.concatenate([np.linspace(-1e-9, 1e-9, 8), [0.3]])
    with pytest.raises(IllConditionedFit):
        polyfit(_series(np.sin, grid), 1, window=0.3, degree=6)


def test_kernel_asymmetric_grid():
    with pytest.raises(AsymmetricGrid):
        derivative_at_zero(_series(np.sin, np.linspace(-0.5, 1, 151)), 1, "kernel_integral", 0.05)


def test_gridded_fd_needs_points():
    with pytest.raises(WindowTooSmall):
        derivative_at_zero(_series(np.sin), 1, "central_fd", 0.0037)
    est = derivative_at_zero(_series(np.sin), 1, "central_fd", 0.01, accuracy=4)
    assert est.value == pytest.approx(1.0, abs=1e-8)


def test_bad_arguments():
    with pytest.raises(BadParameter):
        derivative_at_zero(np.sin, 3)
    with pytest.raises(BadParameter):
        derivative_at_zero(np.sin, 1, "magic")
    with pytest.raises(BadParameter):
        derivative_at_zero(_series(np.sin), 1, "richardson")
    with pytest.raises(BadParameter):
        derivative_at_zero(np.sin, 1, "polyfit")


def test_one_sided_polyfit():
    grid = np.linspace(0, 0.5, 51)
    est = polyfit(_series(lambda t: np.sin(2 * t) / 4, grid), 1, window=0.2, degree=4)
    assert est.value == pytest.approx(0.5, abs=1e-4)
    assert abs(est.value - 0.5) <= 10 * est.error_estimate


def test_to_dict_is_json_ready():
    import json

    est = derivative_at_zero(np.sin, 1, "kernel_integral", 0.1, halvings=2)
    json.dumps(est.to_dict())
    assert math.isfinite(est.to_dict()["value"])
