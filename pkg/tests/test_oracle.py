import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst

from probe_homodyne import states as st
from probe_homodyne.errors import BadParameter, ShapeMismatch
from probe_homodyne.oracle import SINGLE_MODE, TWO_MODE, direct_moment, series_moment


@pytest.fixture(scope="module")
def coherent1():
    return st.build_field(st.Coherent(1.0), 40)


@pytest.mark.parametrize("obs,expected", [("X", 1.0), ("Y", 0.0), ("n", 1.0), ("X2", 1.25), ("VarX", 0.25),
                                          ("VarY", 0.25)])
def test_coherent(coherent1, obs, expected):
    for fn in (direct_moment, series_moment):
        assert fn(coherent1, obs) == pytest.approx(expected, abs=1e-9)


def test_fock_two():
    f = st.build_field(st.Fock(2), 10)
    assert direct_moment(f, "n") == pytest.approx(2)
    assert direct_moment(f, "X") == pytest.approx(0)
    assert direct_moment(f, "X2", 0.7) == pytest.approx(1.25)


def test_thermal_quadrature_variance():
    f = st.build_field(st.Thermal(1.5), 80)
    assert series_moment(f, "VarX", 0.3) == pytest.approx((2 * 1.5 + 1) / 4, abs=1e-9)


def test_squeezed_variances():
    r = 0.5
    f = st.build_field(st.SqueezedVacuum(r), 60)
    assert direct_moment(f, "VarX") == pytest.approx(math.exp(-2 * r) / 4, abs=1e-9)
    assert direct_moment(f, "VarY") == pytest.approx(math.exp(2 * r) / 4, abs=1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_trace_matches_series_single(seed):
    f = st.random_field(30, seed=seed)
    for obs in SINGLE_MODE:
        assert direct_moment(f, obs, 0.37) == pytest.approx(series_moment(f, obs, 0.37), abs=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_trace_matches_series_two_mode(seed):
    rng = np.random.default_rng(seed)
    amps = {(int(a), int(b)): complex(*rng.normal(size=2)) for a, b in rng.integers(0, 4, size=(6, 2))}
    f = st.build_field(st.FockSuperposition(amps), 6)
    for obs in TWO_MODE:
        kw = dict(phi1=0.3, phi2=-0.8, a0=1.3, signs=(1, -1))
        assert direct_moment(f, obs, **kw) == pytest.approx(series_moment(f, obs, **kw), abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(hst.integers(0, 10_000), hst.floats(0, 2 * math.pi))
def test_square_sum_identity(seed, phi):
    f = st.random_field(20, seed=seed)
    lhs = series_moment(f, "X2", phi) + series_moment(f, "Y2", phi)
    assert lhs == pytest.approx(0.5 + series_moment(f, "n"), abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(hst.integers(0, 10_000), hst.floats(-3, 3))
def test_phase_shift_rotates_quadratures(seed, phi):
    f = st.random_field(20, seed=seed)
    assert series_moment(f, "X", phi + math.pi / 2) == pytest.approx(series_moment(f, "Y", phi), abs=1e-12)


def test_tmsv_correlators():
    r = 0.5
    f = st.build_field(st.TwoModeSqueezedVacuum(r), 16, leakage_tol=1e-4)
    assert direct_moment(f, "A") == pytest.approx(0.0, abs=1e-12)
    # amplitudes (-tanh r)^n give a negative <a1 a2 + h.c.>
    assert direct_moment(f, "B") == pytest.approx(-math.sinh(2 * r), abs=1e-4)


def test_errors(coherent1):
    with pytest.raises(BadParameter):
        direct_moment(coherent1, "Z")
    with pytest.raises(ShapeMismatch):
        direct_moment(coherent1, "A")
    two = st.build_field(st.Product((st.Fock(0), st.Fock(1))), 4)
    with pytest.raises(ShapeMismatch):
        direct_moment(two, "n")
    assert direct_moment(two, "n", mode=1) == pytest.approx(1.0)
