import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst

from probe_homodyne.errors import BadParameter, BadProvenance
from probe_homodyne.evolution import PopulationSeries
from probe_homodyne.sampling import ShotSpec, binomial_variance, draw_counts, sample_series


def _series(p, n=11):
    return PopulationSeries(np.linspace(-1, 1, n), np.full(n, p), "excited", "unitary")


@pytest.mark.parametrize("p", [0.0, 1.0])
def test_certain_outcomes(p):
    s = sample_series(_series(p), ShotSpec(100, 1))
    assert np.all(s.values == p)


def test_half_mean():
    s = sample_series(_series(0.5, 2001), ShotSpec(1000, 3))
    assert abs(s.values.mean() - 0.5) < 4 * np.sqrt(0.25 / 1000 / 2001)


def test_deterministic_and_stream_separated():
    a = sample_series(_series(0.3), ShotSpec(50, 9), stream=1)
    b = sample_series(_series(0.3), ShotSpec(50, 9), stream=1)
    c = sample_series(_series(0.3), ShotSpec(50, 9), stream=2)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)
    assert a.provenance == "sampled" and a.metadata["shots"] == 50


def test_counts_independent_of_grid_length():
    # counter-based: point k draws the same value however many points follow
    p = np.full(20, 0.4)
    assert np.array_equal(draw_counts(p, 30, 5)[:5], draw_counts(p[:5], 30, 5))


def test_refuses_double_sampling_and_signed():
    s = sample_series(_series(0.2), ShotSpec(10))
    with pytest.raises(BadProvenance):
        sample_series(s, ShotSpec(10))
    with pytest.raises(BadProvenance):
        sample_series(_series(0.2) - _series(0.1), ShotSpec(10))


def test_bad_shots():
    with pytest.raises(BadParameter):
        ShotSpec(0)


def test_variance_positive_at_edges():
    v = binomial_variance(sample_series(_series(1.0), ShotSpec(100)))
    assert np.all(v > 0)


@settings(max_examples=15, deadline=None)
@given(hst.floats(0.05, 0.95), hst.integers(0, 10_000))
def test_unbiased(p, seed):
    s = sample_series(_series(p, 400), ShotSpec(200, seed))
    assert abs(s.values.mean() - p) < 5 * np.sqrt(p * (1 - p) / 200 / 400)
