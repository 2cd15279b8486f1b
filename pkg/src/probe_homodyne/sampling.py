"""Binomial shot noise on population series."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadParameter, BadProvenance
from .evolution import PopulationSeries

DEFAULT_SEED = 20050614


@dataclass(frozen=True)
class ShotSpec:
    shots_per_point: int
    rng_seed: int = DEFAULT_SEED

    def __post_init__(self):
        if int(self.shots_per_point) < 1:
            raise BadParameter("shots_per_point must be >= 1")


def point_rng(seed: int, stream: int, index: int) -> np.random.Generator:
    """Counter-based generator for one grid point: Philox keyed by the seed,
    with the (stream, point) pair as the counter offset."""
    key = np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, stream]).generate_state(2, dtype=np.uint64)
    bg = np.random.Philox(key=key, counter=[0, 0, 0, int(index)])
    return np.random.Generator(bg)


def draw_counts(p: np.ndarray, shots: int, seed: int, stream: int = 0, offset: int = 0) -> np.ndarray:
    """Binomial(shots, p_k) draws, one independent counter-keyed stream per point."""
    p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
    return np.array([point_rng(seed, stream, offset + k).binomial(shots, pk) for k, pk in enumerate(p)], dtype=np.int64)


def sample_series(series: PopulationSeries, spec: ShotSpec, stream: int = 0) -> PopulationSeries:
    """Replace each probability by k / M with k ~ Binomial(M, p).

    ``stream`` separates independent preparations that share one seed (e.g. the
    +phi and -phi runs of a homodyne pair).

    Raises:
        BadProvenance: the series is already sampled, or is a signed difference.
    """
    if series.provenance == "sampled":
        raise BadProvenance("series is already sampled; refusing to add noise twice")
    if series.signed:
        raise BadProvenance("sample the two underlying populations, then subtract")
    m = int(spec.shots_per_point)
    counts = draw_counts(series.values, m, spec.rng_seed, stream)
    meta = dict(series.metadata)
    meta.update({"shots": m, "seed": int(spec.rng_seed), "stream": int(stream),
                 "source_provenance": series.provenance})
    return PopulationSeries(series.tau, counts / m, series.projector, "sampled", metadata=meta)


def binomial_variance(series: PopulationSeries) -> np.ndarray:
    """Per-point variance estimate for sampled populations (or their difference).

    Uses the (k + 1) / (M + 2) estimate so points with k = 0 or M keep a
    finite weight.
    """
    if series.signed:
        raise BadProvenance("use difference_variance with the two sampled components")
    m = series.metadata.get("shots")
    if m is None:
        raise BadProvenance("series carries no shot count")
    p = (series.values * m + 1) / (m + 2)
    return p * (1 - p) / m


def difference_variance(plus: PopulationSeries, minus: PopulationSeries) -> np.ndarray:
    return binomial_variance(plus) + binomial_variance(minus)
