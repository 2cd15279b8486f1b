"""First and second derivatives at tau = 0 of probe population data.

Four estimators share one entry point, :func:`derivative_at_zero`:

``central_fd``
    2nd- or 4th-order central stencils.
``richardson``
    Central differences over successive step halvings, extrapolated in h^2.
``polyfit``
    Weighted least-squares polynomial on a window around 0 (Savitzky-Golay
    style, evaluated at the window centre only).
``kernel_integral``
    Trapezoid quadrature of the data against a Gaussian-mollified -delta'
    (order 1) or delta'' (order 2), optionally extrapolated in sigma^2.

Sources are either callables tau -> P(tau) or gridded :class:`PopulationSeries`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Union

import numpy as np

from .errors import AsymmetricGrid, BadParameter, IllConditionedFit, WindowTooSmall
from .evolution import PopulationSeries

METHODS = ("central_fd", "richardson", "polyfit", "kernel_integral")
EPS = np.finfo(float).eps

Source = Union[Callable, PopulationSeries]


@dataclass(frozen=True)
class DerivativeEstimate:
    value: float
    order: int
    method: str
    step_or_width: float
    error_estimate: float
    details: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.step_or_width <= 0:
            raise BadParameter("step_or_width must be positive")
        if not self.error_estimate >= 0:
            raise BadParameter("error_estimate must be non-negative")
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "step_or_width", float(self.step_or_width))
        object.__setattr__(self, "error_estimate", float(self.error_estimate))

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "order": self.order,
            "method": self.method,
            "step_or_width": self.step_or_width,
            "error_estimate": self.error_estimate,
            **{k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in self.details.items()},
        }


# ---------------------------------------------------------------------------
# central differences

_STENCILS = {
    (1, 2): ([-1, 1], [-0.5, 0.5]),
    (1, 4): ([-2, -1, 1, 2], [1 / 12, -8 / 12, 8 / 12, -1 / 12]),
    (2, 2): ([-1, 0, 1], [1.0, -2.0, 1.0]),
    (2, 4): ([-2, -1, 0, 1, 2], [-1 / 12, 16 / 12, -30 / 12, 16 / 12, -1 / 12]),
}


def _stencil(f: Callable, order: int, accuracy: int, h: float) -> tuple[float, float]:
    offsets, coefs = _STENCILS[(order, accuracy)]
    vals = np.asarray(f(np.array(offsets, dtype=float) * h), dtype=float)
    return float(np.dot(coefs, vals)) / h ** order, float(np.max(np.abs(vals)))


def _roundoff(scale: float, h: float, order: int) -> float:
    return 50 * EPS * max(scale, 1.0) / h ** order


def central_fd(f: Callable, order: int, step: float = 1e-3, accuracy: int = 2) -> DerivativeEstimate:
    if (order, accuracy) not in _STENCILS:
        raise BadParameter(f"no stencil for order {order}, accuracy {accuracy}")
    value, scale = _stencil(f, order, accuracy, step)
    other = 4 if accuracy == 2 else 2
    alt, _ = _stencil(f, order, other, step)
    err = abs(value - alt) + _roundoff(scale, step, order)
    return DerivativeEstimate(value, order, "central_fd", step, err, {"accuracy": accuracy})


def _grid_lookup(series: PopulationSeries, offsets: np.ndarray) -> np.ndarray:
    tau = series.tau
    scale = max(1.0, float(np.max(np.abs(tau))))
    idx = []
    for t in offsets:
        j = int(np.argmin(np.abs(tau - t)))
        if abs(tau[j] - t) > 1e-9 * scale:
            raise WindowTooSmall(f"grid has no point at tau = {t:.6g} needed by the stencil")
        idx.append(j)
    return series.values[idx]


def central_fd_grid(series: PopulationSeries, order: int, step: float, accuracy: int = 2) -> DerivativeEstimate:
    """Central stencil on an existing grid; the grid must contain 0 and +-k*step."""
    if (order, accuracy) not in _STENCILS:
        raise BadParameter(f"no stencil for order {order}, accuracy {accuracy}")
    offsets, coefs = _STENCILS[(order, accuracy)]
    vals = _grid_lookup(series, np.array(offsets, dtype=float) * step)
    value = float(np.dot(coefs, vals)) / step ** order
    err = _roundoff(float(np.max(np.abs(vals))), step, order)
    var = _series_variance(series)
    if var is not None:
        idx = [int(np.argmin(np.abs(series.tau - t))) for t in np.array(offsets, dtype=float) * step]
        err += float(math.sqrt(np.dot(np.square(coefs), var[idx]))) / step ** order
    return DerivativeEstimate(value, order, "central_fd", step, err, {"accuracy": accuracy, "gridded": True})


def _series_variance(series: PopulationSeries) -> np.ndarray | None:
    """Per-point variance of sampled data, or None for noiseless series."""
    from .sampling import binomial_variance

    if "variance" in series.metadata:
        return np.asarray(series.metadata["variance"], dtype=float)
    if series.provenance == "sampled" and not series.signed:
        return binomial_variance(series)
    return None


# ---------------------------------------------------------------------------
# Richardson extrapolation

def richardson(f: Callable, order: int, step: float = 0.1, levels: int = 5) -> DerivativeEstimate:
    """Central differences at step, step/2, ..., extrapolated in powers of h^2.

    The error estimate is the last tableau correction plus a roundoff floor at
    the finest step.
    """
    if levels < 4:
        raise BadParameter("richardson needs at least three halvings (levels >= 4)")
    table = np.zeros((levels, levels))
    scale = 0.0
    for i in range(levels):
        h = step / 2 ** i
        table[i, 0], s = _stencil(f, order, 2, h)
        scale = max(scale, s)
        for j in range(1, i + 1):
            table[i, j] = table[i, j - 1] + (table[i, j - 1] - table[i - 1, j - 1]) / (4 ** j - 1)
    value = float(table[-1, -1])
    err = abs(value - float(table[-1, -2])) + _roundoff(scale, step / 2 ** (levels - 1), order)
    return DerivativeEstimate(value, order, "richardson", step, err, {"levels": levels})


# ---------------------------------------------------------------------------
# local polynomial fit

def _series_arrays(source, window: float) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    if not isinstance(source, PopulationSeries):
        raise BadParameter("polyfit needs a gridded series")
    tau, vals = source.tau, source.values
    var = _series_variance(source)
    mask = np.abs(tau) <= window * (1 + 1e-12)
    var = None if var is None else var[mask]
    return tau[mask], vals[mask], var


def _fit(s: np.ndarray, y: np.ndarray, wt: np.ndarray, degree: int):
    v = np.vander(s, degree + 1, increasing=True)
    sw = np.sqrt(wt)
    a = v * sw[:, None]
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > 1e12:
        raise IllConditionedFit(f"fit matrix condition number {cond:.2e}")
    coef, *_ = np.linalg.lstsq(a, y * sw, rcond=None)
    resid = y - v @ coef
    return coef, resid, a


def polyfit(series: PopulationSeries, order: int, window: float = 0.3, degree: int = 4,
            weighted: bool = True) -> DerivativeEstimate:
    """Derivative from a least-squares polynomial fitted on |tau| <= window.

    Sampled data are weighted by their binomial variance when ``weighted``.
    The error estimate combines the coefficient standard error with the shift
    obtained by raising the degree by two (a truncation-bias proxy).

    Raises:
        WindowTooSmall: fewer than degree + 2 points inside the window.
        IllConditionedFit: the scaled design matrix is numerically singular.
    """
    if degree < order:
        raise BadParameter("polynomial degree must be at least the derivative order")
    tau, y, var = _series_arrays(series, window)
    if tau.size < degree + 2:
        raise WindowTooSmall(f"{tau.size} points in window {window}; need at least {degree + 2}")
    s = tau / window
    wt = np.ones_like(s) if (var is None or not weighted) else 1.0 / np.maximum(var, 1e-300)
    wt = wt / wt.max()
    coef, resid, a = _fit(s, y, wt, degree)
    fact = math.factorial(order) / window ** order
    value = float(coef[order] * fact)

    dof = tau.size - degree - 1
    rss = float(np.sum(wt * resid ** 2))
    cov = np.linalg.pinv(a.T @ a)
    if var is not None and weighted:
        # weights were normalized; restore absolute variance scale
        unit = float(np.max(1.0 / np.maximum(var, 1e-300)))
        sigma2 = max(1.0, rss * unit / dof) / unit if dof > 0 else 1.0 / unit
    else:
        sigma2 = rss / dof if dof > 0 else 0.0
    stat = math.sqrt(max(cov[order, order] * sigma2, 0.0)) * fact

    bias = 0.0
    if tau.size >= degree + 4:
        try:
            coef2, _, _ = _fit(s, y, wt, degree + 2)
            bias = abs(float(coef2[order] * fact) - value)
        except IllConditionedFit:
            pass
    err = math.hypot(stat, bias) + _roundoff(float(np.max(np.abs(y), initial=0.0)), window, order)
    details = {
        "degree": degree,
        "n_points": int(tau.size),
        "residual_rms": float(math.sqrt(np.mean(resid ** 2))),
        "weighted": bool(var is not None and weighted),
    }
    return DerivativeEstimate(value, order, "polyfit", window, err, details)


# ---------------------------------------------------------------------------
# mollified delta-derivative kernels

def gaussian_kernel(tau: np.ndarray, sigma: float, order: int) -> np.ndarray:
    """(-1)^order d^order/dtau^order of a unit-area Gaussian of width sigma."""
    g = np.exp(-0.5 * (tau / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))
    if order == 1:
        return tau / sigma ** 2 * g
    if order == 2:
        return (tau ** 2 / sigma ** 4 - 1 / sigma ** 2) * g
    raise BadParameter("kernel order must be 1 or 2")


KERNEL_REACH = 8.0
KERNEL_POINTS_PER_SIGMA = 40


def _kernel_on_grid(tau: np.ndarray, vals: np.ndarray, sigma: float, order: int) -> float:
    return float(np.trapezoid(gaussian_kernel(tau, sigma, order) * vals, tau))


def _kernel_single(source, sigma: float, order: int) -> float:
    if isinstance(source, PopulationSeries):
        tau = source.tau
        if tau.size < 3:
            raise WindowTooSmall("series too short for a kernel integral")
        scale = max(1.0, float(np.max(np.abs(tau))))
        if np.max(np.abs(tau + tau[::-1])) > 1e-9 * scale:
            raise AsymmetricGrid("kernel integral needs a grid symmetric about tau = 0")
        if tau[-1] < 6 * sigma:
            raise WindowTooSmall(f"grid reaches {tau[-1]:.3g} < 6 sigma = {6 * sigma:.3g}")
        if np.max(np.diff(tau)) > sigma / 4:
            raise WindowTooSmall(f"grid spacing too coarse for sigma = {sigma:.3g}")
        return _kernel_on_grid(tau, source.values, sigma, order)
    half = int(KERNEL_REACH * KERNEL_POINTS_PER_SIGMA)
    tau = np.linspace(-KERNEL_REACH * sigma, KERNEL_REACH * sigma, 2 * half + 1)
    return _kernel_on_grid(tau, np.asarray(source(tau), dtype=float), sigma, order)


def kernel_integral(source: Source, order: int, width: float = 0.1, halvings: int = 0) -> DerivativeEstimate:
    """Integral of the data against a Gaussian-smoothed delta-derivative kernel.

    With ``halvings = 0`` this is the raw mollified estimator, biased by
    O(width^2). With ``halvings = k`` the widths width / 2^j, j = 0..k, are
    extrapolated to zero width in powers of width^2.
    """
    sigmas = [width / 2 ** j for j in range(halvings + 1)]
    raw = [_kernel_single(source, s, order) for s in sigmas]
    if halvings == 0:
        # leading bias ~ c sigma^2: estimate it from one extra halving
        try:
            half = _kernel_single(source, width / 2, order)
            err = abs(raw[0] - half) * 4 / 3
        except (WindowTooSmall, AsymmetricGrid):
            err = 0.0
        return DerivativeEstimate(raw[0], order, "kernel_integral", width, err + EPS, {"halvings": 0})
    n = len(raw)
    table = np.zeros((n, n))
    table[:, 0] = raw
    for i in range(1, n):
        for j in range(1, i + 1):
            table[i, j] = table[i, j - 1] + (table[i, j - 1] - table[i - 1, j - 1]) / (4 ** j - 1)
    value = float(table[-1, -1])
    err = abs(value - float(table[-1, -2])) + 1e3 * EPS
    return DerivativeEstimate(value, order, "kernel_integral", width, err, {"halvings": halvings, "raw": raw})


# ---------------------------------------------------------------------------

def derivative_at_zero(source: Source, order: int, method: str = "richardson", step_or_width: float | None = None,
                       **options) -> DerivativeEstimate:
    """d^order P / d tau^order at tau = 0.

    Args:
        source: callable tau -> P(tau) (central_fd, richardson, kernel_integral)
            or a gridded series (central_fd on grid points, polyfit,
            kernel_integral on a symmetric grid).
        order: 1 or 2.
        method: one of ``central_fd``, ``richardson``, ``polyfit``,
            ``kernel_integral``.
        step_or_width: finite-difference step, initial Richardson step,
            polyfit half-window, or kernel width sigma. Method defaults apply
            when omitted.
        **options: ``accuracy`` (central_fd), ``levels`` (richardson),
            ``degree`` and ``weighted`` (polyfit), ``halvings``
            (kernel_integral).
    """
    if order not in (1, 2):
        raise BadParameter("derivative order must be 1 or 2")
    gridded = isinstance(source, PopulationSeries)
    if method == "central_fd":
        step = step_or_width or 1e-3
        if gridded:
            return central_fd_grid(source, order, step, options.get("accuracy", 2))
        return central_fd(source, order, step, options.get("accuracy", 2))
    if method == "richardson":
        if gridded:
            raise BadParameter("richardson needs a source evaluable at arbitrary tau")
        return richardson(source, order, step_or_width or 0.1, options.get("levels", 5))
    if method == "polyfit":
        if not gridded:
            raise BadParameter("polyfit needs a gridded series")
        return polyfit(source, order, step_or_width or 0.3, options.get("degree", 4), options.get("weighted", True))
    if method == "kernel_integral":
        return kernel_integral(source, order, step_or_width or 0.1, options.get("halvings", 0))
    raise BadParameter(f"unknown method {method!r}; expected one of {METHODS}")
