"""Ground-truth field moments from a known density matrix.

Every observable is available two ways: :func:`direct_moment` takes an
operator trace, :func:`series_moment` sums number-basis matrix elements
explicitly. The two share no code beyond index bookkeeping.

Conventions. Single-mode quadratures:
    X_phi = (a e^{-i phi} + a^dag e^{i phi}) / 2,   Y_phi = X_{phi + pi/2}.
Two-mode quadratures (mode j at phase phi_j):
    X_j = (a_j^dag e^{-i phi_j} + a_j e^{i phi_j}) / 2,
    Y_j = i (a_j^dag e^{-i phi_j} - a_j e^{i phi_j}) / 2,
so X_j at phi_j equals the single-mode X at -phi_j. Correlators:
    A = a1^dag a2 e^{-i(phi1 - phi2)} + h.c.,  B = a1^dag a2^dag e^{-i(phi1 + phi2)} + h.c.
EPR combinations for the Duan test use x_j = sqrt(2) X_j (vacuum variance 1/2):
    u = a0 x1 - s1 x2 / a0,  v = a0 y1 - s2 y2 / a0.
Squared quadratures use the normal-ordered form a a^dag = a^dag a + 1, so the
hard truncation does not distort them at the top level.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import BadParameter, ShapeMismatch
from .opsalg import DensityOperator, Operator, destroy, embed, expectation, number, partial_trace

SINGLE_MODE = ("X", "Y", "n", "X2", "Y2", "VarX", "VarY")
TWO_MODE = ("A", "B", "X_two_mode", "Y_two_mode", "X2_two_mode", "Y2_two_mode",
            "X1X2", "Y1Y2", "VarU", "VarV", "DuanSum")
OBSERVABLES = SINGLE_MODE + TWO_MODE


def _mode_state(rho: DensityOperator, mode: int | None) -> DensityOperator:
    k = len(rho.space.dims)
    if mode is None:
        if k != 1:
            raise ShapeMismatch("single-mode observable on a multi-mode state needs mode=")
        return rho
    if not 0 <= mode < k:
        raise ShapeMismatch(f"mode {mode} out of range for {k}-mode state")
    return partial_trace(rho, [mode])


def _require_two_modes(rho: DensityOperator) -> None:
    if len(rho.space.dims) != 2:
        raise ShapeMismatch("two-mode observable needs a two-mode field state")


# ---------------------------------------------------------------------------
# operator-trace route

def _single_ops(n: int, phi: float):
    a = destroy(n)
    ad = a.dag
    e = np.exp(-1j * phi)
    x = 0.5 * (a * e + ad * np.conj(e))
    y = (a * e - ad * np.conj(e)) * (1 / 2j)
    nn = number(n)
    half = Operator(a.space, 0.5 * np.eye(n))
    sq = (a @ a) * e ** 2
    x2 = 0.25 * (sq + sq.dag) + 0.5 * nn + half * 0.5
    y2 = -0.25 * (sq + sq.dag) + 0.5 * nn + half * 0.5
    return x, y, nn, x2, y2


def _two_mode_ops(rho: DensityOperator, phi1: float, phi2: float):
    sp = rho.space
    a1 = embed(destroy(sp.dims[0]), sp, 0)
    a2 = embed(destroy(sp.dims[1]), sp, 1)
    e1, e2 = np.exp(-1j * phi1), np.exp(-1j * phi2)
    x1 = 0.5 * (a1.dag * e1 + a1 * np.conj(e1))
    x2 = 0.5 * (a2.dag * e2 + a2 * np.conj(e2))
    y1 = 0.5j * (a1.dag * e1 - a1 * np.conj(e1))
    y2 = 0.5j * (a2.dag * e2 - a2 * np.conj(e2))
    ap = a1.dag @ a2 * np.exp(-1j * (phi1 - phi2))
    bp = a1.dag @ a2.dag * np.exp(-1j * (phi1 + phi2))
    return x1, x2, y1, y2, ap + ap.dag, bp + bp.dag


def _trace_single(rho: DensityOperator, name: str, phi: float) -> float:
    x, y, nn, x2, y2 = _single_ops(rho.dim, phi)
    if name == "X":
        return expectation(rho, x)
    if name == "Y":
        return expectation(rho, y)
    if name == "n":
        return expectation(rho, nn)
    if name == "X2":
        return expectation(rho, x2)
    if name == "Y2":
        return expectation(rho, y2)
    if name == "VarX":
        return expectation(rho, x2) - expectation(rho, x) ** 2
    if name == "VarY":
        return expectation(rho, y2) - expectation(rho, y) ** 2
    raise BadParameter(f"unknown single-mode observable {name!r}")


def _two_mode_from_parts(rho, name, phi1, phi2, a0, signs, first, second, cross) -> float:
    """Assemble two-mode observables from per-mode moments and A, B.

    ``first(j, q)`` gives <X_j> or <Y_j>, ``second(j, q)`` gives <X_j^2> or
    <Y_j^2> in the two-mode phase convention, ``cross(c)`` gives <A> or <B>.
    """
    A, B = cross("A"), cross("B")
    if name == "A":
        return A
    if name == "B":
        return B
    xx = 0.25 * (A + B)
    yy = 0.25 * (A - B)
    if name == "X1X2":
        return xx
    if name == "Y1Y2":
        return yy
    if name == "X_two_mode":
        return first(0, "X") + first(1, "X")
    if name == "Y_two_mode":
        return first(0, "Y") + first(1, "Y")
    if name == "X2_two_mode":
        return second(0, "X") + second(1, "X") + 2 * xx
    if name == "Y2_two_mode":
        return second(0, "Y") + second(1, "Y") + 2 * yy
    s1, s2 = signs
    var_u = 2 * (a0 ** 2 * (second(0, "X") - first(0, "X") ** 2) + (second(1, "X") - first(1, "X") ** 2) / a0 ** 2
                 - 2 * s1 * (xx - first(0, "X") * first(1, "X")))
    var_v = 2 * (a0 ** 2 * (second(0, "Y") - first(0, "Y") ** 2) + (second(1, "Y") - first(1, "Y") ** 2) / a0 ** 2
                 - 2 * s2 * (yy - first(0, "Y") * first(1, "Y")))
    if name == "VarU":
        return var_u
    if name == "VarV":
        return var_v
    if name == "DuanSum":
        return var_u + var_v
    raise BadParameter(f"unknown two-mode observable {name!r}")


def direct_moment(rho_f: DensityOperator, observable: str, phi: float = 0.0, *, phi1: float = 0.0,
                  phi2: float = 0.0, mode: int | None = None, a0: float = 1.0, signs=(1, 1)) -> float:
    """Tr(rho_f O) for a named field observable, built from ladder operators.

    Single-mode observables take ``phi`` (and ``mode`` on a multi-mode state);
    two-mode observables take ``phi1``, ``phi2`` and, for the Duan quantities,
    ``a0`` and ``signs`` = (c1/|c1|, c2/|c2|).
    """
    if observable in SINGLE_MODE:
        return float(_trace_single(_mode_state(rho_f, mode), observable, phi))
    if observable not in TWO_MODE:
        raise BadParameter(f"unknown observable {observable!r}")
    _require_two_modes(rho_f)
    x1, x2, y1, y2, a_op, b_op = _two_mode_ops(rho_f, phi1, phi2)
    ops = {(0, "X"): x1, (1, "X"): x2, (0, "Y"): y1, (1, "Y"): y2}

    def first(j, q):
        return expectation(rho_f, ops[(j, q)])

    def second(j, q):
        return expectation(rho_f, ops[(j, q)] @ ops[(j, q)]) - _top_correction(rho_f, j)

    def cross(c):
        return expectation(rho_f, a_op if c == "A" else b_op)

    return float(_two_mode_from_parts(rho_f, observable, phi1, phi2, a0, signs, first, second, cross))


def _top_correction(rho: DensityOperator, j: int) -> float:
    # the truncated a a^dag misses N at the top level; restore the normal-ordered value
    red = partial_trace(rho, [j]).matrix
    n = red.shape[0]
    return -0.25 * n * float(np.real(red[-1, -1]))


# ---------------------------------------------------------------------------
# matrix-element-sum route

def _coh(r: np.ndarray, shift: int) -> tuple[np.ndarray, np.ndarray]:
    """(sqrt((n+1)...(n+shift)), rho_{n,n+shift}) over all valid n."""
    n = np.arange(r.shape[0] - shift)
    w = np.ones(n.size)
    for s in range(1, shift + 1):
        w = w * (n + s)
    return np.sqrt(w), r[n, n + shift]


def _series_single(r: np.ndarray, name: str, phi: float) -> float:
    e = np.exp(1j * phi)
    w1, c1 = _coh(r, 1)
    w2, c2 = _coh(r, 2)
    up1 = np.sum(w1 * c1)          # sum sqrt(n+1) rho_{n,n+1}
    up2 = np.sum(w2 * c2)          # sum sqrt((n+1)(n+2)) rho_{n,n+2}
    nbar = float(np.real(np.sum(np.arange(r.shape[0]) * np.diag(r))))
    x = 0.5 * (e * up1 + np.conj(e * up1))
    y = 0.5j * (e * up1 - np.conj(e * up1))
    quad = 0.25 * (e ** 2 * up2 + np.conj(e ** 2 * up2))
    x2 = 0.25 + nbar / 2 + quad
    y2 = 0.25 + nbar / 2 - quad
    vals = {"X": x, "Y": y, "n": nbar, "X2": x2, "Y2": y2, "VarX": x2 - x ** 2, "VarY": y2 - y ** 2}
    if name not in vals:
        raise BadParameter(f"unknown single-mode observable {name!r}")
    return float(np.real(vals[name]))


def _cross_sums(t: np.ndarray) -> tuple[complex, complex]:
    """<a1 a2^dag> and <a1^dag a2^dag> as explicit element sums over rho_{n1 n2; m1 m2}."""
    d1, d2 = t.shape[0], t.shape[1]
    ex, sq = 0j, 0j
    for n1 in range(d1):
        for n2 in range(d2):
            if n1 + 1 < d1 and n2 >= 1:
                ex += math.sqrt((n1 + 1) * n2) * t[n1 + 1, n2 - 1, n1, n2]
            if n1 + 1 < d1 and n2 + 1 < d2:
                sq += math.sqrt((n1 + 1) * (n2 + 1)) * t[n1, n2, n1 + 1, n2 + 1]
    return ex, sq


def series_moment(rho_f: DensityOperator, observable: str, phi: float = 0.0, *, phi1: float = 0.0,
                  phi2: float = 0.0, mode: int | None = None, a0: float = 1.0, signs=(1, 1)) -> float:
    """Same observables as :func:`direct_moment`, from explicit rho_{n,m} sums."""
    if observable in SINGLE_MODE:
        return _series_single(_mode_state(rho_f, mode).matrix, observable, phi)
    if observable not in TWO_MODE:
        raise BadParameter(f"unknown observable {observable!r}")
    _require_two_modes(rho_f)
    d = rho_f.space.dims
    t = rho_f.matrix.reshape(d + d)
    ex, sq = _cross_sums(t)       # <a1 a2^dag>, <a1^dag a2^dag>
    reduced = [partial_trace(rho_f, [j]).matrix for j in (0, 1)]
    phis = (phi1, phi2)

    def first(j, q):
        # two-mode convention at phi_j is the single-mode one at -phi_j
        return _series_single(reduced[j], q, -phis[j])

    def second(j, q):
        return _series_single(reduced[j], q + "2", -phis[j])

    def cross(c):
        if c == "A":
            return 2 * float(np.real(np.exp(1j * (phi1 - phi2)) * ex))
        return 2 * float(np.real(np.exp(-1j * (phi1 + phi2)) * sq))

    return float(_two_mode_from_parts(rho_f, observable, phi1, phi2, a0, signs, first, second, cross))
