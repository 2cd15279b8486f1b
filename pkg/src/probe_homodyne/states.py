"""Initial field and probe states.

Field factories return number-basis density matrices truncated at ``n`` levels
per mode. States that leak weight above the cutoff are renormalized, and the
pre-normalization leakage is kept in ``DensityOperator.meta["leakage"]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Union

import numpy as np

from .errors import BadParameter, ShapeMismatch, TruncationLeak
from .opsalg import DensityOperator, HilbertSpace, Operator, QUBIT

DEFAULT_TRUNCATION = 40
LEAKAGE_TOL = 1e-8


# ---------------------------------------------------------------------------
# field specs

@dataclass(frozen=True)
class Fock:
    n: int


@dataclass(frozen=True)
class Coherent:
    alpha: complex


@dataclass(frozen=True)
class Thermal:
    nbar: float


@dataclass(frozen=True)
class SqueezedVacuum:
    r: float
    theta: float = 0.0


@dataclass(frozen=True)
class Cat:
    """(|alpha> + exp(i phase)|-alpha>)/norm; phase 0 is the even cat."""

    alpha: complex
    phase: float = 0.0


@dataclass(frozen=True)
class TwoModeSqueezedVacuum:
    """sech(r) sum_n (-exp(i theta) tanh r)^n |n, n>."""

    r: float
    theta: float = 0.0


@dataclass(frozen=True)
class FockSuperposition:
    """Pure state from number-basis amplitudes, e.g. {(1, 0): 1, (0, 1): 1}.

    Keys are tuples of photon numbers, one per mode. Amplitudes are normalized.
    """

    amplitudes: Mapping[tuple, complex]


@dataclass(frozen=True)
class Product:
    """Tensor product of single-mode specs, mode 1 first."""

    modes: tuple


@dataclass(frozen=True)
class RawMatrix:
    """Externally supplied density matrix in the number basis.

    ``dims`` are the per-mode dimensions of ``matrix``; it is embedded into the
    requested truncation.
    """

    matrix: np.ndarray
    dims: tuple[int, ...] = ()

    def __hash__(self):
        return id(self)


FieldStateSpec = Union[
    Fock, Coherent, Thermal, SqueezedVacuum, Cat, TwoModeSqueezedVacuum, FockSuperposition, Product, RawMatrix
]


def n_modes(spec: FieldStateSpec) -> int:
    if isinstance(spec, TwoModeSqueezedVacuum):
        return 2
    if isinstance(spec, Product):
        return sum(n_modes(m) for m in spec.modes)
    if isinstance(spec, FockSuperposition):
        return len(next(iter(spec.amplitudes)))
    if isinstance(spec, RawMatrix):
        return max(1, len(spec.dims))
    return 1


# ---------------------------------------------------------------------------
# amplitude helpers

def coherent_amplitudes(alpha: complex, n: int) -> np.ndarray:
    c = np.empty(n, dtype=complex)
    c[0] = math.exp(-abs(alpha) ** 2 / 2)
    for k in range(1, n):
        c[k] = c[k - 1] * alpha / math.sqrt(k)
    return c


def squeezed_vacuum_amplitudes(r: float, theta: float, n: int) -> np.ndarray:
    c = np.zeros(n, dtype=complex)
    c[0] = 1 / math.sqrt(math.cosh(r))
    z = -np.exp(1j * theta) * math.tanh(r)
    for k in range(2, n, 2):
        c[k] = c[k - 2] * z * math.sqrt((k - 1) / k)
    return c


def cat_amplitudes(alpha: complex, phase: float, n: int) -> np.ndarray:
    norm2 = 2 * (1 + math.cos(phase) * math.exp(-2 * abs(alpha) ** 2))
    if norm2 < 1e-14:
        raise BadParameter("cat state with vanishing norm (alpha = 0 and odd parity)")
    coh = coherent_amplitudes(alpha, n)
    parity = (-1.0) ** np.arange(n)
    return coh * (1 + np.exp(1j * phase) * parity) / math.sqrt(norm2)


def _check_finite(*values) -> None:
    for v in values:
        if not np.all(np.isfinite(np.asarray(v, dtype=complex))):
            raise BadParameter(f"non-finite state parameter {v!r}")


def _pure_from_amplitudes(c: np.ndarray, space: HilbertSpace, leak_tol: float, what: str) -> DensityOperator:
    weight = float(np.sum(np.abs(c) ** 2))
    leakage = max(0.0, 1.0 - weight)
    if leakage > leak_tol:
        raise TruncationLeak(f"{what}: leakage {leakage:.3e} above cutoff exceeds {leak_tol:.1e}; raise the truncation")
    c = c / math.sqrt(weight)
    return DensityOperator.from_matrix(space, np.outer(c, c.conj()), meta={"leakage": leakage, "state": what})


def build_field(spec: FieldStateSpec, n: int = DEFAULT_TRUNCATION, leakage_tol: float = LEAKAGE_TOL) -> DensityOperator:
    """Density matrix of ``spec`` truncated to ``n`` Fock levels per mode.

    Raises:
        TruncationLeak: pure closed-form states (coherent, squeezed, cat, TMSV)
            whose weight above the cutoff exceeds ``leakage_tol``.
        BadParameter: invalid or non-finite parameters.
    """
    if n < 2:
        raise BadParameter(f"truncation must be >= 2, got {n}")
    one = HilbertSpace.build(modes=(n,))
    two = HilbertSpace.build(modes=(n, n))

    if isinstance(spec, Fock):
        if not 0 <= spec.n < n:
            raise BadParameter(f"Fock({spec.n}) does not fit truncation {n}")
        c = np.zeros(n)
        c[spec.n] = 1
        return _pure_from_amplitudes(c, one, leakage_tol, f"Fock({spec.n})")

    if isinstance(spec, Coherent):
        _check_finite(spec.alpha)
        return _pure_from_amplitudes(coherent_amplitudes(complex(spec.alpha), n), one, leakage_tol, f"Coherent({spec.alpha})")

    if isinstance(spec, Thermal):
        _check_finite(spec.nbar)
        if spec.nbar < 0:
            raise BadParameter("thermal occupation must be >= 0")
        if spec.nbar == 0:
            p = np.zeros(n)
            p[0] = 1.0
            leakage = 0.0
        else:
            q = spec.nbar / (1 + spec.nbar)
            p = q ** np.arange(n) / (1 + spec.nbar)
            leakage = q ** n
        return DensityOperator.from_matrix(
            one, np.diag(p / p.sum()), meta={"leakage": float(leakage), "state": f"Thermal({spec.nbar})"}
        )

    if isinstance(spec, SqueezedVacuum):
        _check_finite(spec.r, spec.theta)
        c = squeezed_vacuum_amplitudes(spec.r, spec.theta, n)
        return _pure_from_amplitudes(c, one, leakage_tol, f"SqueezedVacuum({spec.r}, {spec.theta})")

    if isinstance(spec, Cat):
        _check_finite(spec.alpha, spec.phase)
        c = cat_amplitudes(complex(spec.alpha), spec.phase, n)
        return _pure_from_amplitudes(c, one, leakage_tol, f"Cat({spec.alpha}, {spec.phase})")

    if isinstance(spec, TwoModeSqueezedVacuum):
        _check_finite(spec.r, spec.theta)
        z = -np.exp(1j * spec.theta) * math.tanh(spec.r)
        c = np.zeros((n, n), dtype=complex)
        c[np.arange(n), np.arange(n)] = z ** np.arange(n) / math.cosh(spec.r)
        return _pure_from_amplitudes(c.ravel(), two, leakage_tol, f"TMSV({spec.r}, {spec.theta})")

    if isinstance(spec, FockSuperposition):
        keys = list(spec.amplitudes)
        k = len(keys[0])
        if any(len(key) != k for key in keys):
            raise BadParameter("all Fock keys need the same number of modes")
        c = np.zeros((n,) * k, dtype=complex)
        for key, amp in spec.amplitudes.items():
            if any(not 0 <= x < n for x in key):
                raise BadParameter(f"Fock key {key} does not fit truncation {n}")
            c[tuple(key)] = amp
        norm = np.linalg.norm(c)
        if norm == 0:
            raise BadParameter("all amplitudes are zero")
        return _pure_from_amplitudes(c.ravel() / norm, HilbertSpace.build(modes=(n,) * k), leakage_tol, "FockSuperposition")

    if isinstance(spec, Product):
        parts = [build_field(m, n, leakage_tol) for m in spec.modes]
        out = parts[0]
        for p in parts[1:]:
            out = compose(out, p)
        leak = 1.0 - math.prod(1.0 - p.meta.get("leakage", 0.0) for p in parts)
        return DensityOperator(out.op, meta={"leakage": leak, "state": "Product"}, validate=False)

    if isinstance(spec, RawMatrix):
        return _embed_raw(spec, n)

    raise BadParameter(f"unknown field spec {spec!r}")


def _embed_raw(spec: RawMatrix, n: int) -> DensityOperator:
    m = np.asarray(spec.matrix, dtype=complex)
    dims = tuple(spec.dims) or (m.shape[0],)
    if int(np.prod(dims)) != m.shape[0] or m.shape[0] != m.shape[1]:
        raise ShapeMismatch(f"raw matrix shape {m.shape} does not match dims {dims}")
    k = len(dims)
    t = m.reshape(dims + dims)
    keep = tuple(slice(0, min(d, n)) for d in dims)
    inner = t[keep + keep]
    full_tr = np.trace(m).real
    if full_tr <= 0:
        raise BadParameter("raw matrix has non-positive trace")
    out = np.zeros((n,) * (2 * k), dtype=complex)
    out[tuple(slice(0, s) for s in inner.shape)] = inner
    d = n ** k
    out = out.reshape(d, d)
    kept = np.trace(out).real
    leakage = max(0.0, 1.0 - kept / full_tr)
    return DensityOperator.from_matrix(
        HilbertSpace.build(modes=(n,) * k), out / kept, meta={"leakage": leakage, "state": "RawMatrix"}
    )


def read_raw_matrix(path: Union[str, Path]) -> RawMatrix:
    return parse_raw_matrix(Path(path).read_text())


def parse_raw_matrix(text: str) -> RawMatrix:
    """Parse a plain-text table of ``row col real imag`` lines.

    An optional ``# dims: d1 [d2]`` comment declares per-mode dimensions;
    otherwise the matrix is single-mode and sized from the largest index.
    """
    dims = None
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("dims:"):
                dims = tuple(int(x) for x in body[5:].split())
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 4:
            raise BadParameter(f"line {lineno}: expected 'row col real imag', got {raw!r}")
        rows.append((int(parts[0]), int(parts[1]), float(parts[2]), float(parts[3])))
    if not rows:
        raise BadParameter("raw matrix table is empty")
    size = int(np.prod(dims)) if dims else 1 + max(max(r, c) for r, c, _, _ in rows)
    m = np.zeros((size, size), dtype=complex)
    for r, c, re, im in rows:
        m[r, c] = re + 1j * im
    return RawMatrix(m, dims or (size,))


def random_field(n: int, support: int = 6, seed: int = 0, rank: int | None = None) -> DensityOperator:
    """Random mixed single-mode state supported on the lowest ``support`` levels."""
    rng = np.random.default_rng(seed)
    support = min(support, n)
    rank = rank or support
    g = rng.normal(size=(support, rank)) + 1j * rng.normal(size=(support, rank))
    r = g @ g.conj().T
    m = np.zeros((n, n), dtype=complex)
    m[:support, :support] = r / np.trace(r).real
    return DensityOperator.from_matrix(HilbertSpace.build(modes=(n,)), m, meta={"leakage": 0.0, "state": f"random({seed})"})


# ---------------------------------------------------------------------------
# probe specs

@dataclass(frozen=True)
class ProbeStateSpec:
    """One of: ground, excited, plus, minus, bell_plus, bell_minus, psi_plus.

    ``phase`` is phi for plus/minus and theta for the Bell states.
    """

    kind: str
    phase: float = 0.0

    @property
    def n_qubits(self) -> int:
        return 2 if self.kind in ("bell_plus", "bell_minus", "psi_plus") else 1

    def label(self) -> str:
        if self.kind in ("ground", "excited", "psi_plus"):
            return self.kind
        return f"{self.kind}({self.phase + 0.0:.6g})"


def Ground() -> ProbeStateSpec:
    return ProbeStateSpec("ground")


def Excited() -> ProbeStateSpec:
    return ProbeStateSpec("excited")


def PlusPhi(phi: float) -> ProbeStateSpec:
    return ProbeStateSpec("plus", phi)


def MinusPhi(phi: float) -> ProbeStateSpec:
    return ProbeStateSpec("minus", phi)


def BellPhiPlus(theta: float) -> ProbeStateSpec:
    return ProbeStateSpec("bell_plus", theta)


def BellPhiMinus(theta: float) -> ProbeStateSpec:
    return ProbeStateSpec("bell_minus", theta)


def PsiPlus() -> ProbeStateSpec:
    return ProbeStateSpec("psi_plus")


_G = np.array([1, 0], dtype=complex)
_E = np.array([0, 1], dtype=complex)


def probe_vector(spec: ProbeStateSpec) -> np.ndarray:
    k, ph = spec.kind, spec.phase
    if k == "ground":
        return _G.copy()
    if k == "excited":
        return _E.copy()
    if k in ("plus", "minus"):
        s = 1 if k == "plus" else -1
        return (_G + s * np.exp(1j * ph) * _E) / math.sqrt(2)
    if k in ("bell_plus", "bell_minus"):
        s = 1 if k == "bell_plus" else -1
        return (np.kron(_G, _G) + s * np.exp(1j * ph) * np.kron(_E, _E)) / math.sqrt(2)
    if k == "psi_plus":
        return (np.kron(_G, _E) + np.kron(_E, _G)) / math.sqrt(2)
    raise BadParameter(f"unknown probe state {k!r}")


def build_probe(spec: ProbeStateSpec) -> DensityOperator:
    v = probe_vector(spec)
    space = HilbertSpace((2,) * spec.n_qubits, (QUBIT,) * spec.n_qubits)
    return DensityOperator.pure(space, v, meta={"probe": spec.label()})


def compose(probe: DensityOperator, *fields: DensityOperator) -> DensityOperator:
    """Joint state probe (x) field_1 (x) ... in the fixed subsystem order."""
    out_space = probe.space
    m = probe.matrix
    for f in fields:
        try:
            out_space = out_space * f.space
        except ValueError as exc:
            raise ShapeMismatch(str(exc)) from exc
        m = np.kron(m, f.matrix)
    meta = {}
    for f in fields:
        meta.update(f.meta)
    return DensityOperator(Operator(out_space, m), meta=meta, validate=False)
