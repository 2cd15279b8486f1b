"""Probe population time series: unitary, closed-form, and Lindblad.

Sign and phase conventions of the closed-form difference series:

* ``JC1_homodyne``: P_e(+phi) - P_e(-phi) under JC1, probe phase ``phi``.
* ``JC2_homodyne``: P_g(+phi) - P_g(-phi) under JC2, probe phase ``phi``.
* ``TwoAtom``: P_psi+(phi+_theta) - P_psi+(phi-_theta) under the two-atom JC.
* ``ModeA`` / ``ModeB``: P_e(+phi) - P_e(-phi) under H_A / H_B, probe phase ``phi``.

Each one is checked against brute-force unitary evolution in the tests.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import LeakageAlarm, NegativeRate, NotProjector, ShapeMismatch, StepNotConverged
from .opsalg import (
    DensityOperator,
    HilbertSpace,
    Operator,
    Propagator,
    QUBIT,
    destroy,
    embed,
    projector_e,
    projector_g,
    sigma_minus,
    sigma_z,
)

LEAKAGE_ALARM_LEVEL = 1e-6
BOUND_TOL = 1e-10

PROVENANCES = ("unitary", "analytic", "lindblad", "sampled")


@dataclass(frozen=True)
class PopulationSeries:
    """Probe measurement probability (or a signed difference of two) on a tau grid."""

    tau: np.ndarray
    values: np.ndarray
    projector: str
    provenance: str
    signed: bool = False
    metadata: Mapping = field(default_factory=dict)

    def __post_init__(self):
        tau = np.array(self.tau, dtype=float)
        vals = np.array(self.values, dtype=float)
        if tau.ndim != 1 or tau.shape != vals.shape:
            raise ShapeMismatch("tau grid and values must be 1-d arrays of equal length")
        if tau.size > 1 and np.any(np.diff(tau) <= 0):
            raise ValueError("tau grid must be strictly increasing")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if not self.signed and vals.size and (vals.min() < -BOUND_TOL or vals.max() > 1 + BOUND_TOL):
            raise ValueError("population values outside [0, 1]")
        tau.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "metadata", dict(self.metadata))

    def __len__(self):
        return self.tau.size

    def __sub__(self, other: "PopulationSeries") -> "PopulationSeries":
        if not np.array_equal(self.tau, other.tau):
            raise ShapeMismatch("difference of series on different grids")
        prov = self.provenance if self.provenance == other.provenance else "sampled"
        meta = {"minuend": dict(self.metadata), "subtrahend": dict(other.metadata)}
        return PopulationSeries(self.tau, self.values - other.values, self.projector, prov, True, meta)

    def to_csv(self, path) -> None:
        """Write ``tau,value`` rows under a ``#``-prefixed metadata header."""
        Path(path).write_text(self.to_csv_text())

    def to_csv_text(self) -> str:
        lines = [
            f"# projector: {self.projector}",
            f"# provenance: {self.provenance}",
            f"# signed: {str(self.signed).lower()}",
        ]
        for k in sorted(self.metadata):
            lines.append(f"# {k}: {_meta_str(self.metadata[k])}")
        lines.append("tau,value")
        lines += [f"{t!r},{v!r}" for t, v in zip(self.tau.tolist(), self.values.tolist())]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, path) -> "PopulationSeries":
        header, rows = {}, []
        for line in Path(path).read_text().splitlines():
            if line.startswith("#"):
                k, _, v = line[1:].partition(":")
                header[k.strip()] = v.strip()
            elif line and line != "tau,value":
                t, v = line.split(",")
                rows.append((float(t), float(v)))
        tau, vals = (np.array(c) for c in zip(*rows)) if rows else (np.array([]), np.array([]))
        meta = {k: v for k, v in header.items() if k not in ("projector", "provenance", "signed")}
        return cls(tau, vals, header.get("projector", ""), header.get("provenance", "unitary"),
                   header.get("signed") == "true", meta)


def _meta_str(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, Mapping):
        return "{" + ", ".join(f"{k}={_meta_str(v[k])}" for k in sorted(v)) + "}"
    return str(v)


# ---------------------------------------------------------------------------
# projectors

def probe_projector(label: str, space: HilbertSpace) -> Operator:
    """Measurement projector on the probe qubit(s), identity on the field.

    Labels: ``excited`` and ``ground`` (single probe), ``psi_plus`` (two probes).
    """
    nq = space.n_qubits
    if label in ("excited", "ground"):
        if nq != 1:
            raise ShapeMismatch(f"projector {label!r} needs a single probe qubit")
        p = projector_e() if label == "excited" else projector_g()
        return embed(p, space, 0)
    if label == "psi_plus":
        if nq != 2:
            raise ShapeMismatch("projector 'psi_plus' needs two probe qubits")
        v = np.array([0, 1, 1, 0], dtype=complex) / math.sqrt(2)
        p = np.outer(v, v.conj())
        rest = int(np.prod(space.dims[2:]))
        return Operator(space, np.kron(p, np.eye(rest)))
    raise NotProjector(f"unknown projector label {label!r}")


def check_projector(p: Operator, tol: float = 1e-10) -> None:
    if not p.is_hermitian(tol):
        raise NotProjector("projector is not Hermitian")
    m = p.entries
    if np.max(np.abs(m @ m - m), initial=0.0) > tol:
        raise NotProjector("projector is not idempotent")


def top_fock_projector(space: HilbertSpace) -> np.ndarray:
    """Diagonal of the projector onto basis states with any mode at its top level."""
    idx = np.indices(space.dims).reshape(len(space.dims), -1)
    top = np.zeros(space.total_dim, dtype=bool)
    for i, (d, k) in enumerate(zip(space.dims, space.kinds)):
        if k != QUBIT:
            top |= idx[i] == d - 1
    return top


# ---------------------------------------------------------------------------
# unitary evolution

class Evaluable:
    """P(tau) = Tr[U(tau) rho0 U(tau)^dag projector], callable at any real tau.

    Built on one eigendecomposition of ``h``. Tracks the largest top-Fock
    population seen over all evaluations in ``max_top_population``.
    """

    def __init__(self, rho0: DensityOperator, h: Operator | Propagator, projector: Operator, label: str = ""):
        prop = h if isinstance(h, Propagator) else Propagator(h)
        if rho0.space.dims != prop.space.dims or projector.space.dims != prop.space.dims:
            raise ShapeMismatch("state, Hamiltonian and projector must share one space")
        check_projector(projector)
        self.propagator = prop
        self.label = label
        self.rho0 = rho0
        self._w = prop.expectation_weights(rho0, projector)
        top = top_fock_projector(prop.space)
        self._wtop = prop.expectation_weights(rho0, np.diag(top.astype(float))) if top.any() else None
        self.max_top_population = 0.0

    def __call__(self, tau):
        scalar = np.ndim(tau) == 0
        vals = self.propagator.trace_series(self._w, tau).real
        if self._wtop is not None:
            top = self.propagator.trace_series(self._wtop, tau).real
            self.max_top_population = max(self.max_top_population, float(np.max(top)))
        return float(vals[0]) if scalar else vals

    @property
    def leakage_alarm(self) -> bool:
        return self.max_top_population > LEAKAGE_ALARM_LEVEL


class DifferenceEvaluable:
    """tau -> plus(tau) - minus(tau) for two evaluable sources."""

    def __init__(self, plus: Callable, minus: Callable, label: str = ""):
        self.plus = plus
        self.minus = minus
        self.label = label

    def __call__(self, tau):
        return self.plus(tau) - self.minus(tau)

    @property
    def leakage_alarm(self) -> bool:
        return any(getattr(s, "leakage_alarm", False) for s in (self.plus, self.minus))


def _grid(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or not np.all(np.isfinite(g)):
        raise ValueError("tau grid must be a finite 1-d sequence")
    return g


def population_series(rho0: DensityOperator, h: Operator | Propagator, projector: Operator, grid,
                      label: str = "", projector_label: str = "") -> PopulationSeries:
    """Exact unitary populations on ``grid`` (negative tau allowed).

    Emits :class:`LeakageAlarm` when the top Fock level is populated beyond
    1e-6 anywhere on the grid; the series is still returned with the alarm in
    its metadata.
    """
    g = _grid(grid)
    ev = Evaluable(rho0, h, projector, label)
    vals = np.clip(ev(g), 0.0, 1.0)
    meta = _series_meta(rho0, ev.max_top_population, label)
    if ev.leakage_alarm:
        warnings.warn(f"top Fock population {ev.max_top_population:.2e} in run {label!r}", LeakageAlarm, stacklevel=2)
    return PopulationSeries(g, vals, projector_label or label, "unitary", metadata=meta)


def _series_meta(rho0: DensityOperator, top: float, label: str) -> dict:
    meta = {
        "truncation": max(rho0.space.mode_dims, default=0),
        "state_leakage": float(rho0.meta.get("leakage", 0.0)),
        "max_top_population": float(top),
        "leakage_alarm": bool(top > LEAKAGE_ALARM_LEVEL),
    }
    if label:
        meta["run"] = label
    return meta


# ---------------------------------------------------------------------------
# closed-form series

def _single_mode_matrix(rho_f: DensityOperator) -> np.ndarray:
    if len(rho_f.space.dims) != 1:
        raise ShapeMismatch("expected a single-mode field state")
    return rho_f.matrix


def _two_mode_tensor(rho_f: DensityOperator) -> np.ndarray:
    if len(rho_f.space.dims) != 2:
        raise ShapeMismatch("expected a two-mode field state")
    d = rho_f.space.dims
    return rho_f.matrix.reshape(d + d)


def analytic_pe_plusphi(rho_f: DensityOperator, phi: float, grid) -> PopulationSeries:
    """Excited-probe population for probe |+_phi> under JC1, summed term by term.

    The top retained level is frozen in the truncated model, so its diagonal
    weight enters as a constant rather than a Rabi term.
    """
    r = _single_mode_matrix(rho_f)
    g = _grid(grid)
    n = r.shape[0]
    k = np.arange(n - 1)
    om = np.sqrt(k + 1.0)
    coh = np.exp(1j * phi) * r[k, k + 1] - np.exp(-1j * phi) * r[k + 1, k]
    diag = np.real(np.diag(r))
    t = g[:, None] * om[None, :]
    vals = (
        np.real(0.25j * np.sin(2 * t) @ coh)
        + 0.5 * (np.cos(t) ** 2 @ diag[:-1] + np.sin(t) ** 2 @ diag[1:])
        + 0.5 * diag[-1]
    )
    return PopulationSeries(g, np.clip(vals, 0.0, 1.0), "excited", "analytic",
                            metadata={"kind": "P_e(+phi)", "phase": float(phi)})


DIFFERENCE_KINDS = ("JC1_homodyne", "JC2_homodyne", "TwoAtom", "ModeA", "ModeB")


def _difference_terms(kind: str, rho_f: DensityOperator, phase: float):
    """Frequencies, complex coherences and waveform for a difference series."""
    ph = np.exp(1j * phase)
    if kind == "JC1_homodyne":
        r = _single_mode_matrix(rho_f)
        k = np.arange(r.shape[0] - 1)
        return np.sqrt(k + 1.0), -np.imag(ph * r[k, k + 1]), "sin"
    if kind == "JC2_homodyne":
        r = _single_mode_matrix(rho_f)
        k = np.arange(r.shape[0] - 2)
        return np.sqrt((k + 1.0) * (k + 2.0)), np.imag(ph * r[k, k + 2]), "sin"
    if kind == "TwoAtom":
        r = _single_mode_matrix(rho_f)
        k = np.arange(r.shape[0] - 2)
        w = np.sqrt((k + 1.0) * (k + 2.0)) / (2 * k + 3)
        return np.sqrt(2 * (2 * k + 3.0)), 2 * w * np.real(ph * r[k, k + 2]), "sin2"
    if kind in ("ModeA", "ModeB"):
        t = _two_mode_tensor(rho_f)
        n1d, n2d = t.shape[0], t.shape[1]
        n1, n2 = np.meshgrid(np.arange(n1d), np.arange(n2d), indexing="ij")
        if kind == "ModeA":
            ok = (n1 + 1 < n1d) & (n2 >= 1)
            m1, m2, om = n1 + 1, n2 - 1, np.sqrt((n1 + 1.0) * n2)
        else:
            ok = (n1 >= 1) & (n2 >= 1)
            m1, m2, om = n1 - 1, n2 - 1, np.sqrt(1.0 * n1 * n2)
        n1, n2, m1, m2, om = n1[ok], n2[ok], m1[ok], m2[ok], om[ok]
        return om, -np.imag(ph * t[n1, n2, m1, m2]), "sin"
    raise ValueError(f"unknown difference kind {kind!r}; expected one of {DIFFERENCE_KINDS}")


DIFFERENCE_PROJECTOR = {
    "JC1_homodyne": "excited",
    "JC2_homodyne": "ground",
    "TwoAtom": "psi_plus",
    "ModeA": "excited",
    "ModeB": "excited",
}


def analytic_difference_series(kind: str, rho_f: DensityOperator, phase: float, grid) -> PopulationSeries:
    """Closed-form signed difference of the two rotated-probe populations.

    ``phase`` is the probe phase phi, or theta for ``TwoAtom``. The Rabi
    waveform is sin(2 Omega tau) for the exchange couplings and sin^2(Omega tau)
    for the Bell-state protocol.
    """
    g = _grid(grid)
    om, amp, wave = _difference_terms(kind, rho_f, phase)
    if wave == "sin":
        vals = np.sin(2 * g[:, None] * om[None, :]) @ amp
    else:
        vals = np.sin(g[:, None] * om[None, :]) ** 2 @ amp
    return PopulationSeries(g, vals, DIFFERENCE_PROJECTOR[kind], "analytic", signed=True,
                            metadata={"kind": kind, "phase": float(phase)})


# ---------------------------------------------------------------------------
# dissipative evolution

@dataclass(frozen=True)
class LindbladSpec:
    """Decay rates in units of g: field decay sqrt(kappa) a_j for every mode,
    probe decay sqrt(gamma) sigma_q and dephasing sqrt(gamma_phi / 2) sigma_z,q
    for every probe qubit."""

    kappa: float = 0.0
    gamma: float = 0.0
    gamma_phi: float = 0.0

    def __post_init__(self):
        for name in ("kappa", "gamma", "gamma_phi"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise NegativeRate(f"{name} must be a finite non-negative rate, got {v}")

    def collapse_operators(self, space: HilbertSpace) -> list[Operator]:
        ops = []
        for i, k in enumerate(space.kinds):
            if k == QUBIT:
                if self.gamma > 0:
                    ops.append(math.sqrt(self.gamma) * embed(sigma_minus(), space, i))
                if self.gamma_phi > 0:
                    ops.append(math.sqrt(self.gamma_phi / 2) * embed(sigma_z(), space, i))
            elif self.kappa > 0:
                ops.append(math.sqrt(self.kappa) * embed(destroy(space.dims[i]), space, i))
        return ops


class _LindbladRHS:
    def __init__(self, h: Operator, ops: Sequence[Operator]):
        heff = sp.csr_matrix(h.entries)
        for c in ops:
            cm = sp.csr_matrix(c.entries)
            heff = heff - 0.5j * (cm.conj().T @ cm)
        self.heff = sp.csr_matrix(heff)
        self.ls = [sp.csr_matrix(c.entries) for c in ops]

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        a = -1j * (self.heff @ rho)
        out = a + a.conj().T
        for c in self.ls:
            cr = c @ rho
            out += c @ cr.conj().T
        return out


def _rk4_path(rhs: _LindbladRHS, rho0: np.ndarray, grid: np.ndarray, dt: float) -> list[np.ndarray]:
    states = []
    rho, t = rho0.copy(), 0.0
    for target in grid:
        span = target - t
        if span > 0:
            n = max(1, int(math.ceil(span / dt - 1e-12)))
            h = span / n
            for _ in range(n):
                k1 = rhs(rho)
                k2 = rhs(rho + 0.5 * h * k1)
                k3 = rhs(rho + 0.5 * h * k2)
                k4 = rhs(rho + h * k3)
                rho = rho + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
            t = target
        states.append(rho)
    return states


def lindblad_series(rho0: DensityOperator, h: Operator, lindblad: LindbladSpec, projector: Operator, grid,
                    dt: float = 1e-3, tol: float = 1e-8, max_halvings: int = 4,
                    label: str = "", projector_label: str = "") -> PopulationSeries:
    """Populations under dissipative evolution, by fixed-step RK4.

    The step is halved until a further halving changes every output by less
    than ``tol``.

    Raises:
        ValueError: grid contains negative times.
        StepNotConverged: no step down to dt / 2**max_halvings met ``tol``, or
            the trace drifted by more than ``tol``.
    """
    g = _grid(grid)
    if g.size and g.min() < 0:
        raise ValueError("dissipative evolution runs forward only; grid must lie in [0, inf)")
    if g.size > 1 and np.any(np.diff(g) <= 0):
        raise ValueError("tau grid must be strictly increasing")
    check_projector(projector)
    rhs = _LindbladRHS(h, lindblad.collapse_operators(h.space))
    p = projector.entries
    top = top_fock_projector(h.space)

    def run(step):
        states = _rk4_path(rhs, rho0.matrix, g, step)
        vals = np.array([np.real(np.einsum("ij,ji->", s, p)) for s in states])
        traces = np.array([np.real(np.trace(s)) for s in states])
        tops = np.array([np.real(np.diag(s)[top].sum()) for s in states]) if top.any() else np.zeros(len(states))
        return vals, traces, tops

    step = dt
    vals, traces, tops = run(step)
    for _ in range(max_halvings):
        vals2, traces2, tops2 = run(step / 2)
        change = float(np.max(np.abs(vals2 - vals), initial=0.0))
        step /= 2
        vals, traces, tops = vals2, traces2, tops2
        if change < tol:
            break
    else:
        raise StepNotConverged(f"RK4 outputs still change by {change:.2e} at step {step:.2e}")
    drift = float(np.max(np.abs(traces - 1.0), initial=0.0))
    if drift > tol:
        raise StepNotConverged(f"trace drift {drift:.2e} exceeds {tol:.1e}")
    max_top = float(np.max(tops, initial=0.0))
    meta = _series_meta(rho0, max_top, label)
    meta.update({"kappa": lindblad.kappa, "gamma": lindblad.gamma, "gamma_phi": lindblad.gamma_phi,
                 "rk4_step": step, "rk4_change": change})
    if max_top > LEAKAGE_ALARM_LEVEL:
        warnings.warn(f"top Fock population {max_top:.2e} in run {label!r}", LeakageAlarm, stacklevel=2)
    return PopulationSeries(g, np.clip(vals, 0.0, 1.0), projector_label or label, "lindblad", metadata=meta)
