"""Field moments from probe-population derivatives at tau = 0.

A :class:`Protocol` lists the probe preparations it needs (:class:`RunSpec`)
and a linear combination of derivatives of those runs:

    moment = constant + sum_k coef_k * d^{order_k}/dtau^{order_k} [P_plus - P_minus](0)

An :class:`Experiment` turns runs into data (exact, dissipative, or
shot-noise sampled), estimates the derivatives, and attaches the oracle value.

Protocol constants (all verified against brute-force evolution in the tests):

* <Y_phi>  = P_e'(0), probe |+_phi>, JC1.            <X_phi> = <Y_{phi - pi/2}>.
* <Y_phi>  = (P_e^+ - P_e^-)'(0) / 2.
* <n>      = P_g''(0) / 2 - 1, probe |e>, JC1.
* <X^2_phi> = -(P_g^+ - P_g^-)'(0) / 4 + P_g^e''(0) / 4 - 1/4, JC2 with probe
  phase 2 phi - pi/2; <Y^2_phi> flips the sign of the first term.
* <X^2_phi> = (P^+ - P^-)''(0) / 16 + P_g^e''(0) / 4 - 1/4, two-atom JC with
  Bell phase theta = 2 phi, measuring |psi+>.
* <A> = c_A (P_e^+ - P_e^-)'(0) under H_A with probe phase -(phi1 - phi2) - pi/2,
  <B> = c_B (P_e^+ - P_e^-)'(0) under H_B with probe phase (phi1 + phi2) - pi/2.
"""

from __future__ import annotations

import math
import threading
import zlib
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from . import oracle
from .derivatives import DerivativeEstimate, derivative_at_zero
from .errors import BadParameter, MissingComponent, NonRealResult, ShapeMismatch
from .evolution import (
    DifferenceEvaluable,
    Evaluable,
    LindbladSpec,
    PopulationSeries,
    lindblad_series,
    population_series,
    probe_projector,
)
from .interactions import Interaction, build_interaction
from .opsalg import DensityOperator, HilbertSpace, Propagator, partial_trace
from .sampling import ShotSpec, binomial_variance, sample_series
from .states import ProbeStateSpec, build_probe, compose

HALF_PI = math.pi / 2

# <A> and <B> per unit slope of the population difference, for the probe phases
# chosen above; pinned by calibrate_correlator_prefactor in the test suite.
A_PREFACTOR = 1.0
B_PREFACTOR = 1.0


# ---------------------------------------------------------------------------
# protocol description

@dataclass(frozen=True)
class RunSpec:
    """One experimental preparation: probe state, interaction, measured projector.

    ``modes`` selects which field modes the probe couples to. A single-mode
    run on a multi-mode field evolves the reduced state of that mode, which
    is exact because the other modes are spectators.
    """

    probe: ProbeStateSpec
    interaction: str
    projector: str
    modes: tuple[int, ...] = (0,)

    @property
    def label(self) -> str:
        m = "".join(str(k + 1) for k in self.modes)
        return f"{self.interaction}[m{m}]:{self.probe.label()}->{self.projector}"


@dataclass(frozen=True)
class Term:
    coef: float
    order: int
    plus: RunSpec
    minus: RunSpec | None = None

    @property
    def runs(self) -> tuple[RunSpec, ...]:
        return (self.plus,) if self.minus is None else (self.plus, self.minus)


@dataclass(frozen=True)
class Protocol:
    observable: str
    terms: tuple[Term, ...]
    constant: float = 0.0
    phases: Mapping = field(default_factory=dict)
    oracle_args: Mapping = field(default_factory=dict)

    @property
    def runs(self) -> tuple[RunSpec, ...]:
        seen = []
        for t in self.terms:
            for r in t.runs:
                if r not in seen:
                    seen.append(r)
        return tuple(seen)


def _mode(mode: int | None) -> tuple[int, ...]:
    return (0,) if mode is None else (mode,)


def _plus(phase):
    return ProbeStateSpec("plus", float(phase))


def _minus(phase):
    return ProbeStateSpec("minus", float(phase))


def n_run(mode: int | None = None) -> RunSpec:
    return RunSpec(ProbeStateSpec("excited"), Interaction.JC1.value, "ground", _mode(mode))


def protocol_Y(phi: float, mode: int | None = None) -> Protocol:
    run = RunSpec(_plus(phi), Interaction.JC1.value, "excited", _mode(mode))
    return Protocol("Y", (Term(1.0, 1, run),), phases={"phi": phi}, oracle_args={"phi": phi, "mode": mode})


def protocol_X(phi: float, mode: int | None = None) -> Protocol:
    p = protocol_Y(phi - HALF_PI, mode)
    return replace(p, observable="X", phases={"phi": phi}, oracle_args={"phi": phi, "mode": mode})


def protocol_Y_homodyne(phi: float, mode: int | None = None) -> Protocol:
    plus = RunSpec(_plus(phi), Interaction.JC1.value, "excited", _mode(mode))
    minus = RunSpec(_minus(phi), Interaction.JC1.value, "excited", _mode(mode))
    return Protocol("Y", (Term(0.5, 1, plus, minus),), phases={"phi": phi, "homodyne": True},
                    oracle_args={"phi": phi, "mode": mode})


def protocol_X_homodyne(phi: float, mode: int | None = None) -> Protocol:
    p = protocol_Y_homodyne(phi - HALF_PI, mode)
    return replace(p, observable="X", phases={"phi": phi, "homodyne": True},
                   oracle_args={"phi": phi, "mode": mode})


def protocol_n(mode: int | None = None) -> Protocol:
    return Protocol("n", (Term(0.5, 2, n_run(mode)),), constant=-1.0, oracle_args={"mode": mode})


def protocol_squares_twophoton(phi: float, mode: int | None = None) -> tuple[Protocol, Protocol]:
    ph = 2 * phi - HALF_PI
    plus = RunSpec(_plus(ph), Interaction.JC2.value, "ground", _mode(mode))
    minus = RunSpec(_minus(ph), Interaction.JC2.value, "ground", _mode(mode))
    nr = n_run(mode)
    out = []
    for name, sign in (("X2", -1.0), ("Y2", 1.0)):
        out.append(Protocol(name, (Term(0.25 * sign, 1, plus, minus), Term(0.25, 2, nr)), constant=-0.25,
                            phases={"phi": phi, "protocol": "two_photon"}, oracle_args={"phi": phi, "mode": mode}))
    return tuple(out)


def protocol_squares_twoatom(phi: float, mode: int | None = None) -> tuple[Protocol, Protocol]:
    theta = 2 * phi
    plus = RunSpec(ProbeStateSpec("bell_plus", theta), Interaction.TWO_ATOM_JC.value, "psi_plus", _mode(mode))
    minus = RunSpec(ProbeStateSpec("bell_minus", theta), Interaction.TWO_ATOM_JC.value, "psi_plus", _mode(mode))
    nr = n_run(mode)
    out = []
    for name, sign in (("X2", 1.0), ("Y2", -1.0)):
        out.append(Protocol(name, (Term(sign / 16, 2, plus, minus), Term(0.25, 2, nr)), constant=-0.25,
                            phases={"phi": phi, "theta": theta, "protocol": "two_atom"},
                            oracle_args={"phi": phi, "mode": mode}))
    return tuple(out)


def protocol_A(phi1: float, phi2: float, prefactor: float | None = None) -> Protocol:
    ph = -(phi1 - phi2) - HALF_PI
    plus = RunSpec(_plus(ph), Interaction.MODE_EXCHANGE_A.value, "excited", (0, 1))
    minus = RunSpec(_minus(ph), Interaction.MODE_EXCHANGE_A.value, "excited", (0, 1))
    c = A_PREFACTOR if prefactor is None else prefactor
    return Protocol("A", (Term(c, 1, plus, minus),), phases={"phi1": phi1, "phi2": phi2},
                    oracle_args={"phi1": phi1, "phi2": phi2})


def protocol_B(phi1: float, phi2: float, prefactor: float | None = None) -> Protocol:
    ph = (phi1 + phi2) - HALF_PI
    plus = RunSpec(_plus(ph), Interaction.MODE_SQUEEZE_B.value, "excited", (0, 1))
    minus = RunSpec(_minus(ph), Interaction.MODE_SQUEEZE_B.value, "excited", (0, 1))
    c = B_PREFACTOR if prefactor is None else prefactor
    return Protocol("B", (Term(c, 1, plus, minus),), phases={"phi1": phi1, "phi2": phi2},
                    oracle_args={"phi1": phi1, "phi2": phi2})


# ---------------------------------------------------------------------------
# results

@dataclass(frozen=True)
class MomentResult:
    observable: str
    extracted: float
    oracle: float | None = None
    inputs: tuple[DerivativeEstimate, ...] = ()
    phases: Mapping = field(default_factory=dict)
    error_estimate: float = 0.0
    method: str = ""
    runs: tuple[str, ...] = ()

    @property
    def gap(self) -> float | None:
        return None if self.oracle is None else abs(self.extracted - self.oracle)

    def to_dict(self) -> dict:
        first = self.inputs[0] if self.inputs else None
        return {
            "observable": self.observable,
            "extracted": self.extracted,
            "oracle": self.oracle,
            "gap": self.gap,
            "method": self.method,
            "step_or_width": first.step_or_width if first else None,
            "error_estimate": self.error_estimate,
            "phases": {k: v for k, v in self.phases.items()},
            "runs": list(self.runs),
            "derivatives": [d.to_dict() for d in self.inputs],
        }


@dataclass(frozen=True)
class Estimator:
    """Derivative method and its knobs.

    ``step_or_width`` is the central_fd step, the initial richardson step, the
    polyfit half-window, or the kernel width; ``None`` picks the method default.
    """

    method: str = "richardson"
    step_or_width: float | None = None
    accuracy: int = 2
    levels: int = 5
    degree: int = 4
    weighted: bool = True
    halvings: int = 0

    def options(self) -> dict:
        return {"accuracy": self.accuracy, "levels": self.levels, "degree": self.degree,
                "weighted": self.weighted, "halvings": self.halvings}

    def estimate(self, source, order: int) -> DerivativeEstimate:
        return derivative_at_zero(source, order, self.method, self.step_or_width, **self.options())

    @property
    def needs_grid(self) -> bool:
        return self.method == "polyfit"


SAMPLED_DEFAULT = Estimator("polyfit", 0.3, degree=4)
DEFAULT_GRID = np.linspace(-0.5, 0.5, 101)


def _truncation_bias(field: DensityOperator) -> dict[int, float]:
    """Bound on the derivative shift caused by the frozen top Fock levels.

    Couplings out of the two highest retained levels are cut, so their
    populations enter the slope (curvature) with a wrong weight of order
    sqrt(N) (N).
    """
    top = 0.0
    n = 0
    for j, d in enumerate(field.space.dims):
        red = field.matrix if len(field.space.dims) == 1 else partial_trace(field, [j]).matrix
        top = max(top, float(np.real(red[-1, -1] + red[-2, -2])))
        n = max(n, d)
    return {1: 4 * math.sqrt(n) * top, 2: 8 * n * top}


def _stream(label: str) -> int:
    return zlib.crc32(label.encode())


class Experiment:
    """A field state plus how its probe runs are observed.

    Args:
        field: field density operator (one or two modes).
        estimator: derivative estimator; exact data default to richardson,
            sampled or dissipative data need a gridded method.
        grid: tau grid for gridded data (series export, polyfit, sampling).
        shots: optional shot-noise model; each run gets its own RNG stream.
        lindblad: optional dissipation; only the tau >= 0 part of the grid is
            simulated.
    """

    def __init__(self, field: DensityOperator, estimator: Estimator | None = None, grid=None,
                 shots: ShotSpec | None = None, lindblad: LindbladSpec | None = None):
        self.field = field
        noisy = shots is not None or lindblad is not None
        self.estimator = estimator or (SAMPLED_DEFAULT if noisy else Estimator())
        self.grid = np.asarray(DEFAULT_GRID if grid is None else grid, dtype=float)
        self.shots = shots
        self.lindblad = lindblad
        self._evaluables: dict[RunSpec, Evaluable] = {}
        self._series: dict[RunSpec, PopulationSeries] = {}
        self._props: dict[tuple, Propagator] = {}
        self._lock = threading.RLock()
        self.truncation_bias = _truncation_bias(field)

    # -- run materialization -------------------------------------------------

    @property
    def n_modes(self) -> int:
        return len(self.field.space.dims)

    def run_state(self, run: RunSpec) -> tuple[DensityOperator, HilbertSpace]:
        if max(run.modes) >= self.n_modes:
            raise ShapeMismatch(f"run {run.label} addresses mode {max(run.modes) + 1} of a {self.n_modes}-mode field")
        f = self.field if len(run.modes) == self.n_modes else partial_trace(self.field, run.modes)
        rho0 = compose(build_probe(run.probe), f)
        return rho0, rho0.space

    def _propagator(self, run: RunSpec, space: HilbertSpace) -> Propagator:
        key = (run.interaction, space.dims)
        with self._lock:
            if key not in self._props:
                self._props[key] = Propagator(build_interaction(run.interaction, space))
            return self._props[key]

    def evaluable(self, run: RunSpec) -> Evaluable:
        with self._lock:
            if run not in self._evaluables:
                rho0, space = self.run_state(run)
                prop = self._propagator(run, space)
                self._evaluables[run] = Evaluable(rho0, prop, probe_projector(run.projector, space), run.label)
            return self._evaluables[run]

    def series(self, run: RunSpec) -> PopulationSeries:
        """Gridded data for ``run``: exact, dissipative, and/or sampled."""
        with self._lock:
            if run in self._series:
                return self._series[run]
        rho0, space = self.run_state(run)
        proj = probe_projector(run.projector, space)
        if self.lindblad is not None:
            h = build_interaction(run.interaction, space)
            s = lindblad_series(rho0, h, self.lindblad, proj, self.grid[self.grid >= 0],
                                label=run.label, projector_label=run.projector)
        else:
            s = population_series(rho0, self._propagator(run, space), proj, self.grid,
                                  label=run.label, projector_label=run.projector)
        if self.shots is not None:
            s = sample_series(s, self.shots, stream=_stream(run.label))
        with self._lock:
            self._series[run] = s
        return s

    def source(self, term: Term):
        gridded = self.estimator.needs_grid or self.shots is not None or self.lindblad is not None
        if not gridded:
            if term.minus is None:
                return self.evaluable(term.plus)
            return DifferenceEvaluable(self.evaluable(term.plus), self.evaluable(term.minus))
        if term.minus is None:
            return self.series(term.plus)
        a, b = self.series(term.plus), self.series(term.minus)
        d = a - b
        if self.shots is not None:
            d = PopulationSeries(d.tau, d.values, d.projector, "sampled", True,
                                 dict(d.metadata, variance=binomial_variance(a) + binomial_variance(b)))
        return d

    def leakage_alarm(self) -> bool:
        flags = [e.leakage_alarm for e in self._evaluables.values()]
        flags += [bool(s.metadata.get("leakage_alarm")) for s in self._series.values()]
        return any(flags)

    # -- extraction -------------------------------------------------------------

    def measure(self, protocol: Protocol, with_oracle: bool = True) -> MomentResult:
        estimates = []
        value = protocol.constant
        err = 0.0
        for term in protocol.terms:
            est = self.estimator.estimate(self.source(term), term.order)
            estimates.append(est)
            value += term.coef * est.value
            err += abs(term.coef) * (est.error_estimate + self.truncation_bias[term.order])
        if np.iscomplexobj(value):
            if abs(np.imag(value)) > 1e-8:
                raise NonRealResult(f"{protocol.observable}: imaginary residue {np.imag(value):.2e}")
            value = np.real(value)
        orc = None
        if with_oracle:
            orc = oracle.direct_moment(self.field, protocol.observable, **protocol.oracle_args)
        return MomentResult(protocol.observable, float(value), orc, tuple(estimates), dict(protocol.phases),
                            float(err), self.estimator.method, tuple(r.label for r in protocol.runs))

    def runs(self) -> list[RunSpec]:
        """Every run touched so far, sorted by label."""
        with self._lock:
            seen = {r.label: r for r in list(self._evaluables) + list(self._series)}
        return [seen[k] for k in sorted(seen)]

    def executed_runs(self) -> list[str]:
        return [r.label for r in self.runs()]


# ---------------------------------------------------------------------------
# single-mode convenience wrappers

def _experiment(rho_f, estimator=None, **kw) -> Experiment:
    return rho_f if isinstance(rho_f, Experiment) else Experiment(rho_f, estimator, **kw)


def extract_Y(rho_f, phi: float, estimator: Estimator | None = None, mode: int | None = None, **kw) -> MomentResult:
    """<Y_phi> from the slope of P_e for probe |+_phi> (single run)."""
    return _experiment(rho_f, estimator, **kw).measure(protocol_Y(phi, mode))


def extract_X(rho_f, phi: float, estimator: Estimator | None = None, mode: int | None = None, **kw) -> MomentResult:
    return _experiment(rho_f, estimator, **kw).measure(protocol_X(phi, mode))


def extract_Y_homodyne(rho_f, phi: float, estimator: Estimator | None = None, mode: int | None = None,
                       **kw) -> MomentResult:
    """<Y_phi> from half the slope of P_e(+phi) - P_e(-phi)."""
    return _experiment(rho_f, estimator, **kw).measure(protocol_Y_homodyne(phi, mode))


def extract_n(rho_f, estimator: Estimator | None = None, mode: int | None = None, **kw) -> MomentResult:
    return _experiment(rho_f, estimator, **kw).measure(protocol_n(mode))


def extract_X2_Y2_twophoton(rho_f, phi: float, estimator: Estimator | None = None, mode: int | None = None,
                            **kw) -> tuple[MomentResult, MomentResult]:
    ex = _experiment(rho_f, estimator, **kw)
    return tuple(ex.measure(p) for p in protocol_squares_twophoton(phi, mode))


def extract_X2_Y2_twoatom(rho_f, phi: float, estimator: Estimator | None = None, mode: int | None = None,
                          **kw) -> tuple[MomentResult, MomentResult]:
    """Squared quadratures via the two-atom Bell protocol; the Bell phase is theta = 2 phi."""
    ex = _experiment(rho_f, estimator, **kw)
    return tuple(ex.measure(p) for p in protocol_squares_twoatom(phi, mode))


def extract_A(rho_f, phi1: float, phi2: float, estimator: Estimator | None = None, **kw) -> MomentResult:
    return _experiment(rho_f, estimator, **kw).measure(protocol_A(phi1, phi2))


def extract_B(rho_f, phi1: float, phi2: float, estimator: Estimator | None = None, **kw) -> MomentResult:
    return _experiment(rho_f, estimator, **kw).measure(protocol_B(phi1, phi2))


def variance(square: MomentResult, first: MomentResult, oracle_value: float | None = None) -> MomentResult:
    """(Delta O)^2 = <O^2> - <O>^2 from extracted moments."""
    name = "Var" + first.observable
    val = square.extracted - first.extracted ** 2
    err = square.error_estimate + 2 * abs(first.extracted) * first.error_estimate
    orc = oracle_value
    if orc is None and square.oracle is not None and first.oracle is not None:
        orc = square.oracle - first.oracle ** 2
    return MomentResult(name, val, orc, square.inputs + first.inputs, dict(square.phases), err, square.method,
                        tuple(dict.fromkeys(square.runs + first.runs)))


# ---------------------------------------------------------------------------
# calibration

def calibrate_correlator_prefactor(kind: str, estimator: Estimator | None = None, truncation: int = 12) -> float:
    """Ratio oracle / population-difference slope on a reference state.

    ``A``: (|1,0> + |0,1>)/sqrt(2) at phi1 = phi2 = 0.
    ``B``: two-mode squeezed vacuum, r = 0.5, at phi1 = phi2 = 0.
    """
    from .states import FockSuperposition, TwoModeSqueezedVacuum, build_field

    if kind == "A":
        rho = build_field(FockSuperposition({(1, 0): 1, (0, 1): 1}), truncation)
        proto = protocol_A(0.0, 0.0, prefactor=1.0)
    elif kind == "B":
        rho = build_field(TwoModeSqueezedVacuum(0.5), max(truncation, 14))
        proto = protocol_B(0.0, 0.0, prefactor=1.0)
    else:
        raise BadParameter("kind must be 'A' or 'B'")
    res = Experiment(rho, estimator).measure(proto)
    return res.oracle / res.extracted


# ---------------------------------------------------------------------------
# two-mode combinations

# component keys: "X@1", "Y@2", "X2@1", "Y2@2", "A", "B"
TWO_MODE_KEYS = ("X@1", "X@2", "Y@1", "Y@2", "X2@1", "X2@2", "Y2@1", "Y2@2", "A", "B")


def two_mode_protocols(phi1: float, phi2: float, squares: str = "two_photon") -> dict[str, Protocol]:
    """All protocols needed for two-mode second moments and the Duan test.

    Mode j at two-mode phase phi_j is measured with single-mode phase -phi_j.
    """
    out = {}
    for j, ph in ((0, phi1), (1, phi2)):
        tag = f"@{j + 1}"
        out["X" + tag] = protocol_X(-ph, j)
        out["Y" + tag] = protocol_Y(-ph, j)
        build = protocol_squares_twophoton if squares == "two_photon" else protocol_squares_twoatom
        x2, y2 = build(-ph, j)
        out["X2" + tag] = x2
        out["Y2" + tag] = y2
    out["A"] = protocol_A(phi1, phi2)
    out["B"] = protocol_B(phi1, phi2)
    return out


def measure_two_mode(experiment: Experiment, phi1: float = 0.0, phi2: float = 0.0,
                     squares: str = "two_photon", jobs: int = 1) -> dict[str, MomentResult]:
    protos = two_mode_protocols(phi1, phi2, squares)
    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(jobs) as pool:
            futs = {k: pool.submit(experiment.measure, p) for k, p in protos.items()}
            return {k: f.result() for k, f in futs.items()}
    return {k: experiment.measure(p) for k, p in protos.items()}


def _component(moments: Mapping, key: str) -> MomentResult:
    try:
        return moments[key]
    except KeyError:
        raise MissingComponent(f"missing component {key!r}") from None


def _val(m) -> float:
    return m.extracted if isinstance(m, MomentResult) else float(m)


def _err(m) -> float:
    return m.error_estimate if isinstance(m, MomentResult) else 0.0


def two_mode_second_moments(moments: Mapping[str, MomentResult], oracle_field: DensityOperator | None = None,
                            phi1: float = 0.0, phi2: float = 0.0) -> tuple[MomentResult, MomentResult]:
    """<X_phi^2> and <Y_phi^2> of X = X_1 + X_2, Y = Y_1 + Y_2.

    Uses <X_1 X_2> = (<A> + <B>) / 4 and <Y_1 Y_2> = (<A> - <B>) / 4.
    """
    comps = {k: _component(moments, k) for k in ("X2@1", "X2@2", "Y2@1", "Y2@2", "A", "B")}
    a, b = _val(comps["A"]), _val(comps["B"])
    err_ab = 0.5 * (_err(comps["A"]) + _err(comps["B"]))
    out = []
    for q, sign in (("X", 1.0), ("Y", -1.0)):
        val = _val(comps[q + "2@1"]) + _val(comps[q + "2@2"]) + 0.5 * (a + sign * b)
        err = _err(comps[q + "2@1"]) + _err(comps[q + "2@2"]) + err_ab
        orc = None
        if oracle_field is not None:
            orc = oracle.direct_moment(oracle_field, q + "2_two_mode", phi1=phi1, phi2=phi2)
        inputs = tuple(d for c in comps.values() if isinstance(c, MomentResult) for d in c.inputs)
        runs = tuple(dict.fromkeys(r for c in comps.values() if isinstance(c, MomentResult) for r in c.runs))
        out.append(MomentResult(q + "2_two_mode", val, orc, inputs, {"phi1": phi1, "phi2": phi2}, err,
                                next(iter(comps.values())).method if isinstance(next(iter(comps.values())),
                                                                                MomentResult) else "", runs))
    return tuple(out)


@dataclass(frozen=True)
class DuanResult:
    sum: float
    separable_bound: float
    violates: bool
    var_u: float
    var_v: float
    error_estimate: float = 0.0
    oracle: float | None = None
    a0: float = 1.0
    signs: tuple[int, int] = (1, 1)

    def to_result(self, runs: Sequence[str] = (), method: str = "") -> MomentResult:
        return MomentResult(f"DuanSum(a0={self.a0:g})", self.sum, self.oracle, (),
                            {"a0": self.a0, "signs": list(self.signs), "bound": self.separable_bound,
                             "violates": self.violates}, self.error_estimate, method, tuple(runs))


def duan_check(a0: float, moments: Mapping[str, MomentResult], signs=(1, 1), tol: float = 1e-6,
               oracle_field: DensityOperator | None = None, phi1: float = 0.0, phi2: float = 0.0) -> DuanResult:
    """Var(u) + Var(v) against the separability bound a0^2 + 1/a0^2.

    u = a0 x1 - s1 x2 / a0 and v = a0 y1 - s2 y2 / a0 with x = sqrt(2) X, so a
    coherent product state saturates the bound. ``violates`` is set when the
    sum lies below the bound by more than ``tol``.
    """
    if not a0 > 0:
        raise BadParameter("a0 must be positive")
    s1, s2 = (int(np.sign(s)) for s in signs)
    if s1 == 0 or s2 == 0:
        raise BadParameter("signs must be +1 or -1")
    c = {k: _component(moments, k) for k in TWO_MODE_KEYS}
    v = {k: _val(m) for k, m in c.items()}
    xx = 0.25 * (v["A"] + v["B"])
    yy = 0.25 * (v["A"] - v["B"])
    var_u = 2 * (a0 ** 2 * (v["X2@1"] - v["X@1"] ** 2) + (v["X2@2"] - v["X@2"] ** 2) / a0 ** 2
                 - 2 * s1 * (xx - v["X@1"] * v["X@2"]))
    var_v = 2 * (a0 ** 2 * (v["Y2@1"] - v["Y@1"] ** 2) + (v["Y2@2"] - v["Y@2"] ** 2) / a0 ** 2
                 - 2 * s2 * (yy - v["Y@1"] * v["Y@2"]))
    total = var_u + var_v
    bound = a0 ** 2 + 1 / a0 ** 2
    err = 2 * (a0 ** 2 + a0 ** -2 + 1) * sum(_err(m) for m in c.values())
    orc = None
    if oracle_field is not None:
        orc = oracle.direct_moment(oracle_field, "DuanSum", phi1=phi1, phi2=phi2, a0=a0, signs=(s1, s2))
    return DuanResult(total, bound, bool(total < bound - tol), var_u, var_v, err, orc, a0, (s1, s2))
