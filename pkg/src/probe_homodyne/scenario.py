"""Declarative scenario files: parse, validate, run, and write artifacts.

A scenario is a TOML file with a ``schema`` version and a fixed set of
tables; unknown keys are rejected with the offending line. See
``scenarios/*.toml`` for bundled examples and README.md for the full schema.
"""

from __future__ import annotations

import datetime as _dt
import json
import math
import os
import re
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import extraction as ex
from . import oracle
from . import states as st
from .errors import ScenarioError
from .evolution import LindbladSpec
from .interactions import Interaction
from .sampling import DEFAULT_SEED, ShotSpec

SCHEMA_VERSION = 1
RESULTS_FORMAT = "probe-homodyne-results/1"

FIELD_KINDS = ("vacuum", "fock", "coherent", "thermal", "squeezed", "cat", "tmsv", "superposition",
               "product", "raw")
OBSERVABLE_NAMES = ("X", "Y", "n", "X2", "Y2", "VarX", "VarY", "A", "B", "X2_two_mode", "Y2_two_mode",
                    "DuanSum")
SINGLE_MODE_OBS = ("X", "Y", "n", "X2", "Y2", "VarX", "VarY")
PROJECTORS = ("excited", "ground", "psi_plus")

_TOP_KEYS = {"schema", "name", "description", "seed", "truncation", "leakage_tol", "on_leakage", "field", "grid",
             "estimator", "noise", "run", "observable", "output"}
_FIELD_KEYS = {
    "vacuum": set(), "fock": {"n"}, "coherent": {"alpha"}, "thermal": {"nbar"}, "squeezed": {"r", "theta"},
    "cat": {"alpha", "phase", "parity"}, "tmsv": {"r", "theta"}, "superposition": {"amplitudes"},
    "product": {"modes"}, "raw": {"path"},
}
_GRID_KEYS = {"min", "max", "points"}
_EST_KEYS = {"method", "step_or_width", "accuracy", "levels", "degree", "weighted", "halvings"}
_NOISE_KEYS = {"shots", "lindblad"}
_LINDBLAD_KEYS = {"kappa", "gamma", "gamma_phi"}
_RUN_KEYS = {"probe", "phase", "interaction", "projector", "mode"}
_OBS_KEYS = {"name", "phi", "phi1", "phi2", "mode", "protocol", "homodyne", "a0", "signs"}
_OUT_KEYS = {"dir", "series"}


# ---------------------------------------------------------------------------
# data model

@dataclass(frozen=True)
class GridSpec:
    min: float = -0.5
    max: float = 0.5
    points: int = 101

    def array(self) -> np.ndarray:
        return np.linspace(self.min, self.max, self.points)


@dataclass(frozen=True)
class ObservableRequest:
    name: str
    phi: float = 0.0
    phi1: float = 0.0
    phi2: float = 0.0
    mode: int | None = None          # 0-based internally, 1-based in files
    protocol: str = "two_photon"
    homodyne: bool = False
    a0: float = 1.0
    signs: tuple[int, int] = (1, 1)

    def label(self) -> str:
        if self.name in ("A", "B", "X2_two_mode", "Y2_two_mode"):
            return f"{self.name}(phi1={self.phi1:g}, phi2={self.phi2:g})"
        if self.name == "DuanSum":
            return f"DuanSum(a0={self.a0:g}, signs={self.signs[0]:+d}{self.signs[1]:+d})"
        m = "" if self.mode is None else f"@{self.mode + 1}"
        if self.name == "n":
            return "n" + m
        extra = ", two_atom" if self.protocol == "two_atom" and self.name in ("X2", "Y2", "VarX", "VarY") else ""
        extra += ", homodyne" if self.homodyne and self.name in ("X", "Y") else ""
        return f"{self.name}{m}(phi={self.phi:g}{extra})"


@dataclass(frozen=True)
class Scenario:
    name: str
    field: Any
    truncation: int
    description: str = ""
    seed: int = DEFAULT_SEED
    leakage_tol: float = st.LEAKAGE_TOL
    on_leakage: str = "error"
    grid: GridSpec = GridSpec()
    estimator: ex.Estimator | None = None
    shots: int | None = None
    lindblad: LindbladSpec | None = None
    runs: tuple[ex.RunSpec, ...] = ()
    observables: tuple[ObservableRequest, ...] = ()
    output_dir: str | None = None
    write_series: bool = True
    source: str = ""
    raw: Mapping = field(default_factory=dict, compare=False)

    @property
    def n_modes(self) -> int:
        return st.n_modes(self.field)


# ---------------------------------------------------------------------------
# parsing

class _Ctx:
    """Maps TOML keys back to line numbers for error messages."""

    def __init__(self, text: str, path: str):
        self.lines = text.splitlines()
        self.path = path

    def line_of(self, key: str, table: str | None = None) -> int | None:
        start = 0
        if table is not None:
            pat = re.compile(r"^\s*\[\[?\s*" + re.escape(table) + r"\s*\]\]?\s*$")
            for i, ln in enumerate(self.lines):
                if pat.match(ln):
                    start = i
                    break
        pat = re.compile(r"^\s*" + re.escape(key) + r"\s*=")
        for i in range(start, len(self.lines)):
            if pat.match(self.lines[i]):
                return i + 1
        for i, ln in enumerate(self.lines):
            if pat.match(ln) or re.search(r"\b" + re.escape(key) + r"\b", ln):
                return i + 1
        return None

    def error(self, msg: str, key: str | None = None, table: str | None = None) -> ScenarioError:
        line = self.line_of(key, table) if key else None
        return ScenarioError(msg, self.path, line)


def _check_keys(ctx: _Ctx, got: Mapping, allowed: set, where: str) -> None:
    for k in got:
        if k not in allowed:
            raise ctx.error(f"unknown key {k!r} in {where}; allowed: {', '.join(sorted(allowed))}", k,
                            where if where != "top level" else None)


def _num(ctx, tbl, key, default=None, kind=float, where=None, positive=False, nonneg=False):
    if key not in tbl:
        if default is None and kind is not None:
            raise ctx.error(f"missing required key {key!r} in {where}", None)
        return default
    v = tbl[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ctx.error(f"{key!r} must be a number", key, where)
    if kind is int and not float(v).is_integer():
        raise ctx.error(f"{key!r} must be an integer", key, where)
    v = kind(v)
    if not math.isfinite(v):
        raise ctx.error(f"{key!r} must be finite", key, where)
    if positive and not v > 0:
        raise ctx.error(f"{key!r} must be positive", key, where)
    if nonneg and v < 0:
        raise ctx.error(f"{key!r} must be non-negative", key, where)
    return v


def _complex(ctx, tbl, key, where):
    v = tbl.get(key)
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v):
        return complex(v[0], v[1])
    raise ctx.error(f"{key!r} must be a number or [re, im]", key, where)


def _parse_field(ctx: _Ctx, tbl: Mapping, where: str = "field", base: Path | None = None):
    if not isinstance(tbl, Mapping) or "kind" not in tbl:
        raise ctx.error(f"{where} needs a 'kind' (one of {', '.join(FIELD_KINDS)})", "kind")
    kind = tbl["kind"]
    if kind not in FIELD_KINDS:
        raise ctx.error(f"unknown field kind {kind!r}; expected one of {', '.join(FIELD_KINDS)}", "kind", where)
    _check_keys(ctx, tbl, _FIELD_KEYS[kind] | {"kind"}, where)
    if kind == "vacuum":
        return st.Fock(0)
    if kind == "fock":
        return st.Fock(_num(ctx, tbl, "n", kind=int, where=where, nonneg=True))
    if kind == "coherent":
        return st.Coherent(_complex(ctx, tbl, "alpha", where))
    if kind == "thermal":
        return st.Thermal(_num(ctx, tbl, "nbar", kind=float, where=where, nonneg=True))
    if kind == "squeezed":
        return st.SqueezedVacuum(_num(ctx, tbl, "r", kind=float, where=where, nonneg=True),
                                 _num(ctx, tbl, "theta", 0.0, where=where))
    if kind == "tmsv":
        return st.TwoModeSqueezedVacuum(_num(ctx, tbl, "r", kind=float, where=where, nonneg=True),
                                        _num(ctx, tbl, "theta", 0.0, where=where))
    if kind == "cat":
        if "parity" in tbl and "phase" in tbl:
            raise ctx.error("give either 'parity' or 'phase' for a cat state", "parity", where)
        phase = _num(ctx, tbl, "phase", 0.0, where=where)
        if "parity" in tbl:
            if tbl["parity"] not in ("even", "odd"):
                raise ctx.error("parity must be 'even' or 'odd'", "parity", where)
            phase = 0.0 if tbl["parity"] == "even" else math.pi
        return st.Cat(_complex(ctx, tbl, "alpha", where), phase)
    if kind == "superposition":
        amps = {}
        for entry in tbl.get("amplitudes", []):
            if not isinstance(entry, Mapping) or "n" not in entry:
                raise ctx.error("each amplitude needs n = [n1, ...] and re/im", "amplitudes", where)
            _check_keys(ctx, entry, {"n", "re", "im"}, where + ".amplitudes")
            amps[tuple(int(k) for k in entry["n"])] = complex(entry.get("re", 0.0), entry.get("im", 0.0))
        if not amps:
            raise ctx.error("superposition needs at least one amplitude", "amplitudes", where)
        if len({len(k) for k in amps}) != 1:
            raise ctx.error("all amplitude keys must have the same number of modes", "amplitudes", where)
        return st.FockSuperposition(amps)
    if kind == "product":
        modes = tbl.get("modes")
        if not isinstance(modes, list) or len(modes) < 1:
            raise ctx.error("product needs a non-empty 'modes' list of field tables", "modes", where)
        specs = tuple(_parse_field(ctx, m, where + ".modes", base) for m in modes)
        if any(st.n_modes(s) != 1 for s in specs):
            raise ctx.error("product factors must be single-mode", "modes", where)
        return st.Product(specs)
    path = Path(str(tbl.get("path", "")))
    if not path.is_absolute() and base is not None:
        path = base / path
    if not path.is_file():
        raise ctx.error(f"raw matrix file not found: {path}", "path", where)
    return st.read_raw_matrix(path)


def _parse_probe(ctx: _Ctx, tbl: Mapping) -> st.ProbeStateSpec:
    kinds = ("ground", "excited", "plus", "minus", "bell_plus", "bell_minus", "psi_plus")
    kind = tbl.get("probe")
    if kind not in kinds:
        raise ctx.error(f"run probe must be one of {', '.join(kinds)}", "probe", "run")
    return st.ProbeStateSpec(kind, _num(ctx, tbl, "phase", 0.0, where="run"))


def _validate_run(ctx: _Ctx, run: ex.RunSpec, n_field_modes: int) -> None:
    inter = Interaction(run.interaction)
    if run.probe.n_qubits != inter.n_qubits:
        raise ctx.error(f"{inter.value} needs {inter.n_qubits} probe qubit(s); probe {run.probe.kind!r} has "
                        f"{run.probe.n_qubits}", "probe", "run")
    if run.projector == "psi_plus" and inter.n_qubits != 2:
        raise ctx.error("projector psi_plus needs a two-qubit probe", "projector", "run")
    if run.projector != "psi_plus" and inter.n_qubits != 1:
        raise ctx.error("two-qubit probes are read out with projector psi_plus", "projector", "run")
    if inter.n_modes > n_field_modes:
        raise ctx.error(f"{inter.value} needs {inter.n_modes} field modes; the field has {n_field_modes}",
                        "interaction", "run")
    if len(run.modes) != inter.n_modes or max(run.modes) >= n_field_modes:
        raise ctx.error(f"{inter.value} on a {n_field_modes}-mode field needs 'mode' to pick the coupled mode",
                        "interaction", "run")


def _parse_observable(ctx: _Ctx, tbl: Mapping, n_field_modes: int) -> ObservableRequest:
    _check_keys(ctx, tbl, _OBS_KEYS, "observable")
    name = tbl.get("name")
    if name not in OBSERVABLE_NAMES:
        raise ctx.error(f"unknown observable {name!r}; expected one of {', '.join(OBSERVABLE_NAMES)}", "name",
                        "observable")
    mode = tbl.get("mode")
    if mode is not None:
        mode = _num(ctx, tbl, "mode", kind=int, where="observable")
        if not 1 <= mode <= n_field_modes:
            raise ctx.error(f"mode must be between 1 and {n_field_modes}", "mode", "observable")
        mode -= 1
    if name in SINGLE_MODE_OBS and n_field_modes > 1 and mode is None:
        raise ctx.error(f"single-mode observable {name!r} on a {n_field_modes}-mode field needs 'mode'", "name",
                        "observable")
    if name not in SINGLE_MODE_OBS and n_field_modes != 2:
        raise ctx.error(f"observable {name!r} needs a two-mode field", "name", "observable")
    protocol = tbl.get("protocol", "two_photon")
    if protocol not in ("two_photon", "two_atom"):
        raise ctx.error("protocol must be 'two_photon' or 'two_atom'", "protocol", "observable")
    signs = tbl.get("signs", [1, 1])
    if not (isinstance(signs, list) and len(signs) == 2 and all(s in (1, -1) for s in signs)):
        raise ctx.error("signs must be a pair of +1/-1", "signs", "observable")
    homodyne = tbl.get("homodyne", False)
    if not isinstance(homodyne, bool):
        raise ctx.error("homodyne must be true or false", "homodyne", "observable")
    return ObservableRequest(
        name, _num(ctx, tbl, "phi", 0.0, where="observable"), _num(ctx, tbl, "phi1", 0.0, where="observable"),
        _num(ctx, tbl, "phi2", 0.0, where="observable"), mode, protocol, homodyne,
        _num(ctx, tbl, "a0", 1.0, where="observable", positive=True), (int(signs[0]), int(signs[1])))


def parse_scenario(text: str, path: str = "<string>", base: Path | None = None) -> Scenario:
    """Parse and validate scenario text; raises ScenarioError with line context."""
    ctx = _Ctx(text, path)
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ScenarioError(f"TOML syntax error: {exc}", path, int(m.group(1)) if m else None) from None
    _check_keys(ctx, data, _TOP_KEYS, "top level")
    if data.get("schema") != SCHEMA_VERSION:
        raise ctx.error(f"schema must be {SCHEMA_VERSION} (got {data.get('schema')!r})", "schema")
    name = data.get("name")
    if not isinstance(name, str) or not re.fullmatch(r"[A-Za-z0-9_.-]+", name):
        raise ctx.error("name must be a non-empty string of letters, digits, '-', '_' or '.'", "name")
    if "field" not in data:
        raise ctx.error("missing [field] table")
    fspec = _parse_field(ctx, data["field"], base=base)
    nm = st.n_modes(fspec)
    if nm not in (1, 2):
        raise ctx.error("only one- and two-mode fields are supported", "kind", "field")

    trunc = _num(ctx, data, "truncation", st.DEFAULT_TRUNCATION if nm == 1 else 16, kind=int, positive=True)
    if trunc < 3:
        raise ctx.error("truncation must be at least 3", "truncation")
    on_leak = data.get("on_leakage", "error")
    if on_leak not in ("error", "warn"):
        raise ctx.error("on_leakage must be 'error' or 'warn'", "on_leakage")

    g = data.get("grid", {})
    _check_keys(ctx, g, _GRID_KEYS, "grid")
    grid = GridSpec(_num(ctx, g, "min", -0.5, where="grid"), _num(ctx, g, "max", 0.5, where="grid"),
                    _num(ctx, g, "points", 101, kind=int, where="grid", positive=True))
    if not grid.max > grid.min or grid.points < 3:
        raise ctx.error("grid needs max > min and at least 3 points", "points", "grid")

    est = None
    if "estimator" in data:
        e = data["estimator"]
        _check_keys(ctx, e, _EST_KEYS, "estimator")
        method = e.get("method", "richardson")
        if method not in ("central_fd", "richardson", "polyfit", "kernel_integral"):
            raise ctx.error(f"unknown estimator method {method!r}", "method", "estimator")
        step = e.get("step_or_width")
        if step is not None:
            step = _num(ctx, e, "step_or_width", where="estimator", positive=True)
        est = ex.Estimator(method, step, _num(ctx, e, "accuracy", 2, kind=int, where="estimator"),
                           _num(ctx, e, "levels", 5, kind=int, where="estimator"),
                           _num(ctx, e, "degree", 4, kind=int, where="estimator"),
                           bool(e.get("weighted", True)), _num(ctx, e, "halvings", 0, kind=int, where="estimator"))
        if est.accuracy not in (2, 4):
            raise ctx.error("accuracy must be 2 or 4", "accuracy", "estimator")

    shots, lind = None, None
    if "noise" in data:
        nz = data["noise"]
        _check_keys(ctx, nz, _NOISE_KEYS, "noise")
        if "shots" in nz:
            shots = _num(ctx, nz, "shots", kind=int, where="noise", positive=True)
        if "lindblad" in nz:
            lt = nz["lindblad"]
            _check_keys(ctx, lt, _LINDBLAD_KEYS, "noise.lindblad")
            lind = LindbladSpec(*(_num(ctx, lt, k, 0.0, where="noise.lindblad", nonneg=True)
                                  for k in ("kappa", "gamma", "gamma_phi")))
    noisy = shots is not None or lind is not None
    if noisy and est is not None and est.method in ("central_fd", "richardson"):
        raise ctx.error(f"{est.method} needs an exact evaluable source; use polyfit or kernel_integral with noise",
                        "method", "estimator")
    if lind is not None and est is not None and est.method == "kernel_integral":
        raise ctx.error("kernel_integral needs a symmetric grid; dissipative runs are forward-only", "method",
                        "estimator")

    runs = []
    for r in data.get("run", []):
        _check_keys(ctx, r, _RUN_KEYS, "run")
        probe = _parse_probe(ctx, r)
        inter = r.get("interaction")
        if inter not in [i.value for i in Interaction]:
            raise ctx.error(f"unknown interaction {inter!r}", "interaction", "run")
        proj = r.get("projector")
        if proj not in PROJECTORS:
            raise ctx.error(f"projector must be one of {', '.join(PROJECTORS)}", "projector", "run")
        if Interaction(inter).n_modes == 2:
            modes = (0, 1)
        elif "mode" in r:
            modes = (_num(ctx, r, "mode", kind=int, where="run") - 1,)
        else:
            modes = (0,) if nm == 1 else ()
        run = ex.RunSpec(probe, inter, proj, modes if modes else (nm,))
        _validate_run(ctx, run, nm)
        runs.append(run)

    obs = tuple(_parse_observable(ctx, o, nm) for o in data.get("observable", []))
    if not obs and not runs:
        raise ctx.error("scenario requests no observables and declares no runs")

    out = data.get("output", {})
    _check_keys(ctx, out, _OUT_KEYS, "output")
    seed = _num(ctx, data, "seed", DEFAULT_SEED, kind=int, nonneg=True)
    return Scenario(name, fspec, trunc, str(data.get("description", "")), seed,
                    _num(ctx, data, "leakage_tol", st.LEAKAGE_TOL, positive=True), on_leak, grid, est, shots, lind,
                    tuple(runs), obs, out.get("dir"), bool(out.get("series", True)), path, data)


def bundled_dir():
    return resources.files("probe_homodyne") / "scenarios"


def list_bundled() -> list[tuple[str, str]]:
    out = []
    for p in sorted(bundled_dir().iterdir(), key=lambda p: p.name):
        if p.name.endswith(".toml"):
            sc = parse_scenario(p.read_text(), p.name)
            out.append((sc.name, sc.description))
    return out


def load_scenario(ref: str) -> Scenario:
    """Load a scenario from a path, or by bundled name."""
    p = Path(ref)
    if p.is_file():
        return parse_scenario(p.read_text(), str(p), p.parent)
    cand = bundled_dir() / f"{ref}.toml"
    if cand.is_file():
        return parse_scenario(cand.read_text(), f"bundled:{ref}")
    raise ScenarioError(f"no scenario file or bundled scenario named {ref!r}", ref, None)


# ---------------------------------------------------------------------------
# execution

@dataclass
class RunOutcome:
    scenario: Scenario
    results: list[ex.MomentResult]
    series: dict[str, Any]
    manifest: dict
    leakage_alarm: bool
    state_leakage: float


def with_overrides(sc: Scenario, seed: int | None = None, truncation: int | None = None) -> Scenario:
    """Apply command-line overrides of the seed and truncation."""
    if seed is not None:
        sc = replace(sc, seed=int(seed))
    if truncation is not None:
        sc = replace(sc, truncation=int(truncation))
    return sc


def build_experiment(sc: Scenario, seed: int | None = None, estimator: ex.Estimator | None = None,
                     shots: int | None = None) -> ex.Experiment:
    rho = st.build_field(sc.field, sc.truncation, sc.leakage_tol)
    nshots = sc.shots if shots is None else shots
    spec = ShotSpec(nshots, sc.seed if seed is None else seed) if nshots else None
    return ex.Experiment(rho, estimator or sc.estimator, sc.grid.array(), spec, sc.lindblad)


def protocols_for(req: ObservableRequest) -> dict[str, ex.Protocol]:
    """Protocols behind one requested observable, keyed by their role."""
    name = req.name
    squares = ex.protocol_squares_twoatom if req.protocol == "two_atom" else ex.protocol_squares_twophoton
    if name in ("X", "Y"):
        if req.homodyne:
            build = ex.protocol_X_homodyne if name == "X" else ex.protocol_Y_homodyne
        else:
            build = ex.protocol_X if name == "X" else ex.protocol_Y
        return {"main": build(req.phi, req.mode)}
    if name == "n":
        return {"main": ex.protocol_n(req.mode)}
    if name in ("X2", "Y2"):
        return {"main": squares(req.phi, req.mode)[0 if name == "X2" else 1]}
    if name in ("VarX", "VarY"):
        first = (ex.protocol_X if name == "VarX" else ex.protocol_Y)(req.phi, req.mode)
        return {"first": first, "square": squares(req.phi, req.mode)[0 if name == "VarX" else 1]}
    if name == "A":
        return {"main": ex.protocol_A(req.phi1, req.phi2)}
    if name == "B":
        return {"main": ex.protocol_B(req.phi1, req.phi2)}
    protos = ex.two_mode_protocols(req.phi1, req.phi2, req.protocol)
    if name in ("X2_two_mode", "Y2_two_mode"):
        return {k: protos[k] for k in ("X2@1", "X2@2", "Y2@1", "Y2@2", "A", "B")}
    return protos


def planned_runs(sc: Scenario) -> dict:
    """Run manifest without computing anything."""
    declared = [r.label for r in sc.runs]
    per_obs = {}
    for q in sc.observables:
        per_obs[q.label()] = list(dict.fromkeys(r.label for p in protocols_for(q).values() for r in p.runs))
    every = sorted(set(declared) | {r for v in per_obs.values() for r in v})
    return {
        "declared_runs": declared,
        "auto_added_runs": [r for r in every if r not in declared],
        "runs_per_observable": per_obs,
        "total_preparations": len(every),
    }


def _measure(exp: ex.Experiment, req: ObservableRequest) -> ex.MomentResult:
    protos = protocols_for(req)
    comps = {k: exp.measure(p) for k, p in protos.items()}
    if "main" in comps:
        return comps["main"]
    if req.name in ("VarX", "VarY"):
        orc = oracle.direct_moment(exp.field, req.name, req.phi, mode=req.mode)
        return ex.variance(comps["square"], comps["first"], orc)
    if req.name in ("X2_two_mode", "Y2_two_mode"):
        x2, y2 = ex.two_mode_second_moments(comps, exp.field, req.phi1, req.phi2)
        return x2 if req.name == "X2_two_mode" else y2
    d = ex.duan_check(req.a0, comps, req.signs, oracle_field=exp.field, phi1=req.phi1, phi2=req.phi2)
    runs = tuple(dict.fromkeys(r for c in comps.values() for r in c.runs))
    return d.to_result(runs, exp.estimator.method)


def run_scenario(sc: Scenario, jobs: int = 1) -> RunOutcome:
    """Execute every declared run and requested observable."""
    exp = build_experiment(sc)
    for r in sc.runs:
        exp.series(r)
    if jobs > 1 and len(sc.observables) > 1:
        with ThreadPoolExecutor(jobs) as pool:
            results = list(pool.map(lambda q: _measure(exp, q), sc.observables))
    else:
        results = [_measure(exp, q) for q in sc.observables]
    labels = [q.label() for q in sc.observables]
    results = [ex.MomentResult(lab, r.extracted, r.oracle, r.inputs, r.phases, r.error_estimate, r.method, r.runs)
               for lab, r in zip(labels, results)]

    manifest = planned_runs(sc)
    manifest["executed_runs"] = exp.executed_runs()
    series = {r.label: exp.series(r) for r in exp.runs()} if sc.write_series else {}
    return RunOutcome(sc, results, series, manifest, exp.leakage_alarm(), float(exp.field.meta.get("leakage", 0.0)))


def results_document(outcome: RunOutcome, timestamp: str | None = None) -> dict:
    sc = outcome.scenario
    ts = timestamp or _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return {
        "header": {"format": RESULTS_FORMAT, "timestamp": ts},
        "scenario": {
            "name": sc.name,
            "source": sc.source,
            "seed": sc.seed,
            "truncation": sc.truncation,
            "field": repr(sc.field),
            "grid": {"min": sc.grid.min, "max": sc.grid.max, "points": sc.grid.points},
            "shots": sc.shots,
            "lindblad": None if sc.lindblad is None else {"kappa": sc.lindblad.kappa, "gamma": sc.lindblad.gamma,
                                                          "gamma_phi": sc.lindblad.gamma_phi},
        },
        "status": {"leakage_alarm": outcome.leakage_alarm, "state_leakage": outcome.state_leakage},
        "manifest": outcome.manifest,
        "results": [r.to_dict() for r in outcome.results],
    }


def dumps_results(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=False, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    return str(o)


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _safe(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.+-]+", "_", label).strip("_")


def write_outputs(outcome: RunOutcome, out_dir: Path, timestamp: str | None = None) -> Path:
    out_dir = Path(out_dir)
    for label, s in outcome.series.items():
        _atomic_write(out_dir / "series" / f"{_safe(label)}.csv", s.to_csv_text())
    path = out_dir / "results.json"
    _atomic_write(path, dumps_results(results_document(outcome, timestamp)))
    return path


def summary_table(outcome: RunOutcome) -> str:
    rows = [("observable", "extracted", "oracle", "|gap|", "err_est", "method")]
    for r in outcome.results:
        rows.append((r.observable, f"{r.extracted:.8g}", "-" if r.oracle is None else f"{r.oracle:.8g}",
                     "-" if r.gap is None else f"{r.gap:.2e}", f"{r.error_estimate:.2e}", r.method))
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    m = outcome.manifest
    lines.append("")
    lines.append(f"preparations: {m['total_preparations']} ({len(m['auto_added_runs'])} auto-added)")
    for r in outcome.results:
        if r.phases.get("violates") is not None:
            verdict = "violated (entangled)" if r.phases["violates"] else "not violated"
            lines.append(f"{r.observable}: bound {r.phases['bound']:.6g}, {verdict}")
        fit = [d.details.get("residual_rms") for d in r.inputs if d.method == "polyfit"]
        if fit:
            lines.append(f"{r.observable}: polyfit residual rms {max(fit):.2e}")
    return "\n".join(lines)
