"""Command-line front end.

    probe-homodyne run SCENARIO [SCENARIO ...] [--jobs N] [--seed S] [--out DIR] [--truncation N]
    probe-homodyne compare SCENARIO [--seeds K] [--shots M]
    probe-homodyne validate SCENARIO [SCENARIO ...]
    probe-homodyne list-bundled

SCENARIO is a TOML path or the name of a bundled scenario. Exit codes: 0 on
success, 2 on a configuration or validation error, 3 on a numerical failure
(truncation leak, leakage alarm, non-converged dissipative integration).
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import compare as cmp
from . import scenario as scn
from .errors import (
    AsymmetricGrid,
    BadParameter,
    BadSpace,
    HomodyneError,
    LeakageAlarm,
    ScenarioError,
    ShapeMismatch,
    WindowTooSmall,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
_CONFIG_ERRORS = (ScenarioError, BadParameter, BadSpace, ShapeMismatch, WindowTooSmall, AsymmetricGrid)


def _exit_code(exc: Exception) -> int:
    return EXIT_CONFIG if isinstance(exc, _CONFIG_ERRORS) else EXIT_NUMERIC


def _load(ref: str, args) -> scn.Scenario:
    sc = scn.load_scenario(ref)
    return scn.with_overrides(sc, getattr(args, "seed", None), getattr(args, "truncation", None))


def _out_dir(sc: scn.Scenario, out: str | None) -> Path:
    if out is not None:
        return Path(out) / sc.name
    if sc.output_dir:
        return Path(sc.output_dir)
    return Path("runs") / sc.name


def _run_one(ref: str, args) -> tuple[int, str]:
    try:
        sc = _load(ref, args)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LeakageAlarm)
            outcome = scn.run_scenario(sc, jobs=args.jobs)
        path = scn.write_outputs(outcome, _out_dir(sc, args.out))
    except ScenarioError as exc:
        return EXIT_CONFIG, f"error: {exc}"
    except HomodyneError as exc:
        return _exit_code(exc), f"error: {ref}: {exc}"
    text = f"== {sc.name} ==\n{scn.summary_table(outcome)}\nresults: {path}"
    if outcome.leakage_alarm:
        if sc.on_leakage == "error":
            return EXIT_NUMERIC, text + "\nerror: population reached the top Fock level; raise the truncation"
        text += "\nwarning: population reached the top Fock level"
    return EXIT_OK, text


def cmd_run(args) -> int:
    refs = args.scenario
    if args.jobs > 1 and len(refs) > 1:
        with ThreadPoolExecutor(args.jobs) as pool:
            outs = list(pool.map(lambda r: _run_one(r, args), refs))
    else:
        outs = [_run_one(r, args) for r in refs]
    for code, text in outs:
        print(text, file=sys.stdout if code == EXIT_OK else sys.stderr)
    return max(code for code, _ in outs)


def cmd_validate(args) -> int:
    code = EXIT_OK
    for ref in args.scenario:
        try:
            sc = _load(ref, args)
        except HomodyneError as exc:
            print(f"error: {exc}", file=sys.stderr)
            code = max(code, _exit_code(exc))
            continue
        plan = scn.planned_runs(sc)
        print(f"ok: {sc.name} ({len(sc.observables)} observables, {plan['total_preparations']} preparations, "
              f"{len(plan['auto_added_runs'])} auto-added)")
        for run in plan["auto_added_runs"]:
            print(f"  + {run}")
    return code


def cmd_compare(args) -> int:
    try:
        sc = _load(args.scenario, args)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LeakageAlarm)
            reports = cmp.compare_scenario(sc, n_seeds=args.seeds, shots=args.shots)
    except HomodyneError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    shots = args.shots or sc.shots or 10_000
    print(f"== {sc.name}: estimator comparison ==")
    print(cmp.format_report(reports, shots, args.seeds))
    if args.out is not None:
        path = Path(args.out) / sc.name / "compare.json"
        scn._atomic_write(path, json.dumps(cmp.report_document(reports, shots, args.seeds), indent=2) + "\n")
        print(f"report: {path}")
    return EXIT_OK


def cmd_list(args) -> int:
    for name, desc in scn.list_bundled():
        print(f"{name:16s} {desc}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="probe-homodyne", description="Field moments from probe-population derivatives.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, multi=True):
        sp.add_argument("scenario", nargs="+" if multi else None, help="scenario file or bundled name")
        sp.add_argument("--seed", type=int, default=None, help="override the scenario RNG seed")
        sp.add_argument("--truncation", type=int, default=None, help="override the Fock truncation")
        sp.add_argument("--out", default=None, help="output root directory (a subdirectory per scenario)")
        sp.add_argument("--jobs", type=int, default=1, help="worker threads")

    sp = sub.add_parser("run", help="run scenarios and write series CSVs and results JSON")
    common(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("compare", help="compare the four derivative estimators on one scenario")
    common(sp, multi=False)
    sp.add_argument("--seeds", type=int, default=10, help="seed-ensemble size for the shot-noise columns")
    sp.add_argument("--shots", type=int, default=None, help="shots per grid point (default: scenario or 1e4)")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("validate", help="parse and validate scenarios without computing")
    common(sp)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("list-bundled", help="list bundled scenarios")
    sp.set_defaults(func=cmd_list)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
