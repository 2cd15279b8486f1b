"""Side-by-side accuracy and robustness of the four derivative estimators.

For each single-protocol observable of a scenario the report gives:

* the noiseless gap to the oracle for every method;
* bias and spread over a seed ensemble with binomial shot noise, every
  method reading the same sampled series (central_fd at the grid spacing);
* the kernel-width sweep and its log-log convergence slope.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import extraction as ex
from . import states as st
from .errors import HomodyneError
from .sampling import ShotSpec

METHODS = ("central_fd", "richardson", "polyfit", "kernel_integral")
SIGMAS = (0.2, 0.1, 0.05, 0.025)

# estimator settings used for the noiseless column
NOISELESS = {
    "central_fd": ex.Estimator("central_fd", 1e-3),
    "richardson": ex.Estimator("richardson"),
    # degree 6: on a symmetric window degree 5 gives the same even derivatives as degree 4
    "polyfit": ex.Estimator("polyfit", 0.1, degree=6),
    "kernel_integral": ex.Estimator("kernel_integral", 0.05, halvings=3),
}


@dataclass
class MethodRow:
    method: str
    noiseless_gap: float | None
    shot_bias: float | None = None
    shot_std: float | None = None
    setting: str = ""
    note: str = ""


@dataclass
class ObservableReport:
    observable: str
    oracle: float
    rows: list[MethodRow] = field(default_factory=list)
    sigma_errors: list[float] = field(default_factory=list)
    sigma_slope: float | None = None

    def to_dict(self) -> dict:
        return {
            "observable": self.observable,
            "oracle": self.oracle,
            "methods": [vars(r) for r in self.rows],
            "kernel_sweep": {"sigmas": list(SIGMAS), "errors": self.sigma_errors, "slope": self.sigma_slope},
        }


def _protocols(sc) -> list[ex.Protocol]:
    """Every distinct protocol behind the scenario's observables.

    Composites (variances, two-mode sums, Duan) are compared through their
    component protocols.
    """
    from .scenario import protocols_for

    seen = {}
    for q in sc.observables:
        for proto in protocols_for(q).values():
            seen.setdefault(_label(proto), proto)
    return list(seen.values())


def _label(p: ex.Protocol) -> str:
    ph = ", ".join(f"{k}={v:g}" for k, v in p.phases.items() if isinstance(v, float))
    mode = p.oracle_args.get("mode")
    m = "" if mode is None else f"@{mode + 1}"
    return f"{p.observable}{m}({ph})" if ph else p.observable + m


def slope_loglog(xs, ys) -> float | None:
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    ok = (xs > 0) & (ys > 1e-14)
    if ok.sum() < 2:
        return None
    return float(np.polyfit(np.log(xs[ok]), np.log(ys[ok]), 1)[0])


def kernel_sweep(rho: "st.DensityOperator", protocol: ex.Protocol, sigmas=SIGMAS) -> tuple[list[float], float | None]:
    """Raw kernel-estimator error against richardson for each width."""
    ref = ex.Experiment(rho, ex.Estimator("richardson")).measure(protocol, with_oracle=False).extracted
    errs = []
    for s in sigmas:
        v = ex.Experiment(rho, ex.Estimator("kernel_integral", s)).measure(protocol, with_oracle=False).extracted
        errs.append(abs(v - ref))
    return errs, slope_loglog(sigmas, errs)


def compare_scenario(sc, n_seeds: int = 10, shots: int | None = None) -> list[ObservableReport]:
    rho = st.build_field(sc.field, sc.truncation, sc.leakage_tol)
    grid = sc.grid.array()
    m = shots or sc.shots or 10_000
    reach = min(-grid[0], grid[-1])
    dx = float(np.max(np.diff(grid)))
    sigma_noisy = reach / 6
    reports = []
    for proto in _protocols(sc):
        orc = ex.Experiment(rho).measure(proto).oracle
        rep = ObservableReport(_label(proto), orc)
        for method in METHODS:
            est = NOISELESS[method]
            try:
                gap = ex.Experiment(rho, est, grid=grid).measure(proto).gap
            except HomodyneError as exc:
                rep.rows.append(MethodRow(method, None, note=str(exc)))
                continue
            row = MethodRow(method, gap)
            if method == "richardson":
                row.note = "needs evaluations at arbitrary tau; no shot-noise column"
                rep.rows.append(row)
                continue
            if method == "central_fd":
                g, per_point = grid, m
                est_n = ex.Estimator("central_fd", dx)
                row.setting = f"step {dx:.3g} (grid spacing)"
            elif method == "polyfit":
                g, per_point = grid, m
                est_n = sc.estimator if sc.estimator and sc.estimator.method == "polyfit" else ex.SAMPLED_DEFAULT
                row.setting = f"window {est_n.step_or_width:g}, degree {est_n.degree}"
            else:
                g, per_point = grid, m
                if sigma_noisy < 4 * dx or abs(grid[0] + grid[-1]) > 1e-12:
                    row.note = "grid too coarse or asymmetric for a kernel estimate"
                    rep.rows.append(row)
                    continue
                est_n = ex.Estimator("kernel_integral", sigma_noisy)
                row.setting = f"sigma {sigma_noisy:.3g}"
            vals = []
            for k in range(n_seeds):
                e = ex.Experiment(rho, est_n, grid=g, shots=ShotSpec(per_point, sc.seed + k))
                vals.append(e.measure(proto, with_oracle=False).extracted)
            row.shot_bias = float(np.mean(vals) - orc)
            row.shot_std = float(np.std(vals, ddof=1)) if n_seeds > 1 else 0.0
            rep.rows.append(row)
        rep.sigma_errors, rep.sigma_slope = kernel_sweep(rho, proto)
        reports.append(rep)
    return reports


def _fmt(x, spec=".2e"):
    return "-" if x is None else format(x, spec)


def format_report(reports: list[ObservableReport], shots: int, n_seeds: int) -> str:
    lines = [f"shot-noise columns: {shots} shots per grid point, same sampled series for every method, {n_seeds} seeds"]
    for rep in reports:
        lines.append("")
        lines.append(f"{rep.observable}   oracle = {rep.oracle:.8g}")
        rows = [("method", "noiseless |gap|", "shot bias", "shot std", "setting / note")]
        for r in rep.rows:
            rows.append((r.method, _fmt(r.noiseless_gap), _fmt(r.shot_bias, "+.2e"), _fmt(r.shot_std),
                         r.setting or r.note))
        widths = [max(len(row[i]) for row in rows) for i in range(5)]
        lines += ["  " + "  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in rows]
        sweep = ", ".join(f"{s:g}:{e:.2e}" for s, e in zip(SIGMAS, rep.sigma_errors))
        slope = "n/a (errors at rounding level)" if rep.sigma_slope is None else f"{rep.sigma_slope:.2f}"
        lines.append(f"  kernel sigma sweep (sigma:error) {sweep}; log-log slope {slope}")
    return "\n".join(lines)


def report_document(reports: list[ObservableReport], shots: int, n_seeds: int) -> dict:
    return {"shots": shots, "seeds": n_seeds, "observables": [r.to_dict() for r in reports]}


__all__ = ["compare_scenario", "format_report", "kernel_sweep", "report_document", "slope_loglog"]
