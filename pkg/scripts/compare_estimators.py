"""Estimator comparison over bundled scenarios (same report as `probe-homodyne compare`).

Usage:
    python scripts/compare_estimators.py [SCENARIO ...] [--seeds 10]
"""

import argparse
import warnings

from probe_homodyne import compare as cmp
from probe_homodyne import scenario as scn
from probe_homodyne.errors import LeakageAlarm


def main(argv=None):
    p = argparse.ArgumentParser(description="estimator comparison")
    p.add_argument("scenario", nargs="*", default=["coherent-quadratures", "squeezed-vacuum", "ens-thermal"])
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--shots", type=int, default=10_000)
    args = p.parse_args(argv)
    for ref in args.scenario:
        sc = scn.load_scenario(ref)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LeakageAlarm)
            reports = cmp.compare_scenario(sc, n_seeds=args.seeds, shots=args.shots)
        print(f"== {sc.name} ==")
        print(cmp.format_report(reports, args.shots, args.seeds))
        print()


if __name__ == "__main__":
    main()
