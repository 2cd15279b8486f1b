"""Error of <n> under field decay as a function of the polyfit window.

Usage:
    python scripts/decoherence_window.py [--kappa 0.05] [--nbar 1.0]
"""

import argparse
import warnings

import numpy as np

from probe_homodyne import extraction as ex
from probe_homodyne import states as st
from probe_homodyne.errors import LeakageAlarm
from probe_homodyne.evolution import LindbladSpec


def main(argv=None):
    p = argparse.ArgumentParser(description="decoherence vs fit window")
    p.add_argument("--kappa", type=float, default=0.05)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--nbar", type=float, default=1.0)
    p.add_argument("--truncation", type=int, default=30)
    args = p.parse_args(argv)

    f = st.build_field(st.Thermal(args.nbar), args.truncation, leakage_tol=1e-6)
    grid = np.linspace(0.0, 0.5, 51)
    lb = LindbladSpec(kappa=args.kappa, gamma=args.gamma)
    print(f"Thermal({args.nbar}), kappa={args.kappa}, gamma={args.gamma}")
    print(f"{'window':>7} {'<n>':>12} {'|error|':>10}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LeakageAlarm)
        for w in (0.05, 0.1, 0.2, 0.3, 0.5):
            exp = ex.Experiment(f, ex.Estimator("polyfit", w), grid=grid, lindblad=lb)
            v = exp.measure(ex.protocol_n()).extracted
            print(f"{w:7.2f} {v:12.6f} {abs(v - args.nbar):10.2e}")


if __name__ == "__main__":
    main()
