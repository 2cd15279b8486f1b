"""<n> of thermal fields at the ENS and NIST levels, noiseless and with shot noise.

Usage:
    python scripts/thermal_number.py [--shots 10000] [--seeds 20] [--truncation 60]
"""

import argparse

import numpy as np

from probe_homodyne import extraction as ex
from probe_homodyne import states as st
from probe_homodyne.sampling import ShotSpec

LEVELS = (0.06, 0.85, 1.5, 2.9)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--shots", type=int, default=10_000)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--truncation", type=int, default=60)
    p.add_argument("--window", type=float, default=0.3)
    args = p.parse_args(argv)

    print(f"{'nbar':>6} {'noiseless':>12} {'|gap|':>9} {'sampled mean':>13} {'sampled std':>12}")
    for nbar in LEVELS:
        f = st.build_field(st.Thermal(nbar), args.truncation, leakage_tol=1e-6)
        exact = ex.extract_n(f)
        vals = []
        for k in range(args.seeds):
            exp = ex.Experiment(f, ex.Estimator("polyfit", args.window), shots=ShotSpec(args.shots, 1000 + k))
            vals.append(exp.measure(ex.protocol_n()).extracted)
        print(f"{nbar:6.2f} {exact.extracted:12.8f} {exact.gap:9.1e} {np.mean(vals):13.4f} {np.std(vals):12.4f}")


if __name__ == "__main__":
    main()
