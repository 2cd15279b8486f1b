"""Spread of extracted <n> and <Y> under shot noise, versus shots and fit window.

Also contrasts the single-run slope estimate of <Y> with the homodyne pair
at the same number of shots per preparation.

Usage:
    python scripts/shot_noise_study.py [--seeds 30] [--nbar 1.5]
"""

import argparse

import numpy as np

from probe_homodyne import extraction as ex
from probe_homodyne import states as st
from probe_homodyne.sampling import ShotSpec


def spread(field, proto, estimator, shots, seeds):
    vals = [ex.Experiment(field, estimator, shots=ShotSpec(shots, 1000 + k)).measure(proto).extracted
            for k in range(seeds)]
    return float(np.mean(vals)), float(np.std(vals))


def main(argv=None):
    p = argparse.ArgumentParser(description="shot-noise study")
    p.add_argument("--seeds", type=int, default=30)
    p.add_argument("--nbar", type=float, default=1.5)
    args = p.parse_args(argv)

    thermal = st.build_field(st.Thermal(args.nbar), 60, leakage_tol=1e-6)
    print(f"<n> on Thermal({args.nbar}): mean / std over {args.seeds} seeds")
    print(f"{'shots':>8} " + " ".join(f"{'w=' + str(w):>16}" for w in (0.1, 0.2, 0.3, 0.5)))
    for shots in (1_000, 10_000, 100_000):
        cells = []
        for w in (0.1, 0.2, 0.3, 0.5):
            m, s = spread(thermal, ex.protocol_n(), ex.Estimator("polyfit", w), shots, args.seeds)
            cells.append(f"{m:7.3f}/{s:7.4f}")
        print(f"{shots:8d} " + " ".join(f"{c:>16}" for c in cells))

    coh = st.build_field(st.Coherent(0.5j), 30)
    print("\n<Y_0> on Coherent(0.5i), polyfit w=0.3: single run vs homodyne pair (std)")
    for shots in (1_000, 10_000):
        _, s1 = spread(coh, ex.protocol_Y(0.0), ex.SAMPLED_DEFAULT, shots, args.seeds)
        _, s2 = spread(coh, ex.protocol_Y_homodyne(0.0), ex.SAMPLED_DEFAULT, shots, args.seeds)
        print(f"{shots:8d}  single {s1:.4f}  homodyne {s2:.4f}")


if __name__ == "__main__":
    main()
