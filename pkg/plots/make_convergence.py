#!/usr/bin/env python3
"""Relaxation toward the stationary law on a log scale.

Input: a rate curve CSV (t,abs_dev,stderr,ref_bound) written by
`steinpp verify` for a birth-death check.  The reference line
e^(-t)(|phi| + M(X)) has slope -1 on the log scale; the empirical curve
stays below it.

    python make_convergence.py --in glauber_rate_pois.csv --out rate
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import matplotlib.pyplot as plt
import numpy as np

from figstyle import read_csv, save


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--in", dest="input", required=True)
    ap.add_argument("--out", required=True)
    args = ap.parse_args(argv)

    header, rows = read_csv(args.input)
    expected = ["t", "abs_dev", "stderr", "ref_bound"]
    if header != expected:
        raise SystemExit(f"{args.input}: expected columns {expected}, "
                         f"got {header}")
    if not rows:
        raise SystemExit(f"{args.input}: empty t-grid")
    t = np.array([float(r[0]) for r in rows])
    dev = np.array([float(r[1]) for r in rows])
    se = np.array([float(r[2]) for r in rows])
    ref = np.array([float(r[3]) for r in rows])

    fig, ax = plt.subplots(figsize=(5.2, 4.0))
    floor = max(1e-6, 0.1 * min(v for v in dev if v > 0) if np.any(dev > 0) else 1e-6)
    ax.errorbar(t, np.maximum(dev, floor), yerr=3 * se, fmt="o-",
                label="|P_t F - E F(stationary)|", color="#d65f5f")
    ax.plot(t, ref, "k--", label="e^{-t} (|phi| + M(X))")
    ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("deviation")
    ax.legend(fontsize=9)
    fig.tight_layout()
    for path in save(fig, args.out):
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
