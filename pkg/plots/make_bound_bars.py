#!/usr/bin/env python3
"""Grouped bars: theoretical bound vs empirical lower bound per pair.

Input: the dominance table written by `steinpp bound`
(pair_id,bound_id,bound,bound_stderr,kr_lower,kr_stderr,margin,pass).
Whiskers show 3 standard errors; the lower-bound bar staying below the
bound bar (beyond whiskers) is the dominance property made visible.

    python make_bound_bars.py --in dominance.csv --out bars
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import matplotlib.pyplot as plt
import numpy as np

from figstyle import read_csv, save

REQUIRED = ["pair_id", "bound", "bound_stderr", "kr_lower", "kr_stderr"]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--in", dest="input", required=True)
    ap.add_argument("--out", required=True)
    args = ap.parse_args(argv)

    header, rows = read_csv(args.input)
    missing = [c for c in REQUIRED if c not in header]
    if missing:
        raise SystemExit(f"{args.input}: missing columns {missing}")
    col = {name: header.index(name) for name in REQUIRED}
    pairs = [r[col["pair_id"]] for r in rows]
    bound = np.array([float(r[col["bound"]]) for r in rows])
    b_se = np.array([float(r[col["bound_stderr"]]) for r in rows])
    kr = np.array([float(r[col["kr_lower"]]) for r in rows])
    kr_se = np.array([float(r[col["kr_stderr"]]) for r in rows])

    x = np.arange(len(pairs))
    width = 0.38
    fig, ax = plt.subplots(figsize=(1.4 + 1.1 * len(pairs), 4.2))
    ax.bar(x - width / 2, bound, width, yerr=3 * b_se, capsize=3,
           label="theoretical bound", color="#4878cf")
    ax.bar(x + width / 2, kr, width, yerr=3 * kr_se, capsize=3,
           label="empirical lower bound", color="#ee854a")
    ax.set_xticks(x)
    ax.set_xticklabels(pairs, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("transport distance")
    ax.legend(fontsize=9)
    fig.tight_layout()
    for path in save(fig, args.out):
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
