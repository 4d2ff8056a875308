#!/usr/bin/env python3
"""Side-by-side scatter panels of point-pattern realizations.

Input: one or more realization CSVs (columns x,y[,z],multiplicity) as
written by `steinpp sample`.  Empty realizations render as empty panels.

    python make_scatter_panels.py --in a.csv b.csv c.csv --out panels
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import matplotlib.pyplot as plt

from figstyle import read_csv, save


def load_points(path):
    header, rows = read_csv(path)
    if header[:2] != ["x", "y"] and header[:1] != ["x"]:
        raise SystemExit(f"{path}: expected realization columns x[,y[,z]],"
                         f"multiplicity, got {header}")
    if header[-1] != "multiplicity":
        raise SystemExit(f"{path}: missing multiplicity column")
    xs, ys, sizes = [], [], []
    for row in rows:
        xs.append(float(row[0]))
        ys.append(float(row[1]) if len(header) > 2 else 0.0)
        sizes.append(10 + 14 * (int(row[-1]) - 1))
    return xs, ys, sizes


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--in", dest="inputs", nargs="+", required=True)
    ap.add_argument("--out", required=True, help="output path without extension")
    ap.add_argument("--titles", nargs="*", default=None)
    args = ap.parse_args(argv)

    n = len(args.inputs)
    titles = args.titles or [os.path.splitext(os.path.basename(p))[0]
                             for p in args.inputs]
    fig, axes = plt.subplots(1, n, figsize=(3.2 * n, 3.4), squeeze=False)
    for ax, path, title in zip(axes[0], args.inputs, titles):
        xs, ys, sizes = load_points(path)
        ax.scatter(xs, ys, s=sizes, c="k", linewidths=0)
        ax.set_aspect("equal", adjustable="datalim")
        ax.set_title(title, fontsize=10)
        ax.tick_params(labelsize=8)
    fig.tight_layout()
    for path in save(fig, args.out):
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
