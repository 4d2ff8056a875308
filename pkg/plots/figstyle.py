"""Shared matplotlib setup for the figure scripts.

Figures must regenerate byte-identically from the same CSV inputs, so
embedded timestamps are suppressed and SVG ids are salted with a fixed
string.  Nothing in here (or in the scripts) imports the primary package;
the CSV files are the only interface.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

plt.rcParams["svg.hashsalt"] = "steinpp-figures"
plt.rcParams["figure.dpi"] = 110

PNG_KW = {"metadata": {"Software": None}}
SVG_KW = {"metadata": {"Date": None}}


def save(fig, out_base: str) -> list[str]:
    """Write PNG and SVG next to each other; returns the paths."""
    paths = [out_base + ".png", out_base + ".svg"]
    fig.savefig(paths[0], **PNG_KW)
    fig.savefig(paths[1], **SVG_KW)
    plt.close(fig)
    return paths


def read_csv(path: str) -> tuple[list[str], list[list[str]]]:
    import csv

    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SystemExit(f"{path}: empty file, expected a CSV header")
    return rows[0], rows[1:]
