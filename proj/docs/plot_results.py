#!/usr/bin/env python3
"""Quick-look plots for the figure CSVs written by `ddam run`.

Usage: python3 docs/plot_results.py out/fig3_regret_vs_T.csv [...]

Convenience only; the CSVs are the supported interface.
"""
import csv
import sys
from collections import defaultdict

import matplotlib.pyplot as plt


def load(path):
    with open(path) as f:
        return list(csv.DictReader(f))


def plot_file(path, ax):
    rows = load(path)
    cols = rows[0].keys()
    x_col = "T" if "T" in cols else ("rho" if "rho" in cols else "y0")
    y_candidates = [c for c in ("avg_static_regret", "avg_dynamic_regret",
                                "self_nmse") if c in cols]
    y_col = y_candidates[0]
    series = defaultdict(lambda: defaultdict(list))
    for r in rows:
        key = r.get("protocol", "run")
        if "omega" in cols:
            key += f" (omega={r['omega']})"
        series[key][float(r[x_col])].append(float(r[y_col]))
    for name, pts in sorted(series.items()):
        xs = sorted(pts)
        ys = [sum(pts[x]) / len(pts[x]) for x in xs]  # mean over seeds
        ax.plot(xs, ys, marker="o", label=name)
    ax.set_xlabel(x_col)
    ax.set_ylabel(y_col)
    ax.set_title(path.split("/")[-1])
    ax.legend(fontsize=7)


def main():
    paths = sys.argv[1:]
    if not paths:
        sys.exit(__doc__)
    fig, axes = plt.subplots(1, len(paths), figsize=(6 * len(paths), 4.5))
    if len(paths) == 1:
        axes = [axes]
    for path, ax in zip(paths, axes):
        plot_file(path, ax)
    fig.tight_layout()
    out = "ddam_plots.png"
    fig.savefig(out, dpi=130)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
