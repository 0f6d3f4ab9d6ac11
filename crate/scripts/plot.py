#!/usr/bin/env python3
"""Plot the CSV files written by `periodica`.

Usage: plot.py RUN_DIR [-o FIGURE]

Looks for periodogram.csv, confset.csv, peakdist.csv and design_rows.csv in
RUN_DIR and draws whichever are present.
"""

import argparse
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def periodogram(ax, run):
    pg = pd.read_csv(run / "periodogram.csv")
    ax.plot(pg.theta, pg.power, lw=0.6)
    peaks = run / "peaks.csv"
    if peaks.exists():
        pk = pd.read_csv(peaks)
        ax.plot(pk.theta, pk.power, "o", ms=3)
    ax.set_xscale("log")
    ax.set_xlabel("period")
    ax.set_ylabel("power")


def confset(ax, run):
    cs = pd.read_csv(run / "confset.csv", na_values=["NA"]).dropna(subset=["pvalue"])
    ax.plot(cs.theta0, cs.pvalue, "o", ms=3)
    ax.axhline(0.05, ls="--", lw=0.8, color="grey")
    ax.axhline(0.01, ls=":", lw=0.8, color="grey")
    ax.set_xscale("log")
    ax.set_xlabel("period")
    ax.set_ylabel("p-value")


def peakdist(ax, run):
    pd_ = pd.read_csv(run / "peakdist.csv")
    ax.hist(pd_.theta, bins=100)
    ax.set_xlabel("periodogram peak")
    ax.set_ylabel("count")


def design(ax, run):
    rows = pd.read_csv(run / "design_rows.csv")
    for kind, g in rows.groupby("kind"):
        ax.plot(g.parameter, g["mean"], "o-", ms=3, label=kind)
    ax.set_xlabel("design parameter")
    ax.set_ylabel("mean identification failures")
    ax.legend()


PANELS = [
    ("periodogram.csv", periodogram),
    ("confset.csv", confset),
    ("peakdist.csv", peakdist),
    ("design_rows.csv", design),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("run", type=Path)
    ap.add_argument("-o", "--output", type=Path)
    args = ap.parse_args()
    panels = [(name, draw) for name, draw in PANELS if (args.run / name).exists()]
    if not panels:
        sys.exit(f"no plottable CSV files in {args.run}")
    fig, axes = plt.subplots(len(panels), 1, figsize=(7, 3 * len(panels)), squeeze=False)
    for ax, (name, draw) in zip(axes[:, 0], panels):
        draw(ax, args.run)
        ax.set_title(name)
    fig.tight_layout()
    out = args.output or args.run / "plot.png"
    fig.savefig(out, dpi=120)
    print(out)


if __name__ == "__main__":
    main()
