#!/usr/bin/env python3
"""Plot a run trace or a simulation's mean set sizes.

    plot_trace.py out/trace.csv [-o trace.png]
    plot_trace.py sim/sizes.csv [-o sizes.png]

A trace gives two panels: reported membership per model over time (exclusion
and re-inclusion events marked) and the per-model log statistics.
"""

import argparse
import csv
import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def num(s):
    return math.nan if s in ("", "NA") else float(s)


def plot_sizes(rows, out):
    t = [int(r["t"]) for r in rows]
    size = [num(r["mean_size"]) for r in rows]
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.step(t, size, where="post")
    ax.set_xlabel("t")
    ax.set_ylabel("mean reported set size")
    fig.tight_layout()
    fig.savefig(out, dpi=150)


def plot_trace(rows, header, out):
    models = [h[len("stat:"):] for h in header if h.startswith("stat:")]
    t = [int(r["t"]) for r in rows]
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(8, 2 + 0.35 * len(models) + 3), sharex=True)
    for k, m in enumerate(models):
        inside = [t[i] for i, r in enumerate(rows) if m in r["reported"].split(";")]
        top.scatter(inside, [k] * len(inside), s=2, color="tab:blue")
        for i, r in enumerate(rows):
            for e in filter(None, r["events"].split(";")):
                if e[1:] == m:
                    top.scatter(t[i], k, marker="x" if e[0] == "-" else "o", color="tab:red", s=25)
        bottom.plot(t, [num(r["stat:" + m]) for r in rows], lw=0.8, label=m)
    top.set_yticks(range(len(models)), models)
    top.set_ylabel("reported")
    bottom.set_ylabel("log statistic")
    bottom.set_xlabel("t")
    if len(models) <= 12:
        bottom.legend(fontsize=7, ncol=3)
    fig.tight_layout()
    fig.savefig(out, dpi=150)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("csv")
    ap.add_argument("-o", "--out")
    a = ap.parse_args()
    with open(a.csv, newline="") as f:
        reader = csv.DictReader(f)
        rows = list(reader)
        header = reader.fieldnames or []
    out = a.out or a.csv.rsplit(".", 1)[0] + ".png"
    if "mean_size" in header:
        plot_sizes(rows, out)
    else:
        plot_trace(rows, header, out)
    print(out)


if __name__ == "__main__":
    main()
