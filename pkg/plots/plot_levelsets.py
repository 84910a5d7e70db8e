#!/usr/bin/env python3
"""Zero-level-set figure from levelset_t<time>_<tag>.csv files.

Usage:
    python plot_levelsets.py --in d1/levelset_t0_average.csv d1/levelset_t0.02_average.csv ... \
        [--in2 d10/levelset_t0_average.csv ...] --out levelsets.png

All contours given to --in share one panel, colored by time; --in2 adds a
second panel (the paired noise intensity).  An empty level set produces an
annotated empty panel rather than an error.
"""
from __future__ import annotations

import argparse
import os
import re

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
from matplotlib import cm
from matplotlib.collections import LineCollection
import numpy as np

from common import LEVELSET_HEADER, read_csv_checked

_TIME_RE = re.compile(r"levelset_t([0-9.eE+-]+)_")


def _time_of(path: str) -> float:
    m = _TIME_RE.search(os.path.basename(path))
    return float(m.group(1)) if m else 0.0


def _draw_panel(ax, paths: list[str], title: str):
    times = [_time_of(p) for p in paths]
    tmax = max(times) if times else 1.0
    drew = False
    for path, t in sorted(zip(paths, times), key=lambda pt: pt[1]):
        rows = read_csv_checked(path, LEVELSET_HEADER)
        if not rows:
            continue
        segs = np.array([[[float(r["x1"]), float(r["y1"])],
                          [float(r["x2"]), float(r["y2"])]] for r in rows])
        color = cm.viridis(t / tmax if tmax > 0 else 0.0)
        ax.add_collection(LineCollection(segs, colors=[color], linewidths=1.2,
                                         label=f"t = {t:g}"))
        drew = True
    if not drew:
        ax.text(0.5, 0.5, "empty level set", ha="center", va="center",
                transform=ax.transAxes)
    ax.set_xlim(-1, 1)
    ax.set_ylim(-1, 1)
    ax.set_aspect("equal")
    ax.set_title(title)
    if drew:
        ax.legend(loc="upper right", fontsize=8)
    ax.grid(alpha=0.3)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--in", dest="inputs", nargs="+", required=True,
                        help="level-set CSVs for the first panel")
    parser.add_argument("--in2", dest="inputs2", nargs="*", default=None,
                        help="level-set CSVs for a second panel")
    parser.add_argument("--out", required=True)
    parser.add_argument("--labels", nargs="*", default=None)
    args = parser.parse_args(argv)

    panels = [args.inputs] + ([args.inputs2] if args.inputs2 else [])
    labels = args.labels or [r"$\delta = 1$", r"$\delta = 10$"][:len(panels)]
    fig, axes = plt.subplots(1, len(panels), figsize=(5.5 * len(panels), 5.2),
                             squeeze=False)
    for ax, paths, label in zip(axes[0], panels, labels):
        _draw_panel(ax, paths, label)
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    plt.close(fig)
    print(args.out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
