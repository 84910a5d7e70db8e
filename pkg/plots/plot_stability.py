#!/usr/bin/env python3
"""Paired stability-curve figure from two stability.csv files.

Usage:
    python plot_stability.py --in low_noise/stability.csv high_noise/stability.csv \
        --out stability.png [--labels "delta = 1" "delta = 10"]

Each panel shows the mean L2 and H1 norm curves with standard-error bands.
"""
from __future__ import annotations

import argparse

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from common import STABILITY_HEADER, FigureSpec, column, read_csv_checked


def plot_stability(spec: FigureSpec) -> str:
    n = len(spec.inputs)
    fig, axes = plt.subplots(1, n, figsize=(6 * n, 4.5), squeeze=False, sharey=True)
    for ax, path, title in zip(axes[0], spec.inputs,
                               spec.panel_titles or [""] * n):
        rows = read_csv_checked(path, STABILITY_HEADER)
        t = np.array(column(rows, "t"))
        for name, label, color in [("e_l2", r"$\mathbb{E}\,L^2$", "tab:blue"),
                                   ("e_h1", r"$\mathbb{E}\,H^1$", "tab:red")]:
            mean = np.array(column(rows, name))
            se = np.array(column(rows, name + "_se"))
            ax.plot(t, mean, label=label, color=color)
            ax.fill_between(t, mean - se, mean + se, alpha=0.25, color=color,
                            linewidth=0)
        ax.set_xlabel(spec.xlabel)
        ax.set_title(title)
        ax.legend()
        ax.grid(alpha=0.3)
    axes[0][0].set_ylabel("norm")
    fig.tight_layout()
    fig.savefig(spec.output, dpi=150)
    plt.close(fig)
    return spec.output


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--in", dest="inputs", nargs="+", required=True,
                        help="stability CSV file(s), one per panel")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--labels", nargs="*", default=None,
                        help="panel titles (default: delta = 1 / delta = 10)")
    args = parser.parse_args(argv)
    labels = args.labels
    if labels is None:
        labels = [r"$\delta = 1$", r"$\delta = 10$"][:len(args.inputs)]
    spec = FigureSpec(inputs=list(args.inputs), output=args.out,
                      panel_titles=labels)
    print(plot_stability(spec))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
