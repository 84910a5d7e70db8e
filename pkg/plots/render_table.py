#!/usr/bin/env python3
"""Typeset a convergence.csv as a markdown table.

Usage:
    python render_table.py --in convergence.csv --out table.md

Mesh sizes are rendered as multiples of sqrt(2) (the structured meshes have
h = c*sqrt(2) with c the cell width), orders to three decimals.
"""
from __future__ import annotations

import argparse
import math

from common import CONVERGENCE_HEADER, read_csv_checked


def render_table(rows: list[dict]) -> str:
    lines = ["| $h$ | $L^\\infty \\mathbb{E} L^2$ | Order | $\\mathbb{E} L^2 H^1$ | Order |",
             "|---|---|---|---|---|"]
    for row in rows:
        c = float(row["h"]) / math.sqrt(2.0)
        h_label = f"${c:.6g}\\sqrt{{2}}$"
        o1 = f"{float(row['order_linf_el2']):.3f}" if row["order_linf_el2"] else ""
        o2 = f"{float(row['order_el2h1']):.3f}" if row["order_el2h1"] else ""
        lines.append(f"| {h_label} | {float(row['err_linf_el2']):.8f} | {o1} "
                     f"| {float(row['err_el2h1']):.8f} | {o2} |")
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--in", dest="input", required=True)
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    rows = read_csv_checked(args.input, CONVERGENCE_HEADER)
    text = render_table(rows)
    with open(args.out, "w") as f:
        f.write(text)
    print(text, end="")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
