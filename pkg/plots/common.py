"""Shared plumbing for the plotting scripts: CSV schema checks and figure specs.

The scripts are read-only consumers of the solver's CSV outputs; any header
that does not match the documented schema is a hard error.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

STABILITY_HEADER = ["t", "e_l2", "e_l2_se", "e_h1", "e_h1_se", "e_l2_p4"]
CONVERGENCE_HEADER = ["h", "err_linf_el2", "order_linf_el2", "err_el2h1", "order_el2h1"]
LEVELSET_HEADER = ["x1", "y1", "x2", "y2"]


class SchemaError(ValueError):
    """The input CSV does not match the documented schema."""


@dataclass
class FigureSpec:
    """What to draw: input CSVs per panel, layout, labels, output path."""

    inputs: list[str]
    output: str
    panel_titles: list[str] = field(default_factory=list)
    xlabel: str = "t"
    ylabel: str = ""


def read_csv_checked(path: str, expected_header: list[str]) -> list[dict]:
    """Read a CSV and fail loudly when the header deviates from the schema."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        if header != expected_header:
            raise SchemaError(
                f"{path}: header {header!r} does not match the documented "
                f"schema {expected_header!r}")
        rows = []
        for lineno, raw in enumerate(reader, start=2):
            if not raw:
                continue
            if len(raw) != len(expected_header):
                raise SchemaError(f"{path}:{lineno}: expected "
                                  f"{len(expected_header)} fields, got {len(raw)}")
            rows.append(dict(zip(expected_header, raw)))
    return rows


def column(rows: list[dict], name: str) -> list[float]:
    return [float(r[name]) for r in rows]
