"""CSV schema of the experiment harness, and its validation.

Each sweep CSV carries the figure's parameter columns followed by
``seed, stat, ee_coop, ee_noncoop, iterations, penalty_residual, status``.
Per-seed rows have stat == ""; aggregate rows carry stat in
{mean, ci95_lo, ci95_hi} with an empty seed.
"""

from __future__ import annotations

import csv

PARAM_COLUMNS = {
    "fig2": ["iteration"],
    "fig3": ["n"],
    "fig4": ["m", "n"],
    "fig5": ["p_c"],
    "fig6": ["p_r"],
}
VALUE_COLUMNS = ["seed", "stat", "ee_coop", "ee_noncoop", "iterations",
                 "penalty_residual", "status"]
AGGREGATE_STATS = ("mean", "ci95_lo", "ci95_hi")
FIGURES = tuple(PARAM_COLUMNS)


class SchemaError(ValueError):
    """CSV header does not match the harness contract."""


def expected_columns(figure_id: str) -> list:
    if figure_id not in PARAM_COLUMNS:
        raise SchemaError(f"unknown figure id {figure_id!r}; "
                          f"expected one of {sorted(PARAM_COLUMNS)}")
    return PARAM_COLUMNS[figure_id] + VALUE_COLUMNS


def load_rows(csv_path: str, figure_id: str) -> list:
    """Parse and validate one sweep CSV; returns a list of dict rows."""
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{csv_path}: empty file, no header row")
        expected = expected_columns(figure_id)
        if header != expected:
            missing = [c for c in expected if c not in header]
            extra = [c for c in header if c not in expected]
            raise SchemaError(
                f"{csv_path}: header mismatch for {figure_id}; "
                f"missing columns {missing}, unexpected columns {extra}")
        return [dict(zip(header, row)) for row in reader]


def aggregate_series(rows, figure_id: str, column: str):
    """Aggregate rows grouped by parameter point.

    Returns (points, {stat: values}) with points ordered as they appear.
    ``column`` is ee_coop or ee_noncoop; nan-valued aggregates (e.g. a
    sweep run without the baseline) yield empty output.
    """
    params = PARAM_COLUMNS[figure_id]
    points = []
    table = {stat: {} for stat in AGGREGATE_STATS}
    for row in rows:
        if row["stat"] not in AGGREGATE_STATS:
            continue
        key = tuple(float(row[p]) for p in params)
        if key not in points:
            points.append(key)
        try:
            value = float(row[column])
        except ValueError:
            value = float("nan")
        table[row["stat"]][key] = value
    series = {stat: [table[stat].get(p, float("nan")) for p in points]
              for stat in AGGREGATE_STATS}
    return points, series
