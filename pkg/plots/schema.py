"""CSV schemas of the three figure outputs and the shared loader.

The column sets below are the documented wire format of the solver CLI
(`mac-pa fig1|fig2|fig3`); rendering never recomputes numerics, it only reads
these columns.
"""

from __future__ import annotations

import csv

import numpy as np

REQUIRED_COLUMNS = {
    "fig1": ("P", "sum_rate_sic", "sum_rate_sud", "sum_capacity"),
    "fig2": ("p", "sre_space_time", "sre_spatial", "sre_temporal"),
    "fig3": ("p", "rate_user1", "rate_user2", "sum_capacity"),
}


class SchemaError(ValueError):
    """CSV does not match the figure schema; message carries the column diff."""


def load_figure_csv(path, fig_id: str) -> dict:
    """Read a figure CSV into column arrays, validating the schema."""
    if fig_id not in REQUIRED_COLUMNS:
        raise SchemaError(f"unknown figure id {fig_id!r}; expected one of {sorted(REQUIRED_COLUMNS)}")
    required = REQUIRED_COLUMNS[fig_id]
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise SchemaError(
                f"{fig_id} schema mismatch: missing column(s) {', '.join(missing)}; "
                f"found {', '.join(header) if header else '(no header)'}"
            )
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{fig_id}: no rows in {path}")
    data = {}
    for col in required:
        try:
            data[col] = np.array([float(row[col]) for row in rows])
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"{fig_id}: column {col} is not numeric ({exc})") from None
    return data
