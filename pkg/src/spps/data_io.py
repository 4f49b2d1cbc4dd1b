"""CSV ingestion and emission with positioned validation errors.

Floats are written with ``repr`` (shortest round-trip form), so a dataset
written by :func:`write_dataset_csv` re-parses bit-identically.
"""

from __future__ import annotations

import csv

import numpy as np

from .errors import InputError
from .model import MISSING_DATA, Dataset, build_dataset


def _parse_cell(text: str, row: int, col: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise InputError(
            f"malformed numeric cell {text!r} at row {row}, column {col!r}"
        ) from None


def parse_csv(
    path,
    indicator: str,
    covariates: list[str],
    outcome: str | None = None,
    mode: str = "treatment",
) -> Dataset:
    """Read a headed CSV into a Dataset, prepending the intercept column.

    The indicator column must contain only 0 and 1. Empty outcome cells are
    allowed only on indicator-0 rows in missing-data mode. Row numbers in
    error messages count the header as row 1.
    """
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise InputError(f"{path}: empty file, expected a header row")
        missing = [c for c in [indicator, *covariates, *( [outcome] if outcome else [] )]
                   if c not in reader.fieldnames]
        if missing:
            raise InputError(f"{path}: columns not found: {missing}")
        ind_vals = []
        cov_rows = []
        out_vals = []
        for row_num, record in enumerate(reader, start=2):
            a = _parse_cell(record[indicator], row_num, indicator)
            if a not in (0.0, 1.0):
                raise InputError(
                    f"indicator value {record[indicator]!r} at row {row_num}, "
                    f"column {indicator!r} is not 0 or 1"
                )
            ind_vals.append(a)
            cov_rows.append([_parse_cell(record[c], row_num, c) for c in covariates])
            if outcome is not None:
                cell = record[outcome]
                if cell is None or cell.strip() == "":
                    if mode != MISSING_DATA or a == 1.0:
                        raise InputError(
                            f"missing outcome at row {row_num} is only allowed on "
                            "indicator-0 rows in missing-data mode"
                        )
                    out_vals.append(float("nan"))
                else:
                    out_vals.append(_parse_cell(cell, row_num, outcome))
    if not ind_vals:
        raise InputError(f"{path}: no data rows")
    return build_dataset(
        np.array(cov_rows), np.array(ind_vals),
        np.array(out_vals) if outcome is not None else None,
    )


def write_dataset_csv(data: Dataset, path, indicator: str = "t", outcome: str = "y") -> None:
    """Write a dataset (sans intercept column) back out; NaN outcomes as blanks."""
    p_cov = data.p - 1
    header = [indicator] + [f"x{j}" for j in range(1, p_cov + 1)]
    if data.outcome is not None:
        header.append(outcome)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(data.n):
            row = [repr(float(data.indicator[i]))]
            row += [repr(float(v)) for v in data.design[i, 1:]]
            if data.outcome is not None:
                y = data.outcome[i]
                row.append("" if np.isnan(y) else repr(float(y)))
            writer.writerow(row)
