"""Headerless numeric CSV files: one observation per row."""
from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

__all__ = ["DataError", "load_csv", "save_csv"]


class DataError(ValueError):
    """Input data could not be read or failed validation."""


def load_csv(path) -> np.ndarray:
    """Read a comma-separated matrix of finite floats.

    Raises :class:`DataError` for missing files, empty files, ragged rows,
    non-numeric cells and NaN/infinite values, naming the offending line.
    """
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from exc
    rows = []
    width = None
    with fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise DataError(f"{path}:{lineno}: expected {width} columns, found {len(row)}")
            try:
                values = [float(cell) for cell in row]
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: non-numeric cell ({exc})") from None
            if not all(math.isfinite(v) for v in values):
                raise DataError(f"{path}:{lineno}: NaN or infinite value")
            rows.append(values)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return np.array(rows, dtype=float)


def save_csv(path, data) -> None:
    """Write ``data`` in the format read by :func:`load_csv` (round-trip exact)."""
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data.reshape(-1, 1)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for row in data:
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write("\n")
