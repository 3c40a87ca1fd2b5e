"""CSV ingestion and output helpers."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .estimator import Dataset

__all__ = ["load_csv", "read_matrix", "write_csv", "write_json", "write_matrix"]

MAX_REPORTED = 10


def read_matrix(path) -> tuple[list[str], np.ndarray]:
    """Header and float matrix of a CSV file; bad cells are reported with 1-based row numbers."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        rows, bad = [], []
        for lineno, raw in enumerate(reader, start=2):
            if not raw or all(not c.strip() for c in raw):
                continue
            if len(raw) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(raw)}")
            values = []
            for col, cell in enumerate(raw):
                try:
                    v = float(cell)
                except ValueError:
                    v = math.nan
                if not math.isfinite(v):
                    bad.append(f"row {lineno}, column {header[col]!r}: {cell!r}")
                values.append(v)
            rows.append(values)
    if bad:
        shown = "; ".join(bad[:MAX_REPORTED])
        more = f" (and {len(bad) - MAX_REPORTED} more)" if len(bad) > MAX_REPORTED else ""
        raise ValueError(f"{path}: non-numeric or non-finite cells: {shown}{more}")
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return header, np.array(rows, dtype=np.float64)


def load_csv(path, d1: int) -> Dataset:
    """Rows are (X_1..X_d1, Y_1..Y_d2); the header row is required."""
    header, matrix = read_matrix(path)
    if d1 < 0 or d1 >= matrix.shape[1]:
        raise ValueError(f"d1={d1} must be smaller than the number of columns ({matrix.shape[1]})")
    return Dataset(matrix, d1)


def write_matrix(path, matrix, header) -> None:
    """Shortest round-trip float repr, so reading back is bit-identical."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in np.asarray(matrix, dtype=np.float64):
            writer.writerow([repr(float(v)) for v in row])


def write_csv(path, header, rows) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
