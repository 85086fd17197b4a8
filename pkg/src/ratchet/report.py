"""Deterministic CSV and JSON writers.

Floats are written with 12 significant digits so outputs diff cleanly.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.12g" % float(v)
    return str(v)


def json_value(v):
    if isinstance(v, dict):
        return {str(k): json_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [json_value(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float("%.12g" % float(v))
        return f if math.isfinite(f) else None
    return v


def write_csv(path, rows: list[dict], fieldnames: list[str] | None = None) -> Path:
    """Write dict rows; columns default to the keys of the first row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fieldnames is None:
        fieldnames = list(rows[0]) if rows else []
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(fieldnames)
        for row in rows:
            w.writerow([format_value(row.get(k)) for k in fieldnames])
    return path


def write_columns(path, columns: dict) -> Path:
    """Write equal-length arrays as CSV columns."""
    names = list(columns)
    n = len(next(iter(columns.values()))) if columns else 0
    rows = [{k: columns[k][i] for k in names} for i in range(n)]
    return write_csv(path, rows, names)


def write_key_values(path, data: dict) -> Path:
    """Two-column ``key,value`` report."""
    return write_csv(path, [{"key": k, "value": v} for k, v in data.items()], ["key", "value"])


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(json_value(obj), indent=2, sort_keys=False) + "\n")
    return path


def flatten(prefix: str, data: dict) -> dict:
    out = {}
    for k, v in data.items():
        key = f"{prefix}.{k}" if prefix else str(k)
        if isinstance(v, dict):
            out.update(flatten(key, v))
        else:
            out[key] = v
    return out
