"""Result persistence: RFC-4180 CSV, JSON summaries and two-column plot data.

Floats are written with ``repr`` so files round-trip exactly and identical
runs produce identical bytes.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

__all__ = ["format_cell", "write_csv", "read_csv", "write_json", "read_json", "write_plot_data", "read_plot_data"]


def format_cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)  # excel dialect: CRLF and minimal quoting
        w.writerow(header)
        for row in rows:
            w.writerow([format_cell(x) for x in row])
    return path


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _default(o):
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(obj, default=_default, indent=2, sort_keys=True, allow_nan=False)
    path.write_text(text + "\n")
    return path


def read_json(path):
    return json.loads(Path(path).read_text())


def write_plot_data(path, x, y, labels=("x", "y")) -> Path:
    """Whitespace-separated ``x y`` columns with a commented header line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# {labels[0]} {labels[1]}"]
    lines += [f"{format_cell(a)} {format_cell(b)}" for a, b in zip(x, y)]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_plot_data(path):
    data = np.loadtxt(path, comments="#", ndmin=2)
    return data[:, 0], data[:, 1]
