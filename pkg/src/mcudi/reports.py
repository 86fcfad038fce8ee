"""Report serialization.

Every report is written twice: as line-delimited JSON records (sorted keys,
NaN written as ``null``) for diffing and tooling, and as a fixed-width text
table for people. Writing the same records twice yields identical bytes.
"""

import json
import math
from pathlib import Path

import numpy as np

__all__ = [
    "to_jsonable",
    "dumps",
    "write_json",
    "write_jsonl",
    "read_jsonl",
    "format_table",
    "write_table",
]


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays and tuples; NaN/inf become None."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dumps(obj, indent=None):
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=indent, allow_nan=False)


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj, indent=2) + "\n", encoding="utf-8")
    return path


def write_jsonl(path, records):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(dumps(rec) + "\n")
    return path


def read_jsonl(path):
    with Path(path).open(encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def _cell(value, digits):
    if value is None:
        return "n/a"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return "n/a" if math.isnan(value) else f"{value:.{digits}f}"
    return str(value)


def format_table(rows, columns, digits=3, title=None):
    """Render ``rows`` (mappings) as a fixed-width table over ``columns``.

    ``columns`` is a sequence of keys or ``(key, header)`` pairs. Undefined
    values (None or NaN) print as ``n/a``.
    """
    cols = [(c, c) if isinstance(c, str) else tuple(c) for c in columns]
    body = [[_cell(r.get(k), digits) for k, _ in cols] for r in rows]
    widths = [max([len(h)] + [len(line[i]) for line in body]) for i, (_, h) in enumerate(cols)]
    out = []
    if title:
        out.append(title)
    out.append("  ".join(h.ljust(w) for (_, h), w in zip(cols, widths)).rstrip())
    out.append("  ".join("-" * w for w in widths))
    for line in body:
        out.append("  ".join(v.ljust(w) for v, w in zip(line, widths)).rstrip())
    return "\n".join(out) + "\n"


def write_table(path, rows, columns, digits=3, title=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_table(rows, columns, digits, title), encoding="utf-8")
    return path
