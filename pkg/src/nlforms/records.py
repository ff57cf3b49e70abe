"""Line-delimited record serialization with bit-exact floats and stable field order."""

from __future__ import annotations

import json
import math
from typing import Iterable

import numpy as np


def _float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    s = format(x, ".17g")
    # keep the float type on re-parse
    return s if any(c in s for c in ".en") else s + ".0"


def _encode(obj, out: list) -> None:
    if obj is None:
        out.append("null")
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        out.append("{")
        for k, (key, val) in enumerate(obj.items()):
            if k:
                out.append(", ")
            out.append(json.dumps(str(key)))
            out.append(": ")
            _encode(val, out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for k, val in enumerate(obj):
            if k:
                out.append(", ")
            _encode(val, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(record) -> str:
    """One record as a single JSON line (without the newline)."""
    out: list = []
    _encode(record, out)
    return "".join(out)


def loads(line: str):
    return json.loads(line)


def dump_lines(records: Iterable) -> str:
    return "".join(dumps(r) + "\n" for r in records)


def summary_table(records: list, columns: list | None = None) -> str:
    """Aligned text table of the scalar fields of each record."""
    if not records:
        return "0 records\n"
    if columns is None:
        columns = []
        for r in records:
            for k, v in r.items():
                if k not in columns and not isinstance(v, (dict, list, tuple, np.ndarray)):
                    columns.append(k)

    def cell(v):
        if isinstance(v, (float, np.floating)):
            return format(float(v), ".6g")
        return "" if v is None else str(v)

    rows = [[cell(r.get(c)) for c in columns] for r in records]
    widths = [max(len(c), *(len(row[j]) for row in rows)) for j, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip()]
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip() for row in rows]
    lines.append(f"{len(records)} records")
    return "\n".join(lines) + "\n"
