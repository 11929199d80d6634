"""Deterministic JSON / CSV serialization of module outputs.

Keys are sorted, floats are written with 17 significant digits and
non-finite floats as Infinity / -Infinity / NaN, so the same report always
produces the same bytes.
"""

from __future__ import annotations

import dataclasses
import enum
import io
import json
import math

import numpy as np

SCHEMA_VERSION = "1.0"


class UsageError(ValueError):
    """Caller asked for something the emitter does not support."""


def fmt_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def to_plain(obj):
    """Recursively convert dataclasses, enums and numpy values to JSON-able data."""
    if hasattr(obj, "as_dict") and callable(obj.as_dict):
        return to_plain(obj.as_dict())
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _encode(obj, out: list, indent: int, level: int) -> None:
    pad = "\n" + " " * (indent * (level + 1)) if indent else ""
    end = "\n" + " " * (indent * level) if indent else ""
    sep = "," if indent else ", "
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(fmt_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{")
        for n, key in enumerate(sorted(obj)):
            if n:
                out.append(sep)
            out.append(pad)
            _encode(str(key), out, indent, level + 1)
            out.append(": ")
            _encode(obj[key], out, indent, level + 1)
        out.append(end + "}")
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
            return
        out.append("[")
        for n, item in enumerate(obj):
            if n:
                out.append(sep)
            out.append(pad)
            _encode(item, out, indent, level + 1)
        out.append(end + "]")
    else:
        raise UsageError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    out: list[str] = []
    _encode(to_plain(obj), out, indent, 0)
    return "".join(out) + "\n"


def _rows_csv(rows: list[dict]) -> str:
    cols = sorted({k for row in rows for k in row})
    buf = io.StringIO()
    buf.write(",".join(cols) + "\n")
    for row in rows:
        cells = []
        for c in cols:
            v = row.get(c, "")
            cells.append(fmt_float(v) if isinstance(v, float) else str(v))
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def emit_report(report, fmt: str = "json") -> bytes:
    """Serialize ``report`` to bytes.

    JSON output is wrapped with a ``schema_version`` field when the report is
    a mapping.  CSV is available for profiles, fields and flat row lists.
    """
    if fmt == "json":
        plain = to_plain(report)
        if isinstance(plain, dict):
            plain = {"schema_version": SCHEMA_VERSION, **plain}
        return dumps(plain).encode("utf-8")
    if fmt == "csv":
        if hasattr(report, "to_csv"):
            return report.to_csv().encode("utf-8")
        plain = to_plain(report)
        if isinstance(plain, list) and all(isinstance(r, dict) for r in plain):
            return _rows_csv(plain).encode("utf-8")
        raise UsageError(f"no CSV layout for {type(report).__name__}")
    raise UsageError(f"unsupported format {fmt!r}; use json or csv")
