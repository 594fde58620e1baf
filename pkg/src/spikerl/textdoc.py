"""Structured-text serialization used by checkpoints and reports.

Documents are JSON, but floats are rendered with 17 significant digits so
every float64 round-trips bit-exactly through save/load.
"""

from __future__ import annotations

import json
import math
from typing import Any


def _emit(obj: Any, out: list[str], indent: int) -> None:
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = list(obj.items())
        for i, (k, v) in enumerate(items):
            out.append(f'{pad}  {json.dumps(str(k))}: ')
            _emit(v, out, indent + 1)
            out.append(",\n" if i < len(items) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        flat = all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj)
        if flat:
            out.append("[" + ", ".join(_num(v) for v in obj) + "]")
            return
        out.append("[\n")
        for i, v in enumerate(obj):
            out.append(pad + "  ")
            _emit(v, out, indent + 1)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(pad + "]")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, float)):
        out.append(_num(obj))
    elif obj is None:
        out.append("null")
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def _num(v) -> str:
    if isinstance(v, int) and not isinstance(v, bool):
        return str(v)
    f = float(v)
    if not math.isfinite(f):
        raise ValueError(f"cannot serialize non-finite number {f}")
    return format(f, ".17g")


def dumps(obj: Any) -> str:
    out: list[str] = []
    _emit(obj, out, 0)
    out.append("\n")
    return "".join(out)


def loads(text: str) -> Any:
    return json.loads(text)
