"""Deterministic JSON report documents.

Floats are written with 17 significant digits, complex numbers as
``{"re": .., "im": ..}``, arrays as nested lists.  Key order is the insertion
order of the dicts built here, so identical inputs give identical bytes.
"""

from __future__ import annotations

import dataclasses
import json
import math
from typing import Any

import numpy as np

SCHEMA = 1


def _float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if x == 0:
        return "0.0"
    text = format(x, ".17g")
    # keep floats recognizable as floats when read back
    return text if any(c in text for c in ".e") else text + ".0"


def normalize(obj: Any) -> Any:
    """Convert numpy scalars/arrays, complex numbers and dataclasses to plain JSON-ready values."""
    if isinstance(obj, dict):
        return {str(k): normalize(v) for k, v in obj.items()}
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: normalize(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (list, tuple)):
        return [normalize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return normalize(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _emit(obj: Any, indent: int, level: int, out: list[str]) -> None:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (k, v) in enumerate(obj.items()):
            out.append(f"{pad}{json.dumps(k)}: ")
            _emit(v, indent, level + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
            return
        if all(not isinstance(v, (dict, list)) for v in obj):
            parts = []
            for v in obj:
                sub: list[str] = []
                _emit(v, indent, level + 1, sub)
                parts.append("".join(sub))
            out.append("[" + ", ".join(parts) + "]")
            return
        out.append("[\n")
        for i, v in enumerate(obj):
            out.append(pad)
            _emit(v, indent, level + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end + "]")
    elif isinstance(obj, bool) or obj is None:
        out.append(json.dumps(obj))
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(_float(obj))
    else:
        out.append(json.dumps(str(obj), ensure_ascii=False))


def dumps(doc: Any, indent: int = 2) -> str:
    out: list[str] = []
    _emit(normalize(doc), indent, 0, out)
    return "".join(out) + "\n"


def document(tool_version: str, command: str, config: dict, body: dict) -> dict:
    return {"schema": SCHEMA, "tool_version": tool_version, "command": command, "config": config, **body}
