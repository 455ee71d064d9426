"""Deterministic JSON emission with explicit float formatting.

All artifact files (checkpoints, grids, manifests, tables) must be
byte-identical across runs with the same inputs, so floats are written
through a fixed decimal formatter instead of whatever the json module
picks. ``style="sig17"`` writes 17 significant digits (lossless for
float64); ``style="repr"`` writes the shortest round-trip form.
"""

from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

from .errors import NumericalError


def fmt_float(x: float, style: str = "sig17") -> str:
    x = float(x)
    if not math.isfinite(x):
        raise NumericalError(f"cannot serialize non-finite value {x!r}")
    if style == "sig17":
        return format(x, ".17g")
    if style == "repr":
        return repr(x)
    raise ValueError(f"unknown float style {style!r}")


def _emit(obj: Any, style: str, parts: list[str]) -> None:
    if obj is None:
        parts.append("null")
    elif obj is True:
        parts.append("true")
    elif obj is False:
        parts.append("false")
    elif isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        parts.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        parts.append(fmt_float(float(obj), style))
    elif isinstance(obj, str):
        parts.append(json.dumps(obj))
    elif isinstance(obj, np.ndarray):
        _emit(obj.tolist(), style, parts)
    elif isinstance(obj, (list, tuple)):
        parts.append("[")
        for i, item in enumerate(obj):
            if i:
                parts.append(",")
            _emit(item, style, parts)
        parts.append("]")
    elif isinstance(obj, dict):
        parts.append("{")
        for i, (key, value) in enumerate(obj.items()):
            if not isinstance(key, str):
                raise TypeError(f"JSON object keys must be str, got {key!r}")
            if i:
                parts.append(",")
            parts.append(json.dumps(key))
            parts.append(":")
            _emit(value, style, parts)
        parts.append("}")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}: {obj!r}")


def dumps(obj: Any, float_style: str = "sig17") -> str:
    """Serialize to compact JSON with deterministic float formatting."""
    parts: list[str] = []
    _emit(obj, float_style, parts)
    return "".join(parts)


def dump_file(obj: Any, path, float_style: str = "sig17") -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(obj, float_style))
        fh.write("\n")


def load_file(path) -> Any:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
