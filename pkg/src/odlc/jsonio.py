"""Canonical JSON with 17-significant-digit floats.

Reports are compared byte for byte across reruns, so serialization must be
a pure function of the values: keys sorted, floats printed with enough
digits to round-trip doubles exactly, no locale or whitespace variation.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

__all__ = ["dumps_canonical", "digest", "write_json", "format_float"]


def format_float(value: float) -> str:
    if math.isnan(value) or math.isinf(value):
        raise ValueError("non-finite numbers cannot be serialized")
    return format(value, ".17g")


def _emit(obj) -> str:
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, dict):
        items = []
        for key in sorted(obj):
            if not isinstance(key, str):
                raise TypeError("object keys must be strings")
            items.append(f"{json.dumps(key, ensure_ascii=False)}: {_emit(obj[key])}")
        return "{" + ", ".join(items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_emit(item) for item in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_canonical(obj) -> str:
    return _emit(obj)


def digest(obj) -> str:
    """SHA-256 of the canonical serialization."""
    return hashlib.sha256(dumps_canonical(obj).encode("utf-8")).hexdigest()


def write_json(path, obj) -> None:
    Path(path).write_text(dumps_canonical(obj) + "\n", encoding="utf-8")
