"""JSON emission with a fixed float format, so artifacts are byte-stable."""
from __future__ import annotations

import json
import math
from numbers import Integral, Real

import numpy as np


def _scalar(v, float_fmt: str) -> str:
    if v is None:
        return "null"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (Integral, np.integer)):
        return str(int(v))
    if isinstance(v, (Real, np.floating)):
        f = float(v)
        if not math.isfinite(f):
            raise ValueError(f"cannot serialize non-finite float {f}")
        text = float_fmt % f
        # keep floats recognizable as floats on reload
        if not any(c in text for c in ".eEn"):
            text += ".0"
        return text
    if isinstance(v, str):
        return json.dumps(v)
    raise TypeError(f"cannot serialize {type(v).__name__}")


def dumps(obj, float_fmt: str = "%.17g", indent: int = 2) -> str:
    """Serialize nested dicts/lists/arrays; numeric leaf lists stay on one line."""

    def emit(o, depth):
        pad = " " * (indent * depth)
        inner = " " * (indent * (depth + 1))
        if isinstance(o, np.ndarray):
            o = o.tolist()
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{inner}{json.dumps(str(k))}: {emit(v, depth + 1)}" for k, v in o.items()]
            return "{\n" + ",\n".join(items) + "\n" + pad + "}"
        if isinstance(o, (list, tuple)):
            if not o:
                return "[]"
            if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in o):
                return "[" + ", ".join(_scalar(v, float_fmt) for v in o) + "]"
            items = [inner + emit(v, depth + 1) for v in o]
            return "[\n" + ",\n".join(items) + "\n" + pad + "]"
        return _scalar(o, float_fmt)

    return emit(obj, 0) + "\n"


def loads(text: str):
    return json.loads(text)
