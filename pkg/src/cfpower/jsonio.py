"""Deterministic JSON serialization with lossless float round-trips.

All artifacts (datasets, manifests, weight files, reports) are written
through :func:`dumps` so that identical inputs yield byte-identical files.
Floats are printed as decimals with 17 significant digits, which is always
enough to reproduce the exact binary64 value on load.
"""

import json

import numpy as np


def _escape(s):
    return json.dumps(s, ensure_ascii=False)


def _write(obj, parts):
    if obj is None:
        parts.append("null")
    elif obj is True:
        parts.append("true")
    elif obj is False:
        parts.append("false")
    elif isinstance(obj, str):
        parts.append(_escape(obj))
    elif isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        parts.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not np.isfinite(x):
            raise ValueError(f"non-finite float {x!r} cannot be serialized to JSON")
        parts.append(format(x, ".17g"))
    elif isinstance(obj, np.ndarray):
        _write(obj.tolist(), parts)
    elif isinstance(obj, dict):
        parts.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if not isinstance(k, str):
                raise TypeError(f"JSON object keys must be str, got {type(k).__name__}")
            if i:
                parts.append(", ")
            parts.append(_escape(k))
            parts.append(": ")
            _write(v, parts)
        parts.append("}")
    elif isinstance(obj, (list, tuple)):
        parts.append("[")
        for i, v in enumerate(obj):
            if i:
                parts.append(", ")
            _write(v, parts)
        parts.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__} to JSON")


def dumps(obj):
    """Serialize to a single-line JSON string with 17-digit floats."""
    parts = []
    _write(obj, parts)
    return "".join(parts)


def dump(obj, path):
    """Write ``obj`` as one JSON document terminated by a newline."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps(obj))
        f.write("\n")


def loads(text):
    return json.loads(text)


def load(path):
    with open(path, "r", encoding="utf-8") as f:
        return json.loads(f.read())
