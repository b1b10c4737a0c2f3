"""Canonical JSON reading and writing.

Every document the package writes goes through ``dumps`` here so that
finite doubles round-trip bit-exactly (17 significant decimal digits)
and reruns produce byte-identical files.
"""

import json
import math

from .errors import DataFormatError, NonFiniteError

FORMAT_VERSION = 1


def _format_float(value):
    # 17 significant digits uniquely identify a double; keep a decimal
    # point or exponent so the value reads back as a float.
    if not math.isfinite(value):
        raise NonFiniteError(f"cannot serialize non-finite value {value!r}")
    text = format(value, ".17g")
    if "." not in text and "e" not in text and "E" not in text:
        text += ".0"
    return text


def _encode(obj, parts, indent, level):
    pad = " " * (indent * level)
    pad_in = " " * (indent * (level + 1))
    if obj is None:
        parts.append("null")
    elif obj is True:
        parts.append("true")
    elif obj is False:
        parts.append("false")
    elif isinstance(obj, int):
        parts.append(str(obj))
    elif isinstance(obj, float):
        parts.append(_format_float(obj))
    elif isinstance(obj, str):
        parts.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, (list, tuple)):
        if not obj:
            parts.append("[]")
            return
        parts.append("[\n")
        for i, item in enumerate(obj):
            parts.append(pad_in)
            _encode(item, parts, indent, level + 1)
            parts.append(",\n" if i < len(obj) - 1 else "\n")
        parts.append(pad + "]")
    elif isinstance(obj, dict):
        if not obj:
            parts.append("{}")
            return
        parts.append("{\n")
        items = list(obj.items())
        for i, (key, value) in enumerate(items):
            if not isinstance(key, str):
                raise DataFormatError(f"non-string key {key!r}")
            parts.append(pad_in + json.dumps(key, ensure_ascii=False) + ": ")
            _encode(value, parts, indent, level + 1)
            parts.append(",\n" if i < len(items) - 1 else "\n")
        parts.append(pad + "}")
    else:
        raise DataFormatError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent=2):
    """Serialize ``obj`` to canonical JSON text.

    Floats are written with 17 significant digits, dict order is
    preserved, and the output ends with a newline.
    """
    parts = []
    _encode(obj, parts, indent, 0)
    parts.append("\n")
    return "".join(parts)


def dump(obj, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(obj))


def loads(text):
    return json.loads(text)


def load(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{path}: invalid JSON ({exc})") from exc
