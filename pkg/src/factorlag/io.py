"""Deterministic readers and writers for run artifacts.

Floats are written with ``repr`` (shortest round-trip form) and JSON keys
are sorted, so re-running a command from its manifest reproduces every
output byte for byte.  The config format is a flat key = value file:
ints, floats, true/false, quoted strings, and comma-separated lists.
"""

import hashlib
import json

import numpy as np

from .errors import ParseError


def fmt(value):
    """Canonical text form of a scalar."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_matrix_csv(path, values, header, row_labels=None, row_label_name="time"):
    values = np.asarray(values)
    with open(path, "w", encoding="utf-8") as fh:
        cols = list(header)
        if row_labels is not None:
            cols = [row_label_name] + cols
        fh.write(",".join(cols) + "\n")
        for i, row in enumerate(values):
            cells = [fmt(v) for v in np.atleast_1d(row)]
            if row_labels is not None:
                cells = [str(row_labels[i])] + cells
            fh.write(",".join(cells) + "\n")


def write_rows_csv(path, header, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _parse_scalar(text):
    text = text.strip()
    if text.startswith('"') and text.endswith('"') and len(text) >= 2:
        return text[1:-1]
    low = text.lower()
    if low == "true":
        return True
    if low == "false":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def parse_config(path):
    """Read a flat key = value config file."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError(f"expected 'key = value', got {line!r}", row=lineno)
            key, _, value = line.partition("=")
            key = key.strip()
            if not key:
                raise ParseError("empty key", row=lineno)
            value = value.strip()
            if "," in value and not (value.startswith('"')):
                out[key] = [_parse_scalar(v) for v in value.split(",")]
            else:
                out[key] = _parse_scalar(value)
    return out


def _format_value(value):
    if isinstance(value, (list, tuple)):
        return ", ".join(_format_value(v) for v in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return f'"{value}"'


def write_config(path, mapping, header_comment=None):
    """Write a flat config file with sorted keys (manifest format)."""
    with open(path, "w", encoding="utf-8") as fh:
        if header_comment:
            for line in header_comment.splitlines():
                fh.write(f"# {line}\n")
        for key in sorted(mapping):
            fh.write(f"{key} = {_format_value(mapping[key])}\n")
