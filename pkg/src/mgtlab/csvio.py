"""Deterministic CSV emission.

Floats use ``repr`` (shortest round-trip decimal), ``None`` becomes an empty
field, lines end in LF, and files are written to a temporary name in the
target directory and renamed into place.
"""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile

import numpy as np

__all__ = ["format_value", "render_csv", "write_csv", "read_csv"]


def format_value(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    return str(x)


def render_csv(header, rows, trailer=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_value(x) for x in row])
    text = buf.getvalue()
    if trailer is not None:
        # comment rows are written verbatim so they stay a single readable line
        if "\n" in trailer or not trailer.startswith("#"):
            raise ValueError("trailer must be a single line starting with '#'")
        text += trailer + "\n"
    return text


def write_csv(path, header, rows, trailer=None) -> str:
    """Atomically write a CSV file; returns the path."""
    text = render_csv(header, rows, trailer)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", suffix=".csv", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def read_csv(path):
    """Header and rows as strings; comment rows starting with '#' are skipped."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    return rows[0], rows[1:]
