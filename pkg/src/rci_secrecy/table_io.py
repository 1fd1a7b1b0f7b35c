"""CSV emission with a provenance comment line."""

import csv
import dataclasses
import io
import json
import math

import numpy as np

from . import __version__

__all__ = ["format_value", "emit_csv", "read_csv"]


def format_value(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.9g}"
    return str(v)


def _jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    return obj


def provenance_line(meta):
    cfg = json.dumps(_jsonable(meta), sort_keys=True, separators=(",", ":"))
    seed = meta.get("seed") if isinstance(meta, dict) else None
    return f"# rci_secrecy {__version__} seed={seed} config={cfg}"


def emit_csv(table, destination=None):
    """Write ``table`` as UTF-8 CSV; returns the text.

    ``destination`` is a path, a writable text stream, or ``None`` (return only). Reals
    carry 9 significant digits; the first line is a ``#`` comment with version, seed and
    the resolved configuration.
    """
    buf = io.StringIO()
    buf.write(provenance_line(table.meta) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([format_value(v) for v in row])
    text = buf.getvalue()
    if destination is None:
        return text
    if hasattr(destination, "write"):
        destination.write(text)
        return text
    try:
        with open(destination, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write CSV to {destination!r}: {exc}") from exc
    return text


def _parse(tok):
    for conv in (int, float):
        try:
            return conv(tok)
        except ValueError:
            pass
    return tok


def read_csv(path):
    """Return ``(comment, columns, rows)`` with numeric cells converted."""
    with open(path, encoding="utf-8", newline="") as fh:
        comment = fh.readline().rstrip("\n")
        rdr = csv.reader(fh)
        columns = next(rdr)
        rows = [[_parse(t) for t in r] for r in rdr]
    return comment, columns, rows
