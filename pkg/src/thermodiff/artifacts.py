"""Serialisation of run artifacts.

Every artifact carries a metadata block with the tool version, the resolved
run configuration and a creation timestamp.  CSV files put it on a leading
``#`` comment line so ``pandas.read_csv(..., comment="#")`` still works.
Files are written to a temporary sibling and renamed into place.
"""

import csv
import io
import json
import math
import os
import tempfile
from datetime import datetime, timezone
from enum import Enum

from . import __version__

# Keys whose values legitimately change between identical runs.
VOLATILE_KEYS = frozenset({"created", "runtime_s"})


def metadata(config):
    return {
        "tool": "thermodiff",
        "version": __version__,
        "config": config,
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def _plain(value):
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    if hasattr(value, "item"):
        return _plain(value.item())
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def _cell(value):
    if value is None:
        return ""
    value = _plain(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def csv_text(header, rows, meta):
    buf = io.StringIO()
    buf.write("# " + json.dumps(_plain(meta), sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(row.get(name)) for name in header])
    return buf.getvalue()


def json_text(payload, meta):
    doc = {"metadata": meta, **payload}
    return json.dumps(_plain(doc), indent=2, sort_keys=True) + "\n"


def strip_volatile(doc):
    """Copy of a parsed artifact with timestamps and timings removed."""
    if isinstance(doc, dict):
        return {k: strip_volatile(v) for k, v in doc.items() if k not in VOLATILE_KEYS}
    if isinstance(doc, list):
        return [strip_volatile(v) for v in doc]
    return doc


def read_csv_metadata(path):
    with open(path) as fh:
        first = fh.readline()
    if not first.startswith("# "):
        raise ValueError(f"{path} has no metadata line")
    return json.loads(first[2:])


def write_atomic(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
