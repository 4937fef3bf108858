"""Bit-stable CSV and JSON report emission."""

import csv
import io
import json
import math
import os
from dataclasses import is_dataclass, asdict

import numpy as np

from . import __version__

OUTPUT_DIR_ENV = "BALLTHROW_OUTPUT_DIR"


class ReportError(RuntimeError):
    """Raised for non-finite content or IO failures."""


def to_plain(obj):
    """Convert numpy scalars/arrays and dataclasses to plain JSON types."""
    if is_dataclass(obj) and not isinstance(obj, type):
        return to_plain(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def check_finite(obj, where="report"):
    """Raise :class:`ReportError` if any float in ``obj`` is NaN or infinite."""
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ReportError(f"non-finite value {obj!r} at {where}")
    elif isinstance(obj, dict):
        for k, v in obj.items():
            check_finite(v, f"{where}.{k}")
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            check_finite(v, f"{where}[{i}]")


def format_number(x):
    """17 significant digits for floats, plain ints, empty for ``None``."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def render_json(payload):
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n"


def render_csv(header, rows, meta):
    buf = io.StringIO()
    for key in sorted(meta):
        buf.write(f"# {key}: {json.dumps(meta[key], sort_keys=True, allow_nan=False)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_number(v) for v in row])
    return buf.getvalue()


def build_payload(report, config=None, seed=None):
    payload = {"report": to_plain(report), "config": to_plain(config or {}),
               "seed": seed, "version": __version__}
    check_finite(payload)
    return payload


def emit_report(report, fmt, path=None, config=None, seed=None):
    """Write ``report`` as CSV or JSON; returns the text written.

    For CSV ``report`` is ``{"header": [...], "rows": [[...], ...]}``; the
    config echo, seed and version go into ``#`` comment lines.  ``path`` of
    ``None`` writes nothing (the caller prints the text).
    """
    if fmt == "json":
        text = render_json(build_payload(report, config, seed))
    elif fmt == "csv":
        rows = to_plain(report["rows"])
        check_finite(rows, "rows")
        meta = {"config": to_plain(config or {}), "seed": seed, "version": __version__}
        check_finite(meta)
        text = render_csv(report["header"], rows, meta)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if path is not None:
        try:
            directory = os.path.dirname(os.fspath(path))
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise ReportError(f"cannot write report to {path}: {exc}") from exc
    return text


def read_csv_rows(text):
    """Parse CSV text written by :func:`emit_report` (comment lines skipped)."""
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]
