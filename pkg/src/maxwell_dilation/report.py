"""
Report emission: a JSON summary and a CSV per-step table.

JSON floats are written with ``repr`` (shortest round-trip form) and CSV
floats with 17 significant digits, so reading either back is bit-exact.
Files are written to a temporary sibling and renamed into place.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

TABLE_COLUMNS = ("step", "t", "E_total", "E_el", "p0", "cumulative_p0", "p0min", "p0max")


def write_atomic(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _plain(value):
    """Convert numpy scalars/arrays and non-finite floats to JSON-safe values."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else repr(v)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def report_to_dict(report, extra: dict | None = None) -> dict:
    plan = report.plan
    out = {
        "plan": {
            "dt": plan.dt,
            "steps": plan.steps,
            "t_total": plan.t_total,
            "method": plan.method,
            "gate_level": plan.gate_level,
            "measurement": plan.measurement,
            "seed": plan.seed,
        },
        "success": report.success,
        "failed_at_step": report.failed_at_step,
        "cumulative_p0": report.cumulative_p0,
        "fidelity": report.fidelity,
        "state_error": report.state_error,
        "trotter_norm": report.trotter_norm,
        "trotter_state_error": report.trotter_state_error,
        "gate_counts": report.gate_counts,
        "error_estimate": report.error_estimate,
        "checks": report.checks,
        "all_checks_passed": report.all_passed,
        "records": [
            {
                "step": r.step,
                "t": r.t,
                "E_total": r.E_total,
                "E_el": r.E_el,
                "p0": r.p0,
                "cumulative_p0": r.cumulative_p0,
                "p0min": r.p0min,
                "p0max": r.p0max,
                "P": r.P,
                "M": r.M,
            }
            for r in report.records
        ],
    }
    if extra:
        out.update(extra)
    return _plain(out)


def write_json(path, data: dict) -> Path:
    return write_atomic(path, json.dumps(_plain(data), indent=2, allow_nan=False) + "\n")


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())


def table_text(rows, columns=TABLE_COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(row[c]) for c in columns])
    return buf.getvalue()


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def write_table(path, rows, columns=TABLE_COLUMNS) -> Path:
    return write_atomic(path, table_text(rows, columns))


def read_table(path) -> list:
    """Rows as dicts; integers stay ``int``, other numbers become ``float``."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{k: _parse_cell(v) for k, v in row.items()} for row in rows]


def _parse_cell(text: str):
    if text == "":
        return None
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def record_rows(report) -> list:
    return [{c: getattr(r, c) for c in TABLE_COLUMNS} for r in report.records]
