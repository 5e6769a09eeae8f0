"""Deterministic JSON and CSV serialisation of measurement reports.

JSON output has sorted keys, floats written with 17 significant digits and
exact fractions written as ``"p/q"`` strings, so serialising the same report
twice gives identical bytes and parse-then-serialise is the identity.
Files are written to a temporary sibling and renamed into place.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import asdict, is_dataclass
from fractions import Fraction

import jsonschema
import numpy as np

REPORT_FORMAT = "ptfprg.report"
REPORT_VERSION = 1

FOOLING_COLUMNS = ("function_id", "generator_id", "method", "eps_target", "uniform_estimate",
                   "generator_estimate", "error", "ci_half_width", "uniform_samples",
                   "generator_samples", "harness_seed")
LEMMA_COLUMNS = ("name", "passed", "exact", "quantity", "bound", "description")

_NUM = {"type": ["number", "string"]}
_FOOLING_ROW = {
    "type": "object",
    "required": list(FOOLING_COLUMNS),
    "properties": {
        "function_id": {"type": "string"},
        "generator_id": {"type": "string"},
        "method": {"enum": ["exact", "monte-carlo"]},
        "eps_target": {"type": ["number", "null"]},
        "uniform_estimate": _NUM,
        "generator_estimate": _NUM,
        "error": _NUM,
        "ci_half_width": {"type": "number", "minimum": 0},
        "uniform_samples": {"type": "integer", "minimum": 1},
        "generator_samples": {"type": "integer", "minimum": 1},
        "harness_seed": {"type": ["integer", "null"]},
    },
}
_LEMMA_ROW = {
    "type": "object",
    "required": list(LEMMA_COLUMNS),
    "properties": {
        "name": {"type": "string"},
        "passed": {"type": "boolean"},
        "exact": {"type": "boolean"},
        "quantity": _NUM,
        "bound": _NUM,
        "description": {"type": "string"},
        "details": {"type": "object"},
    },
}
SCHEMAS = {
    kind: {
        "type": "object",
        "required": ["format", "version", "kind", "config", "results"],
        "properties": {
            "format": {"const": REPORT_FORMAT},
            "version": {"const": REPORT_VERSION},
            "kind": {"const": kind},
            "config": {"type": "object"},
            "results": {"type": "array", "items": row},
        },
    }
    for kind, row in (("fooling", _FOOLING_ROW), ("lemmas", _LEMMA_ROW))
}


def make_report(kind: str, rows, config: dict) -> dict:
    rows = [r.to_dict() if hasattr(r, "to_dict") else r for r in rows]
    return {"format": REPORT_FORMAT, "version": REPORT_VERSION, "kind": kind,
            "config": config, "results": rows}


def _plain(obj):
    """Convert to JSON-compatible Python values, keeping Fractions and floats for the writer."""
    if is_dataclass(obj) and not isinstance(obj, type):
        return _plain(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    return obj


def _write(obj, out: list) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError(f"non-finite float {obj} cannot be written as JSON")
        out.append(format(obj, ".17g"))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, list):
        out.append("[")
        for i, v in enumerate(obj):
            if i:
                out.append(", ")
            _write(v, out)
        out.append("]")
    elif isinstance(obj, dict):
        out.append("{")
        for i, k in enumerate(sorted(obj)):
            if i:
                out.append(", ")
            out.append(json.dumps(k) + ": ")
            _write(obj[k], out)
        out.append("}")
    else:
        raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj) -> str:
    out: list = []
    _write(_plain(obj), out)
    return "".join(out) + "\n"


def validate(report: dict) -> None:
    kind = report.get("kind")
    if kind not in SCHEMAS:
        raise ValueError(f"unknown report kind {kind!r}")
    jsonschema.validate(json.loads(dumps(report)), SCHEMAS[kind])


def _cell(v) -> str:
    v = _plain(v)
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def to_csv(report: dict) -> str:
    columns = FOOLING_COLUMNS if report["kind"] == "fooling" else LEMMA_COLUMNS
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in report["results"]:
        row = row.to_dict() if hasattr(row, "to_dict") else row
        writer.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return dumps(report)
    if fmt == "csv":
        return to_csv(report)
    raise ValueError(f"unknown report format {fmt!r}")


def atomic_write(path: str, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file in the same directory and a rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load(path: str) -> dict:
    with open(path) as fh:
        report = json.load(fh)
    validate(report)
    return report
