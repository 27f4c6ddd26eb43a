"""Check records and their JSON/CSV serialization."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["Record", "Report", "dumps_json", "records_csv", "rows_csv"]

RELATIONS = ("abs", "ge", "le", "rel", "eq", "info")


@dataclass(frozen=True)
class Record:
    """One named check.

    ``relation`` says how ``measured`` is compared with ``expected``:
    ``abs``/``rel`` for absolute/relative closeness, ``ge``/``le`` for
    one-sided bounds with slack ``tolerance``, ``eq`` for exact equality of
    integers, ``info`` for reported values that always pass.
    """

    name: str
    measured: object
    expected: object = None
    tolerance: float | None = None
    relation: str = "abs"

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ValueError(f"unknown relation {self.relation!r}")

    @property
    def passed(self) -> bool:
        m, e, tol = self.measured, self.expected, self.tolerance
        if self.relation == "info":
            return True
        if self.relation == "eq":
            return m == e
        if m is None or (isinstance(m, float) and math.isnan(m)):
            return False
        if self.relation == "abs":
            return abs(m - e) <= tol
        if self.relation == "rel":
            return abs(m - e) <= tol * max(abs(e), 1e-300)
        if self.relation == "ge":
            return m >= e - tol
        return m <= e + tol

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "measured": self.measured,
            "expected": self.expected,
            "tolerance": self.tolerance,
            "relation": self.relation,
            "pass": self.passed,
        }


@dataclass
class Report:
    command: str
    config: dict
    records: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    columns: tuple = ()
    wall_time: float = 0.0
    version: str = ""

    def add(self, *args, **kwargs) -> Record:
        rec = Record(*args, **kwargs)
        self.records.append(rec)
        return rec

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def as_dict(self) -> dict:
        out = {
            "command": self.command,
            "config": self.config,
            "pass": self.passed,
            "records": [r.as_dict() for r in self.records],
            "diagnostics": self.diagnostics,
        }
        if self.rows:
            out["columns"] = list(self.columns)
            out["rows"] = self.rows
        out["wall_time"] = self.wall_time
        out["version"] = self.version
        return out


def _plain(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    if not any(ch in s for ch in ".en"):
        s += ".0"
    return s


def _encode(obj, indent: int, level: int) -> str:
    obj = _plain(obj)
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, (bool, str)):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(_plain(v), (int, float, bool, str)) or _plain(v) is None for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_json(obj, indent: int = 2) -> str:
    """JSON with every float written to 17 significant digits; NaN becomes null."""
    return _encode(obj, indent, 0) + "\n"


def _csv_cell(v):
    v = _plain(v)
    if isinstance(v, float):
        return "" if not math.isfinite(v) else format(v, ".17g")
    return v


def rows_csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_csv_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def records_csv(report: Report) -> str:
    cols = ("name", "measured", "expected", "tolerance", "relation", "pass")
    return rows_csv(cols, [r.as_dict() for r in report.records])
