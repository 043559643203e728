"""Check reports and deterministic JSON/CSV serialization."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

SCHEMA_VERSION = "1.0"


@dataclass
class CheckReport:
    """Outcome of one numerical verification.

    ``max_deviation`` is the largest observed violation measure and ``bound``
    the threshold it was compared with; ``passed`` is the verdict.
    """

    name: str
    params: dict
    max_deviation: float
    bound: float
    passed: bool
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"check": self.name, "params": self.params,
                "max_deviation": self.max_deviation, "bound": self.bound,
                "pass": bool(self.passed), "details": self.details}

    def __bool__(self):
        return bool(self.passed)


def _clean(obj: Any):
    """Convert numpy scalars/arrays and non-finite floats to JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _clean(float(obj.real)), "im": _clean(float(obj.imag))}
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(repr(x)) if x == x else x
    if hasattr(obj, "as_dict"):
        return _clean(obj.as_dict())
    return obj


def dumps(payload: dict) -> str:
    """Stable JSON text: sorted keys, fixed indentation, trailing newline."""
    body = dict(payload)
    body.setdefault("schema_version", SCHEMA_VERSION)
    return json.dumps(_clean(body), sort_keys=True, indent=2) + "\n"


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        x = float(v)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    return v
