"""Pass/fail records shared by the property suites and the command-line reports."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: Any
    expected: Any
    tolerance: Any
    note: str = ""

    def as_dict(self) -> dict:
        out = {
            "name": self.name,
            "pass": bool(self.passed),
            "measured": _jsonable(self.measured),
            "expected": _jsonable(self.expected),
            "tolerance": _jsonable(self.tolerance),
        }
        if self.note:
            out["note"] = self.note
        return out


def _jsonable(v: Any) -> Any:
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "item"):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v
