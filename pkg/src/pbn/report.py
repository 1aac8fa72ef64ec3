"""Byte-stable JSON reports: sorted keys, floats at 17 significant digits."""

import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["Check", "Report", "dumps"]


def _float(x):
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    s = format(x, ".17g")
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def _encode(obj, out):
    if obj is None or isinstance(obj, (bool, np.bool_)):
        out.append(json.dumps(None if obj is None else bool(obj)))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_float(float(obj)))
    elif isinstance(obj, (complex, np.complexfloating)):
        _encode({"im": obj.imag, "re": obj.real}, out)
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj, key=str)):
            if i:
                out.append(", ")
            out.append(json.dumps(str(key), ensure_ascii=False))
            out.append(": ")
            _encode(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for i, item in enumerate(list(obj)):
            if i:
                out.append(", ")
            _encode(item, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj):
    out = []
    _encode(obj, out)
    return "".join(out)


@dataclass
class Check:
    name: str
    expected: float
    got: float
    tolerance: float

    @property
    def passed(self):
        return bool(abs(self.expected - self.got) <= self.tolerance)

    def to_dict(self):
        return {
            "name": self.name,
            "expected": self.expected,
            "got": self.got,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


@dataclass
class Report:
    command: str
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)

    def check(self, name, expected, got, tolerance):
        c = Check(name, float(expected), float(got), float(tolerance))
        self.checks.append(c)
        return c.passed

    def bound(self, name, value, limit):
        """Record ``value ≤ limit`` for a nonnegative residual."""
        return self.check(name, 0.0, value, limit)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def to_dict(self):
        return {
            "command": self.command,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "checks": [c.to_dict() for c in self.checks],
            "pass": self.passed,
        }

    def to_json(self):
        return dumps(self.to_dict()) + "\n"
