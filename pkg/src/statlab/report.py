"""Verification reports: named checks with residuals, tolerances and verdicts.

Report payloads are plain JSON.  Key schema (stable)::

    {
      "tool": "statlab", "version": str, "command": str, "subject": str,
      "seed": int | null, "tolerances": {name: float},
      "checks": [
        {"name": str, "kind": "identity" | "property", "value": float,
         "tolerance": float, "comparison": "le" | "ge", "samples": int,
         "verdict": "pass" | "fail" | "holds" | "fails" | "skip", ...extra}
      ],
      "summary": {...}, "passed": bool, "timing": {"seconds": float}
    }

``identity`` checks must hold and decide ``passed``; ``property`` checks
report whether a hypothesis holds and never fail the run.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

from . import __version__

__all__ = ["Check", "VerificationReport"]


@dataclass
class Check:
    name: str
    value: float
    tolerance: float
    samples: int = 1
    kind: str = "identity"
    comparison: str = "le"
    extra: dict[str, Any] = field(default_factory=dict)
    skipped: str | None = None

    @property
    def ok(self) -> bool:
        if self.skipped is not None:
            return True
        if math.isnan(self.value):
            return False
        if self.comparison == "le":
            return self.value <= self.tolerance
        return self.value >= self.tolerance

    @property
    def verdict(self) -> str:
        if self.skipped is not None:
            return "skip"
        if self.kind == "property":
            return "holds" if self.ok else "fails"
        return "pass" if self.ok else "fail"

    def to_dict(self) -> dict[str, Any]:
        d = {
            "name": self.name,
            "kind": self.kind,
            "value": _num(self.value),
            "tolerance": _num(self.tolerance),
            "comparison": self.comparison,
            "samples": int(self.samples),
            "verdict": self.verdict,
        }
        if self.skipped is not None:
            d["reason"] = self.skipped
        d.update({k: _plain(v) for k, v in self.extra.items()})
        return d


def _num(v: float):
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if math.isnan(v):
        return "nan"
    return v


def _plain(v):
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if hasattr(v, "tolist"):
        return _plain(v.tolist())
    if isinstance(v, float):
        return _num(v)
    return v


@dataclass
class VerificationReport:
    command: str
    subject: str = ""
    seed: int | None = None
    tolerances: dict[str, float] = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)
    summary: dict[str, Any] = field(default_factory=dict)
    seconds: float = 0.0

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def extend(self, other: "VerificationReport", prefix: str = "") -> None:
        for c in other.checks:
            c.name = prefix + c.name
            self.checks.append(c)
        for k, v in other.summary.items():
            self.summary[prefix + k] = v

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.checks if c.kind == "identity")

    def to_dict(self, timing: bool = True) -> dict[str, Any]:
        d = {
            "tool": "statlab",
            "version": __version__,
            "command": self.command,
            "subject": self.subject,
            "seed": self.seed,
            "tolerances": {k: _num(v) for k, v in self.tolerances.items()},
            "checks": [c.to_dict() for c in self.checks],
            "summary": _plain(self.summary),
            "passed": self.passed,
        }
        if timing:
            d["timing"] = {"seconds": round(self.seconds, 6)}
        return d

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), indent=2, sort_keys=False)

    def render(self) -> str:
        """Fixed-width table for terminals."""
        rows = [("check", "value", "tol", "n", "verdict")]
        for c in self.checks:
            op = "<=" if c.comparison == "le" else ">="
            rows.append(
                (c.name, f"{c.value:.6g}", f"{op} {c.tolerance:.3g}", str(c.samples), c.verdict)
            )
        widths = [max(len(r[i]) for r in rows) for i in range(5)]
        lines = [f"{self.command}  {self.subject}".rstrip()]
        for r in rows:
            lines.append("  ".join(x.ljust(w) for x, w in zip(r, widths)))
        for k, v in self.summary.items():
            lines.append(f"{k}: {_plain(v)}")
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines)
