"""Pass/fail records shared by the inequality checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

STATUSES = ("pass", "fail", "not_applicable", "inconclusive")


@dataclass
class InequalityReport:
    """Worst violation of an inequality family over its sampled instances.

    A violation is (claimed-smaller side) - (claimed-larger side); the check
    passes when the worst one is within `tolerance`. Checks whose hypotheses
    do not hold are marked not applicable instead of being evaluated.
    """

    name: str
    max_violation: float
    n_checks: int
    tolerance: float
    details: dict = field(default_factory=dict)
    applicable: bool = True
    reason: str = ""

    @property
    def status(self) -> str:
        if not self.applicable:
            return "not_applicable"
        return "pass" if self.max_violation <= self.tolerance else "fail"

    @property
    def passed(self) -> bool:
        return self.status != "fail"

    def to_dict(self):
        out = {
            "name": self.name,
            "status": self.status,
            "passed": self.passed,
            "max_violation": float(self.max_violation) if self.applicable else None,
            "n_checks": int(self.n_checks),
            "tolerance": float(self.tolerance),
        }
        if self.reason:
            out["reason"] = self.reason
        out.update(self.details)
        return out

    @classmethod
    def not_applicable(cls, name, reason, tolerance=0.0):
        return cls(name, float("-inf"), 0, tolerance, {}, applicable=False, reason=reason)


def merge(name, reports, tolerance=None) -> InequalityReport:
    """Conjunction of several reports (worst violation relative to each tolerance)."""
    reports = [r for r in reports if r.applicable]
    if not reports:
        return InequalityReport(name, float("-inf"), 0, tolerance or 0.0, {"parts": []})
    # compare on the scale of each part's own tolerance
    excess = max(r.max_violation - r.tolerance for r in reports)
    tol = tolerance if tolerance is not None else 0.0
    return InequalityReport(
        name,
        excess + tol,
        sum(r.n_checks for r in reports),
        tol,
        {"parts": [r.to_dict() for r in reports]},
    )


def to_jsonable(obj):
    """Plain JSON types; non-finite floats become None so output stays strict JSON."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj
