"""Numerical tolerances used across the package.

All thresholds live in one mutable record so experiments can override them::

    with TOL.override(lemma_slack=1e-7):
        ...
"""
from __future__ import annotations

import contextlib
from dataclasses import dataclass, fields, replace


@dataclass
class Tolerances:
    simplex_sum: float = 1e-9
    membership: float = 1e-9
    lp_constraint: float = 1e-10
    mirror_stationarity: float = 1e-8
    oracle_gap: float = 1e-12
    lemma_slack: float = 1e-6
    property_slack: float = 1e-9
    rel_smooth_slack: float = 1e-8
    anchor_chain_slack: float = 1e-8
    contraction_factor: float = 1.01
    rate_slack: float = 1.05
    # smallest Bregman value treated as resolvable by the per-step contraction check
    bregman_floor: float = 1e-13

    @contextlib.contextmanager
    def override(self, **changes):
        unknown = set(changes) - {f.name for f in fields(self)}
        if unknown:
            raise KeyError(f"unknown tolerance(s): {sorted(unknown)}")
        saved = replace(self)
        for key, value in changes.items():
            setattr(self, key, value)
        try:
            yield self
        finally:
            for f in fields(self):
                setattr(self, f.name, getattr(saved, f.name))


TOL = Tolerances()
