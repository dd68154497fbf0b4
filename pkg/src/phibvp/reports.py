"""Structured verdicts returned by every hypothesis checker."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

HOLDS = "holds_at_samples"
VIOLATED = "violated"
INCONCLUSIVE = "inconclusive"
INAPPLICABLE = "inapplicable"

VERDICTS = (HOLDS, VIOLATED, INCONCLUSIVE, INAPPLICABLE)

CONDITION_IDS = (
    "cond_Vprime", "cond_C", "H_V", "hartman", "poincare_miranda", "outer_normal",
    "H_phi", "H_H", "H_H_plus", "lienard_i", "lienard_ii", "lienard_iii", "villari",
    "rayleigh_parallel", "rayleigh_bounded", "NH1", "NH2", "sup_bound", "degree",
    "blowup_integrability",
)


@dataclass
class HypothesisReport:
    """Outcome of one sampled condition check.

    ``margin`` is the worst-case value of the checked expression over the
    samples. ``probe``, when set, re-evaluates that expression at the
    witness so a ``violated`` verdict can be reproduced independently.
    """

    condition_id: str
    verdict: str
    witness: Optional[dict] = None
    margin: Optional[float] = None
    details: dict = field(default_factory=dict)
    probe: Optional[Callable[[], float]] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r}")

    @property
    def holds(self) -> bool:
        return self.verdict == HOLDS

    def reproduce(self) -> float:
        if self.probe is None:
            raise ValueError(f"{self.condition_id}: no witness probe attached")
        return float(self.probe())

    def to_dict(self) -> dict:
        return {
            "condition": self.condition_id,
            "verdict": self.verdict,
            "margin": jsonable(self.margin),
            "witness": jsonable(self.witness),
            "details": jsonable(self.details),
        }


def jsonable(obj: Any):
    """Convert numpy containers and non-finite floats into plain JSON values."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    return str(obj)
