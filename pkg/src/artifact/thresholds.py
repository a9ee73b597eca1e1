"""Order-threshold bookkeeping for propagation through null infinity and the radial sets.

Every check compares one quantity with one threshold.  Equality within
``CRITICAL_TOL`` is reported as ``"critical"`` and never counts as either
side of an inequality.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

CRITICAL_TOL = 1e-12


@dataclass(frozen=True)
class SobolevOrders:
    m: float
    s_Pf: float = 0.0
    s_nPf: float = 0.0
    s_Sf: float = 0.0
    s_nFf: float = 0.0
    s_Ff: float = 0.0

    def __post_init__(self):
        for k, v in asdict(self).items():
            if not math.isfinite(v):
                raise ValueError(f"order {k} must be finite, got {v}")

    @classmethod
    def from_tuple(cls, m: float, s) -> "SobolevOrders":
        s = tuple(float(v) for v in s)
        if len(s) != 5:
            raise ValueError("expected five weights (s_Pf, s_nPf, s_Sf, s_nFf, s_Ff)")
        return cls(float(m), *s)

    def pairing(self, halfspace: int):
        """(s_nf, s_Tf) for the future (+1) or past (-1) half-space."""
        if halfspace == 1:
            return self.s_nFf, self.s_Ff
        if halfspace == -1:
            return self.s_nPf, self.s_Pf
        raise ValueError("halfspace must be +1 or -1")


def relation(quantity: float, threshold: float, tol: float = CRITICAL_TOL) -> str:
    d = quantity - threshold
    if abs(d) <= tol:
        return "critical"
    return "above" if d > 0 else "below"


@dataclass
class ThresholdRow:
    family: str
    quantity: float
    threshold: float
    relation: str
    proposition_tag: Optional[str]
    halfspace: int = 1
    direction: Optional[str] = None
    label: str = ""
    metadata: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = {
            "family": self.family,
            "quantity": self.quantity,
            "threshold": self.threshold,
            "relation": self.relation,
            "proposition_tag": self.proposition_tag,
            "halfspace": self.halfspace,
            "direction": self.direction,
            "label": self.label,
        }
        if self.metadata:
            d["metadata"] = self.metadata
        return d


@dataclass
class AdmissibilityReport:
    admissible: bool
    critical: bool
    rows: list

    def to_json(self) -> str:
        return json.dumps(
            {"admissible": self.admissible, "critical": self.critical, "rows": [r.as_dict() for r in self.rows]},
            indent=2,
            sort_keys=True,
        )


def _scri_rows(o: SobolevOrders, forward: bool):
    fam = "scri_forward" if forward else "scri_backward"
    tag = "propagation_through_scrI_1" if forward else "propagation_through_scrI_2"
    want = "above" if forward else "below"
    flip = "below" if forward else "above"
    rows = []
    for hs in (1, -1):
        s_nf, s_Tf = o.pairing(hs)
        if forward:
            t2 = max(-2 * o.m + 2 * s_nf + 1, o.m + s_nf - 1)
        else:
            t2 = min(-2 * o.m + 2 * s_nf + 1, o.m + s_nf - 1)
        checks = [
            ("m vs s_nf + 1", o.m, s_nf + 1, want),
            ("2 s_Sf vs " + ("max" if forward else "min") + "{-2m + 2 s_nf + 1, m + s_nf - 1}", 2 * o.s_Sf, t2, want),
            ("2 s_Tf vs m + s_nf - 1", 2 * s_Tf, o.m + s_nf - 1, flip),
        ]
        for label, q, thr, need in checks:
            rel = relation(q, thr)
            rows.append(
                ThresholdRow(fam, q, thr, rel, tag if rel == need else None, hs, None, label, {"required": need})
            )
    return rows


def _conclude(rows) -> AdmissibilityReport:
    crit = any(r.relation == "critical" for r in rows)
    ok = all(r.relation == r.metadata["required"] for r in rows)
    return AdmissibilityReport(ok and not crit, crit, rows)


def scri_forward_admissible(o: SobolevOrders) -> AdmissibilityReport:
    """m > s_nf + 1, 2 s_Sf > max{-2m+2s_nf+1, m+s_nf-1}, 2 s_Tf < m+s_nf-1, both pairings."""
    return _conclude(_scri_rows(o, True))


def scri_backward_admissible(o: SobolevOrders) -> AdmissibilityReport:
    """m < s_nf + 1, 2 s_Sf < min{-2m+2s_nf+1, m+s_nf-1}, 2 s_Tf > m+s_nf-1, both pairings."""
    return _conclude(_scri_rows(o, False))


# family -> (quantity label, {relation: (tag, direction)})
_REGIMES = {
    "A": ("m - s_nf + s_Sf vs 1/2", {"above": ("A_first_propagation", "into (control from rho_nf > 0)"), "below": ("A_second_propagation", "into (control along null infinity)")}),
    "N": ("m vs s_nf + 1", {"below": ("beth_propagation_one", "into (control from rho > 0)"), "above": ("beth_propagation_two", "into (control along null infinity)")}),
    "K": ("m + s_nf - 2 s_Sf vs 1", {"above": ("K_first_propagation", "into (control from rho_Sf > 0)"), "below": ("K_second_propagation", "into (control along null infinity)")}),
    "C": ("m + s_nf - 2 s_Tf vs 1", {"below": ("C_first_propagation", "into (control along null infinity)"), "above": ("C_second_propagation", "into (control from rho_Tf > 0)")}),
    "R": ("s_Tf vs -1/2", {"above": ("R1", "out of (above-threshold radial estimate)"), "below": ("R2", "into (below-threshold radial estimate)")}),
}


def radial_threshold(
    family: str,
    o: SobolevOrders,
    halfspace: int = 1,
    intermediate_eps: float = 1e-3,
    regularizer_order: Optional[float] = None,
) -> ThresholdRow:
    """Threshold row for one radial-set family in one half-space."""
    family = str(getattr(family, "value", family))
    if family not in _REGIMES:
        raise ValueError(f"unknown radial family {family!r}")
    s_nf, s_Tf = o.pairing(halfspace)
    if family == "A":
        q, thr = o.m - s_nf + o.s_Sf, 0.5
    elif family == "N":
        q, thr = o.m, s_nf + 1
    elif family == "K":
        q, thr = o.m + s_nf - 2 * o.s_Sf, 1.0
    elif family == "C":
        q, thr = o.m + s_nf - 2 * s_Tf, 1.0
    else:
        q, thr = s_Tf, -0.5
    label, regimes = _REGIMES[family]
    rel = relation(q, thr)
    tag, direction = regimes.get(rel, (None, None))
    meta = {}
    if family == "R":
        # the full statements involve both caps
        meta["R1_full"] = bool(
            o.s_Pf - intermediate_eps > -0.5 + CRITICAL_TOL and o.s_Ff - intermediate_eps > -0.5 + CRITICAL_TOL
        )
        meta["R2_full"] = bool(max(o.s_Pf, o.s_Ff) < -0.5 - CRITICAL_TOL)
        meta["intermediate_orders"] = [o.s_Pf - intermediate_eps, o.s_Ff - intermediate_eps]
        if regularizer_order is not None:
            meta["regularizer_cap_ok"] = bool(regularizer_order < o.s_Ff + 0.5)
    return ThresholdRow(family, q, thr, rel, tag, halfspace, direction, label, meta)


def threshold_report(o: SobolevOrders, d: int = 2, regularizer_order: Optional[float] = None) -> list:
    fams = ["R", "N", "C", "K"] + (["A"] if d >= 2 else [])
    return [radial_threshold(f, o, hs, regularizer_order=regularizer_order) for f in fams for hs in (1, -1)]


def thresholds_result(o: SobolevOrders, d: int = 2, regularizer_order: Optional[float] = None) -> dict:
    fwd = scri_forward_admissible(o)
    bwd = scri_backward_admissible(o)
    return {
        "orders": asdict(o),
        "scri_forward": {"admissible": fwd.admissible, "critical": fwd.critical, "rows": [r.as_dict() for r in fwd.rows]},
        "scri_backward": {"admissible": bwd.admissible, "critical": bwd.critical, "rows": [r.as_dict() for r in bwd.rows]},
        "radial": [r.as_dict() for r in threshold_report(o, d, regularizer_order)],
    }


def thresholds_json(o: SobolevOrders, d: int = 2, regularizer_order: Optional[float] = None) -> str:
    """Canonical JSON text of the full report (sorted keys, 2-space indent)."""
    return json.dumps(thresholds_result(o, d, regularizer_order), indent=2, sort_keys=True)
