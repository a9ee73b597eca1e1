"""Fiber coordinates on the compactified cotangent bundle and the Klein-Gordon symbol.

Fiber systems
-------------
``CARTESIAN``  (tau, Xi, eta)   covector tau dt + Xi dr, plus angular size eta
``DESC``       (xi, zeta, eta)  covector xi dx/(x^2 y) + zeta dy/(x y^2) + eta dtheta/(x^2 y)
``INFTF``      (rho, s, eta_h)  near fiber infinity over an NfTf chart
``INFSF``      (rho, lam, eta_h) near fiber infinity over an NfSf chart

Here ``(x, y)`` are the base chart coordinates (rho_nf, rho_Tf or rho_Sf).
The angular variable is stored as a magnitude.  The Cartesian slot carries
the same de,sc-normalized angular size as the nf charts, so the model symbol
``-tau^2 + Xi^2 + eta^2 + m^2`` is literally the chart symbol rewritten.

The fiber-infinity charts come in two mirror images.  Without ``mirror``
they are the half-spaces ``zeta < 0`` (InfTf) and ``zeta - xi > 0`` (InfSf);
with ``mirror`` the opposite half-spaces.  On the characteristic set the
unmirrored chart carries the sheets with ``sheet*sigma = +1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .compactification import (
    BasePoint,
    ChartId,
    ChartKind,
    DomainError,
    to_chart,
    cartesian_coords,
)


class FiberKind(str, Enum):
    CARTESIAN = "cartesian"
    DESC = "desc"
    INFTF = "inftf"
    INFSF = "infsf"


_BASE_OF = {
    FiberKind.CARTESIAN: (ChartKind.CARTESIAN,),
    FiberKind.DESC: (ChartKind.NFTF, ChartKind.NFSF),
    FiberKind.INFTF: (ChartKind.NFTF,),
    FiberKind.INFSF: (ChartKind.NFSF,),
}


@dataclass(frozen=True)
class FiberChartId:
    kind: FiberKind
    base: ChartId
    mirror: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", FiberKind(self.kind))
        if self.base.kind not in _BASE_OF[self.kind]:
            raise ValueError(f"fiber chart {self.kind.value} cannot sit over {self.base.kind.value}")
        if self.mirror and self.kind not in (FiberKind.INFTF, FiberKind.INFSF):
            raise ValueError("mirror flag only applies to fiber-infinity charts")

    @property
    def orientation(self) -> int:
        """+1 for the unmirrored chart, -1 for its mirror image."""
        return -1 if self.mirror else 1

    @property
    def is_infinity(self) -> bool:
        return self.kind in (FiberKind.INFTF, FiberKind.INFSF)


@dataclass(frozen=True)
class PhasePoint:
    base: BasePoint
    fiber_chart: FiberChartId
    f1: float
    f2: float
    f3: float = 0.0

    def __post_init__(self):
        if self.base.chart != self.fiber_chart.base:
            raise ValueError("base chart and fiber chart base disagree")
        if self.f3 < 0:
            raise ValueError("angular magnitude must be >= 0")
        if self.fiber_chart.is_infinity and self.f1 < 0:
            raise ValueError("rho must be >= 0")

    @property
    def coords(self) -> np.ndarray:
        return np.array([self.base.c1, self.base.c2, self.f1, self.f2, self.f3])

    @classmethod
    def from_array(cls, fiber_chart: FiberChartId, z) -> "PhasePoint":
        z = [float(v) for v in z]
        return cls(BasePoint(fiber_chart.base, z[0], z[1]), fiber_chart, z[2], z[3], abs(z[4]))


@dataclass(frozen=True)
class SymbolValue:
    p: float
    ptilde: float


def make_point(fiber_chart: FiberChartId, c1, c2, f1, f2, f3=0.0) -> PhasePoint:
    return PhasePoint(BasePoint(fiber_chart.base, float(c1), float(c2)), fiber_chart, float(f1), float(f2), float(f3))


# symbol


def ptilde_inftf(rho, s, eta, m):
    return (s - 1.0) ** 2 + eta * eta - 1.0 + rho * rho * m * m


def ptilde_infsf(rho, lam, eta, m):
    return 0.25 * (lam + 1.0) ** 2 + eta * eta - 1.0 + rho * rho * m * m


def symbol_p(pt: PhasePoint, m: float) -> SymbolValue:
    """Klein-Gordon symbol at ``pt``.

    On finite fiber charts the fiber-infinity weight is taken to be 1, so
    ``ptilde == p``.  On the fiber-infinity charts ``ptilde = rho^2 p`` and
    ``p`` is infinite exactly at rho = 0.
    """
    k = pt.fiber_chart.kind
    a, b, h = pt.f1, pt.f2, pt.f3
    if k is FiberKind.CARTESIAN:
        p = -a * a + b * b + h * h + m * m
        return SymbolValue(p, p)
    if k is FiberKind.DESC:
        q = a * a - 2.0 * a * b
        if pt.base.chart.kind is ChartKind.NFSF:
            q = -q
        p = q + h * h + m * m
        return SymbolValue(p, p)
    pt_ = ptilde_inftf(a, b, h, m) if k is FiberKind.INFTF else ptilde_infsf(a, b, h, m)
    p = pt_ / (a * a) if a > 0 else math.copysign(math.inf, pt_) if pt_ != 0 else math.nan
    return SymbolValue(p, pt_)


def on_characteristic(pt: PhasePoint, m: float, tol: float = 1e-10) -> bool:
    """True when |ptilde| < tol and the point lies over the boundary or at fiber infinity."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    at_boundary = pt.base.over_boundary() or (pt.fiber_chart.is_infinity and pt.f1 == 0.0)
    return bool(at_boundary and abs(symbol_p(pt, m).ptilde) < tol)


def sheet_sign(pt: PhasePoint):
    """Sheet of the characteristic set containing ``pt``: +1, -1, or None if undefined."""
    fc = pt.fiber_chart
    sigma = fc.base.sigma
    if fc.kind is FiberKind.CARTESIAN:
        return None if pt.f1 == 0 else int(math.copysign(1, pt.f1))
    if fc.kind is FiberKind.DESC:
        if pt.f1 == 0:
            return None
        return -sigma * int(math.copysign(1, pt.f1))
    return sigma * fc.orientation


# characteristic-set solves


def characteristic_zeta(xi, eta, m, base_kind: ChartKind):
    """zeta on the characteristic set over nf (x = 0) given xi != 0."""
    if base_kind is ChartKind.NFTF:
        return (xi * xi + eta * eta + m * m) / (2.0 * xi)
    return (xi * xi - eta * eta - m * m) / (2.0 * xi)


def characteristic_s(rho, eta, m, branch: int = -1):
    """Solutions s = 1 -+ sqrt(1 - eta^2 - rho^2 m^2) of ptilde = 0 in InfTf.

    ``branch=-1`` is the root near 0, ``+1`` the root near 2.
    """
    disc = 1.0 - eta * eta - rho * rho * m * m
    if np.any(np.asarray(disc) < 0):
        raise DomainError("no real root: eta^2 + rho^2 m^2 > 1")
    return 1.0 + branch * np.sqrt(disc)


def characteristic_lam(rho, eta, m, branch: int = +1):
    """Solutions lam = -1 +- 2 sqrt(1 - eta^2 - rho^2 m^2) of ptilde = 0 in InfSf.

    ``branch=+1`` is the root near 1, ``-1`` the root near -3.
    """
    disc = 1.0 - eta * eta - rho * rho * m * m
    if np.any(np.asarray(disc) < 0):
        raise DomainError("no real root: eta^2 + rho^2 m^2 > 1")
    return -1.0 + 2.0 * branch * np.sqrt(disc)


def sqrt_remainder(y, z):
    """R(y, z) with sqrt(1 - y + z) = sqrt(1 - y) + z R(y, z), cancellation free."""
    return 1.0 / (np.sqrt(1.0 - y + z) + np.sqrt(1.0 - y))


def s_decomposition(rho, s, eta, m):
    """Split s near its small root as s1*ptilde + s2*(eta^2 + m^2 rho^2).

    Returns ``(s1, s2, ptilde)``; the identity holds wherever the small root
    branch is the one in use.
    """
    pt_ = ptilde_inftf(rho, s, eta, m)
    q = eta * eta + m * m * rho * rho
    s2 = sqrt_remainder(0.0, -q)
    s1 = -sqrt_remainder(q, pt_)
    return s1, s2, pt_


# fiber transitions


def desc_to_cartesian_momenta(x, y, xi, zeta, base_kind: ChartKind, sigma: int):
    """(xi, zeta) -> (tau, Xi) at chart point (x, y); elementwise."""
    a = xi / (2.0 * x)
    b = zeta / x
    if base_kind is ChartKind.NFTF:
        tau = sigma * ((1.0 - x * x) * a - b)
        Xi = -(1.0 + x * x) * a + b
    else:
        tau = sigma * (-(1.0 + x * x) * a + b)
        Xi = (1.0 - x * x) * a - b
    return tau, Xi


def cartesian_to_desc_momenta(x, y, tau, Xi, base_kind: ChartKind, sigma: int):
    """Inverse of :func:`desc_to_cartesian_momenta`."""
    st = sigma * tau
    if base_kind is ChartKind.NFTF:
        # st = (1-x^2) a - b, Xi = -(1+x^2) a + b  =>  st + Xi = -2 x^2 a
        a = -(st + Xi) / (2.0 * x * x)
        b = (1.0 - x * x) * a - st
    else:
        # st = -(1+x^2) a + b, Xi = (1-x^2) a - b  =>  st + Xi = -2 x^2 a
        a = -(st + Xi) / (2.0 * x * x)
        b = st + (1.0 + x * x) * a
    return 2.0 * x * a, x * b


def desc_to_inf(xi, zeta, eta, kind: FiberKind, mirror: bool, tol: float = 0.0):
    """Finite (xi, zeta, eta) -> fiber-infinity coordinates."""
    o = -1.0 if mirror else 1.0
    if kind is FiberKind.INFTF:
        den = -o * zeta
        if not den > tol:
            raise DomainError(f"fiber chart boundary: need {'zeta > 0' if mirror else 'zeta < 0'}, got zeta={zeta}")
        return 1.0 / den, xi / zeta, eta / den
    den = o * (zeta - xi)
    if not den > tol:
        raise DomainError(f"fiber chart boundary: need {'zeta - xi < 0' if mirror else 'zeta - xi > 0'}, got {zeta - xi}")
    return 1.0 / den, (zeta + xi) / (zeta - xi), eta / den


def inf_to_desc(rho, a, eta_h, kind: FiberKind, mirror: bool):
    """Fiber-infinity coordinates (rho > 0) -> (xi, zeta, eta)."""
    if not rho > 0:
        raise DomainError("fiber infinity (rho = 0) has no finite preimage")
    o = -1.0 if mirror else 1.0
    if kind is FiberKind.INFTF:
        zeta = -o / rho
        return a * zeta, zeta, eta_h / rho
    zeta = o * (a + 1.0) / (2.0 * rho)
    xi = o * (a - 1.0) / (2.0 * rho)
    return xi, zeta, eta_h / rho


def _to_desc_same_base(pt: PhasePoint):
    fc = pt.fiber_chart
    if fc.kind is FiberKind.DESC:
        return pt.f1, pt.f2, pt.f3
    return inf_to_desc(pt.f1, pt.f2, pt.f3, fc.kind, fc.mirror)


def fiber_transition(pt: PhasePoint, target: FiberChartId, tol: float = 1e-14) -> PhasePoint:
    """Express the covector ``pt`` in the fiber system ``target``.

    Changes of base chart go through Cartesian coordinates and so need an
    interior base point; transitions between a finite chart and its
    fiber-infinity charts over the same base work over the boundary too.
    """
    src = pt.fiber_chart
    if src == target:
        return pt

    # reduce the source to a (base point, finite covector) pair
    if src.kind is FiberKind.CARTESIAN:
        t, r = pt.base.c1, pt.base.c2
        tau, Xi, eta = pt.f1, pt.f2, pt.f3
        cart = True
    else:
        xi, zeta, eta = _to_desc_same_base(pt)
        cart = False

    same_base = src.base == target.base
    if not same_base or target.kind is FiberKind.CARTESIAN:
        if not cart:
            x, y = pt.base.c1, pt.base.c2
            if not (x > 0 and y > 0):
                raise DomainError("base change needs an interior base point")
            t, r = (float(v) for v in cartesian_coords(x, y, src.base.kind, src.base.sigma, src.base.offset))
            tau, Xi = desc_to_cartesian_momenta(x, y, xi, zeta, src.base.kind, src.base.sigma)
            cart = True

    if target.kind is FiberKind.CARTESIAN:
        return make_point(target, t, r, tau, Xi, eta)

    tb = target.base
    if cart:
        bp = to_chart(t, r, tb)
        x, y = bp.c1, bp.c2
        xi, zeta = cartesian_to_desc_momenta(x, y, tau, Xi, tb.kind, tb.sigma)
    else:
        x, y = pt.base.c1, pt.base.c2

    if target.kind is FiberKind.DESC:
        return make_point(target, x, y, xi, zeta, eta)
    f1, f2, f3 = desc_to_inf(xi, zeta, eta, target.kind, target.mirror, tol)
    return make_point(target, x, y, f1, f2, f3)
