"""Rescaled Hamiltonian flow on the compactified phase space.

Each chart carries the field exactly as displayed for that chart:

* DeSc over NfTf (x, y, xi, zeta, h)::

      ((zeta-xi) x, xi y, 2h^2 + xi^2 - xi zeta, h^2 + (xi-zeta)^2, (2 zeta - xi) h)

* DeSc over NfSf::

      ((xi-zeta) x, -xi y, 2h^2 - xi^2 + xi zeta, h^2 - (xi-zeta)^2, (xi - 2 zeta) h)

* InfTf (x, y, rho, s, h), unmirrored::

      (-(1-s) x, -s y, (h^2+(s-1)^2) rho, -(2-s)(h^2+s(s-1)), (h^2+s^2-s-1) h)

* InfSf (x, y, rho, lam, h), unmirrored::

      (-x, (1-lam) y/2, (2h^2+lam+1) rho/2, (lam+3)(2h^2+lam-1)/2, (h^2-1) h)

Mirrored fiber-infinity charts carry the negated field.  The fiber-infinity
displays are ``rho`` times the finite ones, and the finite displays are the
Cartesian Hamilton field ``(2 tau, -2 Xi)`` divided by ``2 x y``.  The
angular slot is the magnitude ``h``; the angular dilation acts as ``h d_h``.

The full rescaled field used by the commutator quantities is twice the
fiber-infinity display (the fiber-infinity weight is rho itself).
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .compactification import ChartId, ChartKind, DomainError, cartesian_coords, chart_coords
from .phase_space import (
    FiberChartId,
    FiberKind,
    PhasePoint,
    cartesian_to_desc_momenta,
    characteristic_lam,
    characteristic_s,
    desc_to_cartesian_momenta,
    desc_to_inf,
    inf_to_desc,
    make_point,
    symbol_p,
)


# ---------------------------------------------------------------------------
# display fields on raw coordinate arrays z = (c1, c2, f1, f2, h)


def _field_desc_tf(z):
    x, y, a, b, h = z
    return np.array([(b - a) * x, a * y, 2 * h * h + a * a - a * b, h * h + (a - b) ** 2, (2 * b - a) * h])


def _field_desc_sf(z):
    x, y, a, b, h = z
    return np.array([(a - b) * x, -a * y, 2 * h * h - a * a + a * b, h * h - (a - b) ** 2, (a - 2 * b) * h])


def _field_inf_tf(z):
    x, y, rho, s, h = z
    return np.array(
        [
            -(1 - s) * x,
            -s * y,
            (h * h + (s - 1) ** 2) * rho,
            -(2 - s) * (h * h + s * (s - 1)),
            (h * h + s * s - s - 1) * h,
        ]
    )


def _field_inf_sf(z):
    x, y, rho, lam, h = z
    return np.array(
        [
            -x,
            0.5 * (1 - lam) * y,
            0.5 * (2 * h * h + lam + 1) * rho,
            0.5 * (lam + 3) * (2 * h * h + lam - 1),
            (h * h - 1) * h,
        ]
    )


def _field_cartesian(z):
    t, r, tau, Xi, h = z
    zero = 0 * tau
    return np.array([2 * tau, -2 * Xi, zero, zero, zero])


def _jac_desc_tf(z):
    x, y, a, b, h = z
    return np.array(
        [
            [b - a, 0, -x, x, 0],
            [0, a, y, 0, 0],
            [0, 0, 2 * a - b, -a, 4 * h],
            [0, 0, 2 * (a - b), -2 * (a - b), 2 * h],
            [0, 0, -h, 2 * h, 2 * b - a],
        ],
        dtype=object if isinstance(x, _EXACT) else float,
    )


def _jac_desc_sf(z):
    x, y, a, b, h = z
    return np.array(
        [
            [a - b, 0, x, -x, 0],
            [0, -a, -y, 0, 0],
            [0, 0, -2 * a + b, a, 4 * h],
            [0, 0, -2 * (a - b), 2 * (a - b), 2 * h],
            [0, 0, h, -2 * h, a - 2 * b],
        ],
        dtype=object if isinstance(x, _EXACT) else float,
    )


def _jac_inf_tf(z):
    x, y, rho, s, h = z
    return np.array(
        [
            [-(1 - s), 0, 0, x, 0],
            [0, -s, 0, -y, 0],
            [0, 0, h * h + (s - 1) ** 2, 2 * (s - 1) * rho, 2 * h * rho],
            [0, 0, 0, (h * h + s * (s - 1)) - (2 - s) * (2 * s - 1), -(2 - s) * 2 * h],
            [0, 0, 0, (2 * s - 1) * h, 3 * h * h + s * s - s - 1],
        ],
        dtype=object if isinstance(x, _EXACT) else float,
    )


def _jac_inf_sf(z):
    x, y, rho, lam, h = z
    half = _half(x)
    return np.array(
        [
            [-1, 0, 0, 0, 0],
            [0, half * (1 - lam), 0, -half * y, 0],
            [0, 0, half * (2 * h * h + lam + 1), half * rho, 2 * h * rho],
            [0, 0, 0, half * (2 * h * h + lam - 1) + half * (lam + 3), 2 * h * (lam + 3)],
            [0, 0, 0, 0, 3 * h * h - 1],
        ],
        dtype=object if isinstance(x, _EXACT) else float,
    )


def _jac_cartesian(z):
    out = np.zeros((5, 5))
    out[0, 2] = 2.0
    out[1, 3] = -2.0
    return out


_EXACT = (Fraction,)


def _half(x):
    return Fraction(1, 2) if isinstance(x, Fraction) else 0.5


def _kernels(fc: FiberChartId):
    if fc.kind is FiberKind.CARTESIAN:
        return _field_cartesian, _jac_cartesian
    if fc.kind is FiberKind.DESC:
        if fc.base.kind is ChartKind.NFTF:
            return _field_desc_tf, _jac_desc_tf
        return _field_desc_sf, _jac_desc_sf
    if fc.kind is FiberKind.INFTF:
        return _field_inf_tf, _jac_inf_tf
    return _field_inf_sf, _jac_inf_sf


def display_field(fc: FiberChartId, z):
    """Displayed field of chart ``fc`` at raw coordinates ``z``."""
    f, _ = _kernels(fc)
    return fc.orientation * f(z) if fc.is_infinity else f(z)


def display_jacobian(fc: FiberChartId, z):
    """Analytic Jacobian of :func:`display_field`; exact on Fraction input."""
    _, j = _kernels(fc)
    J = j(z)
    return -J if (fc.is_infinity and fc.mirror) else J


def hp_field(pt: PhasePoint) -> np.ndarray:
    """Components of the displayed rescaled Hamilton field at ``pt``.

    Ordered like ``pt.coords``.  On the Cartesian chart the unrescaled field
    ``2 tau d_t - 2 Xi d_r`` is returned (see :func:`display_weight`); it is
    only defined there for vanishing angular momentum.
    """
    fc = pt.fiber_chart
    if fc.kind is FiberKind.CARTESIAN and pt.f3 != 0:
        raise ValueError("Cartesian field is only provided for the d=1 reduction (eta = 0)")
    return display_field(fc, pt.coords)


def display_weight(pt: PhasePoint) -> float:
    """Factor taking the Cartesian Hamilton field to the display of ``pt``'s chart."""
    fc = pt.fiber_chart
    if fc.kind is FiberKind.CARTESIAN:
        return 1.0
    w = 1.0 / (2.0 * pt.base.c1 * pt.base.c2)
    return w * pt.f1 if fc.is_infinity else w


def full_hp(fc: FiberChartId, z):
    """Full rescaled field (twice the fiber-infinity display)."""
    if not fc.is_infinity:
        raise ValueError("the full rescaled field is normalized on fiber-infinity charts")
    return 2.0 * display_field(fc, z)


# ---------------------------------------------------------------------------
# radial sets


class Family(str, Enum):
    R = "R"
    N = "N"
    C = "C"
    K = "K"
    A = "A"


@dataclass(frozen=True)
class RadialSetId:
    family: Family
    sheet: int
    halfspace: int

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if self.sheet not in (-1, 1) or self.halfspace not in (-1, 1):
            raise ValueError("sheet and halfspace must be +1 or -1")

    @property
    def product(self) -> int:
        return self.sheet * self.halfspace

    def label(self) -> str:
        sg = lambda v: "+" if v > 0 else "-"
        return f"{self.family.value}[{sg(self.sheet)},{sg(self.halfspace)}]"


def all_radial_sets(d: int = 2) -> list:
    fams = [f for f in Family if d >= 2 or f is not Family.A]
    return [RadialSetId(f, a, b) for f in fams for a in (1, -1) for b in (1, -1)]


def native_chart(rid: RadialSetId, offset: float = 0.0, alternate: bool = False) -> FiberChartId:
    """Chart in which the set has codimension-defining coordinates.

    ``alternate`` selects InfTf for R and InfSf for N.
    """
    mirror = rid.product == -1
    f = rid.family
    if f is Family.R and not alternate:
        return FiberChartId(FiberKind.DESC, ChartId(ChartKind.NFTF, rid.halfspace, offset))
    if f in (Family.R, Family.C) or (f is Family.N and not alternate):
        return FiberChartId(FiberKind.INFTF, ChartId(ChartKind.NFTF, rid.halfspace, offset), mirror)
    return FiberChartId(FiberKind.INFSF, ChartId(ChartKind.NFSF, rid.halfspace, offset), mirror)


def radial_set_point(rid: RadialSetId, m: float = 1.0, free: float = 0.0, chart: Optional[FiberChartId] = None, d: int = 2):
    """A point on the radial set ``rid``.

    ``free`` is the free coordinate along the set: rho_nf along R, the
    rho_Tf (or rho_Sf) value along N; ignored otherwise.
    """
    if rid.family is Family.A and d < 2:
        raise ValueError("the A sets need d >= 2")
    fc = chart or native_chart(rid)
    if fc.base.sigma != rid.halfspace:
        raise ValueError("chart half-space does not match the radial set")
    if fc.is_infinity and fc.orientation != rid.product:
        raise ValueError("chart mirror flag does not match the sheet of the radial set")
    f, k = rid.family, fc.kind
    if f is Family.R:
        if k is FiberKind.DESC and fc.base.kind is ChartKind.NFTF:
            v = -rid.product * m
            return make_point(fc, free, 0.0, v, v, 0.0)
        if k is FiberKind.INFTF:
            return make_point(fc, free, 0.0, 1.0 / m, 1.0, 0.0)
    elif f is Family.N:
        if k is FiberKind.INFTF:
            return make_point(fc, 0.0, free, 0.0, 0.0, 0.0)
        if k is FiberKind.INFSF:
            return make_point(fc, 0.0, free, 0.0, 1.0, 0.0)
    elif f is Family.C and k is FiberKind.INFTF:
        return make_point(fc, 0.0, 0.0, 0.0, 2.0, 0.0)
    elif f is Family.K and k is FiberKind.INFSF:
        return make_point(fc, 0.0, 0.0, 0.0, -3.0, 0.0)
    elif f is Family.A and k is FiberKind.INFSF:
        return make_point(fc, 0.0, 0.0, 0.0, -1.0, 1.0)
    raise ValueError(f"radial set {rid.label()} is not represented in chart {k.value} over {fc.base.kind.value}")


def _free_samples(rid: RadialSetId, samples: int):
    if rid.family is Family.R:
        return np.linspace(0.0, 0.95, samples)
    if rid.family is Family.N:
        return np.linspace(0.0, 5.0, samples)
    return np.zeros(1)


def radial_residual(rid: RadialSetId, samples: int = 16, m: float = 1.0, d: int = 2, chart: Optional[FiberChartId] = None) -> float:
    """Max of |field| over points sampled along the set (exactly zero in theory)."""
    worst = 0.0
    for v in _free_samples(rid, samples):
        pt = radial_set_point(rid, m, float(v), chart, d)
        worst = max(worst, float(np.max(np.abs(hp_field(pt)))))
    return worst


# ---------------------------------------------------------------------------
# linearization


class Classification(str, Enum):
    SOURCE = "source"
    SINK = "sink"
    SADDLE = "saddle"
    DEGENERATE = "degenerate"


@dataclass
class Linearization:
    jacobian: np.ndarray
    eigenvalues: np.ndarray
    transverse: np.ndarray
    classification: Classification
    normal_eigenvalue: float
    free_directions: tuple


def _free_axes(rid: RadialSetId, fc: FiberChartId):
    if rid.family is Family.R:
        return (0,)
    if rid.family is Family.N:
        return (1,)
    return ()


def _ptilde_grad(fc: FiberChartId, z, m):
    x, y, a, b, h = (float(v) for v in z)
    if fc.kind is FiberKind.INFTF:
        return np.array([0, 0, 2 * a * m * m, 2 * (b - 1), 2 * h])
    if fc.kind is FiberKind.INFSF:
        return np.array([0, 0, 2 * a * m * m, 0.5 * (b + 1), 2 * h])
    if fc.kind is FiberKind.DESC:
        g = np.array([0, 0, 2 * a - 2 * b, -2 * a, 2 * h])
        if fc.base.kind is ChartKind.NFSF:
            g[2:4] *= -1
        return g
    raise ValueError("no characteristic gradient on the Cartesian chart")


def linearize(rid: RadialSetId, m: float = 1.0, d: int = 2, free: float = 0.3, chart: Optional[FiberChartId] = None, tol: float = 1e-9) -> Linearization:
    """Jacobian of the displayed field at a point of ``rid`` and its classification.

    The classification uses the spectrum tangent to the characteristic set:
    the eigenvalue belonging to the conormal of the characteristic set (a
    left eigenvector, since the field preserves it) is removed, as are the
    zero eigenvalues along the set's free directions.  For ``d == 1`` the
    angular row and column are dropped.
    """
    fc = chart or native_chart(rid)
    pt = radial_set_point(rid, m, free if rid.family in (Family.R, Family.N) else 0.0, fc, d)
    z = pt.coords
    J = np.asarray(display_jacobian(fc, z), dtype=float)
    g = _ptilde_grad(fc, z, m)
    keep = list(range(5)) if d >= 2 else list(range(4))
    J = J[np.ix_(keep, keep)]
    g = g[keep]
    ev = np.linalg.eigvals(J)
    q = float(g @ J @ g / (g @ g))
    remaining = list(ev)
    # drop the conormal eigenvalue
    i = int(np.argmin([abs(e - q) for e in remaining]))
    remaining.pop(i)
    # drop zeros along free directions
    for _ in _free_axes(rid, fc):
        zi = [j for j, e in enumerate(remaining) if abs(e) < tol]
        if zi:
            remaining.pop(zi[0])
    tr = np.array(remaining)
    re = tr.real
    if np.any(np.abs(re) < tol):
        cls = Classification.DEGENERATE
    elif np.all(re < 0):
        cls = Classification.SINK
    elif np.all(re > 0):
        cls = Classification.SOURCE
    else:
        cls = Classification.SADDLE
    return Linearization(J, ev, tr, cls, q, _free_axes(rid, fc))


def exact_jacobian(rid: RadialSetId, m: int = 1, free=Fraction(0)) -> np.ndarray:
    """Jacobian at the radial set in exact rational arithmetic (integer mass)."""
    fc = native_chart(rid)
    pt = radial_set_point(rid, float(m), float(free), fc)
    z = [Fraction(v).limit_denominator(10**12) for v in pt.coords]
    if rid.family is Family.R:
        z[2] = z[3] = Fraction(-rid.product * m)
        z[0] = Fraction(free)
    if rid.family is Family.N:
        z[1] = Fraction(free)
    return display_jacobian(fc, tuple(z))


# ---------------------------------------------------------------------------
# commutator quantities near the radial sets


class Quantity(str, Enum):
    F1_ALEPH = "F1_aleph"
    F2_BETH = "F2_beth"
    F3_GIMEL = "F3_gimel"
    F4_DALETH = "F4_daleth"
    BETH = "beth"


_QUANTITY_SET = {
    Quantity.F1_ALEPH: Family.A,
    Quantity.F2_BETH: Family.N,
    Quantity.BETH: Family.N,
    Quantity.F3_GIMEL: Family.K,
    Quantity.F4_DALETH: Family.C,
}


def quantity_value(q: Quantity, fc: FiberChartId, z) -> float:
    """Evaluate a commutator quantity at raw coordinates z in chart fc.

    With H the full rescaled field and e = sheet*halfspace:

    * F1 = H(aleph) - 4 e aleph,  aleph = rho_Sf^2 + rho^2 + (lam+1)^2
    * F2 = H(beth) + 4 e beth,   beth = rho_nf^2 + eta^2
    * F3 = H(gimel) + 4 e gimel + e E3,  gimel = rho_nf^2 + rho^2 + (lam+3)^2, E3 = 4 (lam+3)^2
    * F4 = H(daleth) - 4 e daleth - e E4, daleth = rho_nf^2 + rho^2 + (s-2)^2, E4 = 4 (s-2)^2
    """
    x, y, rho, a, h = z
    e = fc.orientation
    H = full_hp(fc, z)
    if q is Quantity.F1_ALEPH:
        val = y * y + rho * rho + (a + 1) ** 2
        grad = np.array([0, 2 * y, 2 * rho, 2 * (a + 1), 0])
        return float(H @ grad - 4 * e * val)
    if q in (Quantity.F2_BETH, Quantity.BETH):
        val = x * x + h * h
        if q is Quantity.BETH:
            return float(val)
        grad = np.array([2 * x, 0, 0, 0, 2 * h])
        return float(H @ grad + 4 * e * val)
    if q is Quantity.F3_GIMEL:
        val = x * x + rho * rho + (a + 3) ** 2
        grad = np.array([2 * x, 0, 2 * rho, 2 * (a + 3), 0])
        return float(H @ grad + 4 * e * val + e * 4 * (a + 3) ** 2)
    val = x * x + rho * rho + (a - 2) ** 2
    grad = np.array([2 * x, 0, 2 * rho, 2 * (a - 2), 0])
    return float(H @ grad - 4 * e * val - e * 4 * (a - 2) ** 2)


def _ray_directions(q: Quantity, n: int, d: int, rng):
    """Unit directions in the coordinates transverse to the set (inside Sigma).

    Returns an (n, 3) array; its meaning depends on the quantity:
    F1: (rho_Sf, rho, lam+1); F2/beth: (rho_nf, eta, rho);
    F3: (rho_nf, rho, lam+3) with lam+3 > 0; F4: (rho_nf, rho, 2-s) with 2-s > 0.
    """
    dirs = []
    while len(dirs) < n:
        v = np.abs(rng.normal(size=3))
        if q is Quantity.F1_ALEPH and rng.random() < 0.5:
            v[2] = -v[2]
        if d < 2 and q in (Quantity.F2_BETH, Quantity.BETH):
            v[1] = 0.0
        v /= np.linalg.norm(v)
        if q in (Quantity.F3_GIMEL, Quantity.F4_DALETH) and d >= 2 and v[2] < 0.2:
            continue
        dirs.append(v)
    return np.array(dirs)


def ray_point(q: Quantity, rid: RadialSetId, direction, eps: float, m: float = 1.0, d: int = 2, free: float = 0.7):
    """Point at distance ``eps`` from the set along ``direction``, on Sigma.

    The dependent coordinate is solved from ptilde = 0 on the branch
    through the set.  Returns (chart, raw coords).
    """
    fc = native_chart(rid)
    u = np.asarray(direction, dtype=float)
    if q is Quantity.F1_ALEPH:
        y, rho, lp1 = eps * u
        h2 = 1.0 - rho * rho * m * m - 0.25 * lp1 * lp1
        return fc, np.array([0.0, y, rho, lp1 - 1.0, math.sqrt(h2)])
    if q in (Quantity.F2_BETH, Quantity.BETH):
        x, h, rho = eps * u
        s = float(characteristic_s(rho, h, m, branch=-1))
        return fc, np.array([x, free, rho, s, h])
    if q is Quantity.F3_GIMEL:
        x, rho, lp3 = eps * u
        if d >= 2:
            lam = lp3 - 3.0
            h2 = 1.0 - rho * rho * m * m - 0.25 * (lam + 1) ** 2
            return fc, np.array([x, 0.0, rho, lam, math.sqrt(max(h2, 0.0))])
        lam = float(characteristic_lam(rho, 0.0, m, branch=-1))
        return fc, np.array([x, 0.0, rho, lam, 0.0])
    x, rho, tms = eps * u
    if d >= 2:
        s = 2.0 - tms
        h2 = 1.0 - rho * rho * m * m - (s - 1) ** 2
        return fc, np.array([x, 0.0, rho, s, math.sqrt(max(h2, 0.0))])
    s = float(characteristic_s(rho, 0.0, m, branch=+1))
    return fc, np.array([x, 0.0, rho, s, 0.0])


@dataclass
class VanishingFit:
    quantity: Quantity
    radial_set: RadialSetId
    slopes: np.ndarray
    r2: np.ndarray

    @property
    def slope(self) -> float:
        return float(np.min(self.slopes))


def vanishing_order(
    quantity,
    rid: Optional[RadialSetId] = None,
    rays: int = 16,
    eps_range=(1e-6, 1e-2),
    points: int = 25,
    m: float = 1.0,
    d: int = 2,
    seed: int = 0,
) -> VanishingFit:
    """Log-log slope of |quantity| against distance to its radial set along rays.

    Distance is the square root of the set's quadratic defining function.
    """
    q = Quantity(quantity)
    fam = _QUANTITY_SET[q]
    rid = rid or RadialSetId(fam, 1, 1)
    if rid.family is not fam:
        raise ValueError(f"{q.value} lives at the {fam.value} sets")
    lo, hi = eps_range
    if not (0 < lo < hi) or math.log10(hi / lo) < 1.0:
        raise ValueError("degenerate fit: distance range shorter than one decade")
    rng = np.random.default_rng(seed)
    eps = np.logspace(math.log10(lo), math.log10(hi), points)
    slopes, r2s = [], []
    for u in _ray_directions(q, rays, d, rng):
        dist, vals = [], []
        for e in eps:
            fc, z = ray_point(q, rid, u, e, m, d)
            vals.append(abs(quantity_value(q, fc, z)))
            dist.append(_distance(q, z))
        dist, vals = np.array(dist), np.array(vals)
        ok = vals > 0
        if ok.sum() < 3:
            # identically zero on this ray: vanishes to every order
            slopes.append(math.inf)
            r2s.append(1.0)
            continue
        X, Y = np.log(dist[ok]), np.log(vals[ok])
        k, c = np.polyfit(X, Y, 1)
        res = Y - (k * X + c)
        r2s.append(1.0 - res.var() / Y.var() if Y.var() > 0 else 1.0)
        slopes.append(k)
    return VanishingFit(q, rid, np.array(slopes), np.array(r2s))


def _distance(q: Quantity, z) -> float:
    x, y, rho, a, h = z
    if q is Quantity.F1_ALEPH:
        return math.sqrt(y * y + rho * rho + (a + 1) ** 2)
    if q in (Quantity.F2_BETH, Quantity.BETH):
        return math.sqrt(x * x + h * h + rho * rho)
    if q is Quantity.F3_GIMEL:
        return math.sqrt(x * x + rho * rho + (a + 3) ** 2)
    return math.sqrt(x * x + rho * rho + (a - 2) ** 2)


def alpha_weight(fc: FiberChartId, z, m_order: float, l_order: float) -> float:
    """Logarithmic derivative H a / a of a = rho^m_order rho_nf^l_order."""
    x, y, rho, a, h = z
    if fc.kind is FiberKind.INFTF:
        val = 2 * (m_order * (h * h + (a - 1) ** 2) - l_order * (1 - a))
    elif fc.kind is FiberKind.INFSF:
        val = m_order * (2 * h * h + a + 1) - 2 * l_order
    else:
        raise ValueError("alpha weights are defined on the fiber-infinity charts")
    return fc.orientation * val


def t_minus_r_rate(pt: PhasePoint) -> float:
    """Derivative of t - r along the displayed field, over nf.

    Uses t - r = 1/rho_Tf - T in NfTf and R - 1/rho_Sf in NfSf, valid for
    sigma = +1 (future half-space).
    """
    fc = pt.fiber_chart
    dz = hp_field(pt)
    y = pt.base.c2
    if fc.base.sigma != 1:
        raise ValueError("t - r monotonicity is stated in the future half-space")
    if fc.base.kind is ChartKind.NFTF:
        return float(-dz[1] / (y * y))
    if fc.base.kind is ChartKind.NFSF:
        return float(dz[1] / (y * y))
    raise ValueError("needs an nf chart")


# ---------------------------------------------------------------------------
# flow


class FlowStatus(str, Enum):
    BOUNDARY = "ReachedBoundaryOfDomain"
    CONVERGED = "ConvergedToRadialSet"
    MAX_STEPS = "MaxSteps"


@dataclass
class FlowTrace:
    samples: list = field(default_factory=list)  # (lambda, PhasePoint)
    switches: list = field(default_factory=list)  # (index, from chart, to chart)
    status: FlowStatus = FlowStatus.MAX_STEPS
    radial_set: Optional[RadialSetId] = None
    message: str = ""

    def ptilde(self, m: float) -> np.ndarray:
        return np.array([symbol_p(p, m).ptilde for _, p in self.samples])


# chart bookkeeping constants
_FIBER_BIG = 50.0
_RHO_UP = 20.0
_Y_MAX = 4.0
_Y_SWITCH = 1.0
_X_MAX = 0.99
_X_SWITCH = 0.9
_NF_OFFSET = 1.0


def _radial_candidates(fc: FiberChartId, z, m: float):
    """(RadialSetId, distance) pairs for sets visible in chart ``fc`` at z."""
    x, y, a, b, h = z
    sig = fc.base.sigma
    out = []
    if fc.kind is FiberKind.INFTF:
        e = fc.orientation
        sheet = e * sig
        out.append((RadialSetId(Family.N, sheet, sig), math.sqrt(x * x + a * a + b * b + h * h)))
        out.append((RadialSetId(Family.C, sheet, sig), math.sqrt(x * x + y * y + a * a + (b - 2) ** 2 + h * h)))
        out.append((RadialSetId(Family.R, sheet, sig), math.sqrt(y * y + (a - 1.0 / m) ** 2 + (b - 1) ** 2 + h * h)))
    elif fc.kind is FiberKind.INFSF:
        e = fc.orientation
        sheet = e * sig
        out.append((RadialSetId(Family.N, sheet, sig), math.sqrt(x * x + a * a + (b - 1) ** 2 + h * h)))
        out.append((RadialSetId(Family.K, sheet, sig), math.sqrt(x * x + y * y + a * a + (b + 3) ** 2 + h * h)))
        out.append((RadialSetId(Family.A, sheet, sig), math.sqrt(x * x + y * y + a * a + (b + 1) ** 2 + (h - 1) ** 2)))
    elif fc.kind is FiberKind.DESC and fc.base.kind is ChartKind.NFTF:
        for sheet in (1, -1):
            v = -sheet * sig * m
            out.append((RadialSetId(Family.R, sheet, sig), math.sqrt(y * y + (a - v) ** 2 + (b - v) ** 2 + h * h)))
    return out


def _other_nf(fc: FiberChartId) -> FiberChartId:
    b = fc.base
    off = b.offset if b.offset > 0 else _NF_OFFSET
    if b.kind is ChartKind.NFTF:
        nb = ChartId(ChartKind.NFSF, b.sigma, off)
        kind = FiberKind.INFSF if fc.is_infinity else FiberKind.DESC
    else:
        nb = ChartId(ChartKind.NFTF, b.sigma, off)
        kind = FiberKind.INFTF if fc.is_infinity else FiberKind.DESC
    return FiberChartId(kind, nb, fc.mirror)


def nf_base_switch(fc: FiberChartId, z, target: Optional[FiberChartId] = None):
    """Move a point over nf (rho_nf = 0) between the NfTf and NfSf charts.

    Uses the boundary limit of the covector transformation:
    xi_T = k xi_S, zeta_T = ((k^2+1) xi_S - 2 zeta_S) / (2k), eta unchanged,
    with k = sqrt(rho_Tf / rho_Sf).  Fiber-infinity charts are handled in
    homogeneous (rho-scaled) fiber coordinates, so rho = 0 is allowed.
    """
    x, y, a, b, h = (float(v) for v in z)
    if x != 0.0:
        raise DomainError("boundary base switch needs rho_nf = 0")
    target = target or _other_nf(fc)
    src_b, dst_b = fc.base, target.base
    if src_b.kind is ChartKind.NFTF:
        v = 1.0 / y - src_b.offset
        y_new = 1.0 / (dst_b.offset - v)
        if not y_new > 0:
            raise DomainError("point outside the NfSf chart")
        k = math.sqrt(y / y_new)
    else:
        v = src_b.offset - 1.0 / y
        y_new = 1.0 / (v + dst_b.offset)
        if not y_new > 0:
            raise DomainError("point outside the NfTf chart")
        k = math.sqrt(y_new / y)

    # homogeneous finite fiber coordinates (xi, zeta, eta) times rho
    if fc.is_infinity:
        rho = a
        o = fc.orientation
        if fc.kind is FiberKind.INFTF:
            hz = -o
            hx = -o * b
        else:
            hz = o * (b + 1) / 2
            hx = o * (b - 1) / 2
        he = h
    else:
        rho = 1.0
        hx, hz, he = a, b, h

    if src_b.kind is ChartKind.NFTF:
        nx = hx / k
        nz = ((k * k + 1) * hx / k - 2 * k * hz) / 2
    else:
        nx = k * hx
        nz = ((k * k + 1) * hx - 2 * hz) / (2 * k)

    if not target.is_infinity:
        if rho == 0:
            raise DomainError("fiber infinity has no finite-chart image")
        return target, np.array([0.0, y_new, nx / rho, nz / rho, he / rho])
    o = target.orientation
    if target.kind is FiberKind.INFTF:
        D = -o * nz
        return target, np.array([0.0, y_new, rho / D, nx / nz, he / D])
    D = o * (nz - nx)
    return target, np.array([0.0, y_new, rho / D, (nz + nx) / (nz - nx), he / D])


def _to_point(fc: FiberChartId, z, side: int) -> PhasePoint:
    if fc.kind is FiberKind.CARTESIAN:
        t, X, tau, K, h = z
        r = abs(X) if X != 0 else 1e-300
        s = 1.0 if X >= 0 else -1.0
        return make_point(fc, t, r, tau, s * K, abs(h))
    zz = np.array(z, dtype=float)
    zz[0] = max(zz[0], 0.0)
    zz[1] = max(zz[1], 0.0)
    if fc.is_infinity:
        zz[2] = max(zz[2], 0.0)
    return PhasePoint.from_array(fc, zz)


_CART = FiberChartId(FiberKind.CARTESIAN, ChartId(ChartKind.CARTESIAN))


def _cart_to_nftf(z, offset: float):
    t, X, tau, K, h = z
    sigma = 1 if t > 0 else -1
    side = 1 if X >= 0 else -1
    r = abs(X)
    Xi = side * K
    base = ChartId(ChartKind.NFTF, sigma, offset)
    x, y = (float(v) for v in chart_coords(t, r, ChartKind.NFTF, sigma, offset))
    xi, zeta = cartesian_to_desc_momenta(x, y, tau, Xi, ChartKind.NFTF, sigma)
    return FiberChartId(FiberKind.DESC, base), np.array([x, y, xi, zeta, h]), side


def _desc_to_cart(fc: FiberChartId, z, side: int):
    x, y, a, b, h = z
    t, r = (float(v) for v in cartesian_coords(x, y, fc.base.kind, fc.base.sigma, fc.base.offset))
    tau, Xi = desc_to_cartesian_momenta(x, y, a, b, fc.base.kind, fc.base.sigma)
    return _CART, np.array([t, side * r, tau, side * Xi, h])


def _to_inf_same_base(fc: FiberChartId, z):
    x, y, a, b, h = z
    if fc.base.kind is ChartKind.NFTF:
        kind = FiberKind.INFTF
        mirror = b > 0
    else:
        kind = FiberKind.INFSF
        mirror = (b - a) < 0
    tgt = FiberChartId(kind, fc.base, mirror)
    f1, f2, f3 = desc_to_inf(a, b, h, kind, mirror)
    return tgt, np.array([x, y, f1, f2, f3])


def _to_desc_same_base(fc: FiberChartId, z):
    x, y, rho, a, h = z
    xi, zeta, eta = inf_to_desc(rho, a, h, fc.kind, fc.mirror)
    return FiberChartId(FiberKind.DESC, fc.base), np.array([x, y, xi, zeta, eta])


def _cart_entry_gauge(z, offset):
    t, X, tau, K, h = z
    r = abs(X)
    g1 = abs(t) - r + offset - 1.0 / _Y_SWITCH
    far = abs(t) + r + offset
    near = abs(t) - r + offset
    xx = math.sqrt(near / far) if near > 0 else 0.0
    return min(g1, _X_SWITCH - xx)


def flow(
    pt0: PhasePoint,
    m: float = 1.0,
    direction: int = 1,
    tol: float = 1e-10,
    max_lambda: float = 50.0,
    radius: float = 1e-6,
    loose_tol: float = 1e-6,
    max_switches: int = 50,
    method: str = "DOP853",
) -> FlowTrace:
    """Integrate the displayed field from ``pt0``.

    The start must satisfy |ptilde| < loose_tol; interior starts are allowed
    (the boundary faces are invariant, so interior characteristic points are
    how one connects the past cap to the future cap).  Charts are switched
    when a coordinate leaves its comfortable range; the flow parameter is
    continued across switches.  Integration stops on reaching a catalogued
    radial set within ``radius``.
    """
    if abs(symbol_p(pt0, m).ptilde) >= loose_tol:
        raise ValueError("start point is not on the characteristic set")
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")
    trace = FlowTrace()
    fc = pt0.fiber_chart
    side = 1
    if fc.kind is FiberKind.CARTESIAN:
        z = np.array([pt0.base.c1, pt0.base.c2, pt0.f1, pt0.f2, pt0.f3])
    else:
        z = pt0.coords
    lam = 0.0
    trace.samples.append((lam, _to_point(fc, z, side)))
    interior_offset = pt0.fiber_chart.base.offset

    for _ in range(max_switches + 1):
        if lam >= max_lambda:
            trace.status = FlowStatus.MAX_STEPS
            trace.message = "reached max_lambda"
            return trace
        events, actions = [], []
        x, y = z[0], z[1]
        interior = fc.kind is FiberKind.CARTESIAN or (x > 0 and y > 0)

        def rhs(_, w, fc=fc):
            return direction * display_field(fc, w)

        def add(fn, dirn, action):
            fn.terminal = True
            fn.direction = dirn
            events.append(fn)
            actions.append(action)

        # radial proximity
        cands = [c for c, _ in _radial_candidates(fc, z, m)] if fc.kind is not FiberKind.CARTESIAN else []
        for idx, rid in enumerate(cands):
            def ev(_, w, fc=fc, idx=idx):
                return _radial_candidates(fc, w, m)[idx][1] - radius
            add(ev, -1, ("converged", rid))

        if fc.kind is FiberKind.CARTESIAN:
            add(lambda _, w: _cart_entry_gauge(w, interior_offset), 1, ("cart->nftf", None))
        elif fc.kind is FiberKind.DESC:
            add(lambda _, w: abs(w[2]) + abs(w[3]) + abs(w[4]) - _FIBER_BIG, 1, ("desc->inf", None))
            if interior:
                add(lambda _, w: w[1] - _Y_MAX, 1, ("->cart", None))
                add(lambda _, w: w[0] - _X_MAX, 1, ("->cart", None))
            elif x == 0:
                add(lambda _, w: w[1] - _Y_MAX, 1, ("nf-switch", None))
            else:
                add(lambda _, w: w[0] - _X_MAX, 1, ("edge", None))
        else:
            add(lambda _, w: w[2] - _RHO_UP, 1, ("inf->desc", None))
            if interior:
                add(lambda _, w: w[1] - _Y_MAX, 1, ("inf->desc", None))
                add(lambda _, w: w[0] - _X_MAX, 1, ("inf->desc", None))
            elif x == 0:
                add(lambda _, w: w[1] - _Y_MAX, 1, ("nf-switch", None))
            else:
                add(lambda _, w: w[0] - _X_MAX, 1, ("edge", None))

        try:
            sol = solve_ivp(rhs, (lam, max_lambda), z, method=method, rtol=tol, atol=tol, events=events)
        except Exception as exc:  # pragma: no cover - defensive
            trace.status = FlowStatus.MAX_STEPS
            trace.message = f"integrator failure: {exc}"
            return trace
        for k in range(1, sol.t.size):
            trace.samples.append((float(sol.t[k]), _to_point(fc, sol.y[:, k], side)))
        if sol.status == -1:
            trace.status = FlowStatus.MAX_STEPS
            trace.message = sol.message
            return trace
        if sol.status == 0:
            trace.status = FlowStatus.MAX_STEPS
            trace.message = "reached max_lambda"
            return trace

        fired = [i for i, te in enumerate(sol.t_events) if te.size]
        i = fired[0]
        lam = float(sol.t_events[i][0])
        z = sol.y_events[i][0].copy()
        if not trace.samples or trace.samples[-1][0] != lam:
            trace.samples.append((lam, _to_point(fc, z, side)))
        kind, payload = actions[i]
        if kind == "converged":
            trace.status = FlowStatus.CONVERGED
            trace.radial_set = payload
            return trace
        if kind == "edge":
            trace.status = FlowStatus.BOUNDARY
            trace.message = "rho_nf reached the r = 0 edge of the chart"
            return trace

        old = fc
        try:
            if kind == "desc->inf":
                fc, z = _to_inf_same_base(fc, z)
            elif kind == "inf->desc":
                fc, z = _to_desc_same_base(fc, z)
                if interior and (z[1] >= _Y_MAX or z[0] >= _X_MAX):
                    fc, z = _desc_to_cart(fc, z, side)
            elif kind == "->cart":
                if z[4] != 0:
                    trace.status = FlowStatus.BOUNDARY
                    trace.message = "interior flow with angular momentum leaves the nf charts"
                    return trace
                fc, z = _desc_to_cart(fc, z, side)
            elif kind == "cart->nftf":
                fc, z, side = _cart_to_nftf(z, interior_offset)
            elif kind == "nf-switch":
                z = np.array(z)
                z[0] = 0.0
                fc, z = nf_base_switch(fc, z)
        except (DomainError, ZeroDivisionError) as exc:
            trace.status = FlowStatus.BOUNDARY
            trace.message = str(exc)
            return trace
        trace.switches.append((len(trace.samples) - 1, old, fc))
        trace.samples.append((lam, _to_point(fc, z, side)))

    trace.status = FlowStatus.MAX_STEPS
    trace.message = "too many chart switches"
    return trace

