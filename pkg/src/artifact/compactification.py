"""Base geometry of the octagonal compactification of the (t, r) half-plane.

Two boundary-fibration charts sit near null infinity:

* ``NFTF``: coordinates (rho_nf, rho_Tf), covering null infinity near a
  timelike cap, valid in ``sigma*t > 0`` and ``|t| + T > r``.
* ``NFSF``: coordinates (rho_nf, rho_Sf), covering null infinity near
  spacelike infinity, valid in ``sigma*t >= 0`` and ``|t| < r + R``.

``CARTESIAN`` is plain (t, r).  All functions here are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np


class DomainError(ValueError):
    """Raised when a point lies outside the region where a map is defined."""


class ChartKind(str, Enum):
    CARTESIAN = "cartesian"
    NFTF = "nftf"
    NFSF = "nfsf"


@dataclass(frozen=True)
class ChartId:
    kind: ChartKind
    sigma: int = 1
    offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ChartKind(self.kind))
        if self.sigma not in (-1, 1):
            raise ValueError(f"sigma must be +1 or -1, got {self.sigma}")
        if self.offset < 0 or not math.isfinite(self.offset):
            raise ValueError(f"offset must be finite and >= 0, got {self.offset}")


@dataclass(frozen=True)
class BasePoint:
    """A point of the compactified half-plane in one chart.

    ``(c1, c2)`` is ``(t, r)`` for Cartesian, ``(rho_nf, rho_Tf)`` for NfTf
    and ``(rho_nf, rho_Sf)`` for NfSf.
    """

    chart: ChartId
    c1: float
    c2: float

    def is_interior(self) -> bool:
        if self.chart.kind is ChartKind.CARTESIAN:
            return self.c2 > 0
        return self.c1 > 0 and self.c2 > 0

    def over_boundary(self) -> bool:
        return not self.is_interior()


# vectorized kernels, no validation


def chart_coords(t, r, kind: ChartKind, sigma: int = 1, offset: float = 0.0):
    """(t, r) -> chart coordinates, elementwise on arrays."""
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    if kind is ChartKind.CARTESIAN:
        return t, r
    at = np.abs(t)
    if kind is ChartKind.NFTF:
        near = at - r + offset
    else:
        near = r - at + offset
    far = at + r + offset
    return np.sqrt(near / far), 1.0 / near


def cartesian_coords(c1, c2, kind: ChartKind, sigma: int = 1, offset: float = 0.0):
    """Chart coordinates -> (t, r), elementwise.  Needs c1, c2 > 0."""
    c1 = np.asarray(c1, dtype=float)
    c2 = np.asarray(c2, dtype=float)
    if kind is ChartKind.CARTESIAN:
        return c1, c2
    x2 = c1 * c1
    half = 1.0 / (2.0 * x2 * c2)
    if kind is ChartKind.NFTF:
        t = sigma * (half * (1.0 + x2) - offset)
        r = half * (1.0 - x2)
    else:
        t = sigma * half * (1.0 - x2)
        r = half * (1.0 + x2) - offset
    return t, r


def chart_jacobian_arrays(c1, c2, kind: ChartKind, sigma: int = 1):
    """d(c1, c2)/d(t, r) as an array of shape (..., 2, 2).

    Written in chart coordinates only, so it also makes sense over the
    boundary where there is no (t, r) preimage.
    """
    x = np.asarray(c1, dtype=float)
    y = np.asarray(c2, dtype=float)
    out = np.empty(np.broadcast(x, y).shape + (2, 2))
    if kind is ChartKind.CARTESIAN:
        out[...] = np.eye(2)
        return out
    x2 = x * x
    if kind is ChartKind.NFTF:
        out[..., 0, 0] = sigma * 0.5 * (1.0 - x2) * x * y
        out[..., 0, 1] = -0.5 * (1.0 + x2) * x * y
        out[..., 1, 0] = -sigma * y * y
        out[..., 1, 1] = y * y
    else:
        out[..., 0, 0] = -sigma * 0.5 * (1.0 + x2) * x * y
        out[..., 0, 1] = 0.5 * (1.0 - x2) * x * y
        out[..., 1, 0] = sigma * y * y
        out[..., 1, 1] = -y * y
    return out


def in_region(t, r, chart: ChartId, guard: float = 1e-10):
    """Boolean mask of (t, r) inside the chart's validity region."""
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    ok = r > 0
    if chart.kind is ChartKind.CARTESIAN:
        return ok
    scale = 1.0 + np.abs(t) + r
    at = np.abs(t)
    if chart.kind is ChartKind.NFTF:
        ok &= chart.sigma * t > 0
        ok &= at + chart.offset - r > guard * scale
    else:
        ok &= chart.sigma * t >= 0
        ok &= r + chart.offset - at > guard * scale
    return ok


# scalar API


def to_chart(t: float, r: float, target: ChartId, guard: float = 1e-10) -> BasePoint:
    """Coordinates of the interior point (t, r) in ``target``.

    Raises DomainError naming the violated inequality when (t, r) is outside
    the chart (or within ``guard`` of its excluded set).
    """
    if not r > 0:
        raise DomainError(f"r > 0 required, got r={r}")
    if target.kind is ChartKind.CARTESIAN:
        return BasePoint(target, float(t), float(r))
    sg, off = target.sigma, target.offset
    scale = 1.0 + abs(t) + r
    if target.kind is ChartKind.NFTF:
        if not sg * t > 0:
            raise DomainError(f"sigma*t > 0 violated (sigma={sg}, t={t})")
        if not abs(t) + off - r > guard * scale:
            raise DomainError(f"|t| + T > r violated (t={t}, r={r}, T={off})")
    else:
        if not sg * t >= 0:
            raise DomainError(f"sigma*t >= 0 violated (sigma={sg}, t={t})")
        if not r + off - abs(t) > guard * scale:
            raise DomainError(f"|t| < r + R violated (t={t}, r={r}, R={off})")
    c1, c2 = chart_coords(t, r, target.kind, sg, off)
    return BasePoint(target, float(c1), float(c2))


def from_chart(p: BasePoint) -> tuple[float, float]:
    """Interior preimage (t, r) of a chart point."""
    if p.chart.kind is ChartKind.CARTESIAN:
        return float(p.c1), float(p.c2)
    if not (p.c1 > 0 and p.c2 > 0):
        raise DomainError(f"no interior preimage: boundary point ({p.c1}, {p.c2})")
    t, r = cartesian_coords(p.c1, p.c2, p.chart.kind, p.chart.sigma, p.chart.offset)
    return float(t), float(r)


def global_null_bdf(t, r, sign: int):
    """Globally defined defining function of the future (+) or past (-) null face."""
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    q = 1.0 + t * t + r * r
    val = ((t / np.sqrt(q) - sign / math.sqrt(2.0)) ** 2 + 1.0 / q) ** 0.25
    return float(val) if val.ndim == 0 else val


def chart_jacobian(p: BasePoint) -> np.ndarray:
    """2x2 matrix d(c1, c2)/d(t, r) at an interior point."""
    if not p.is_interior():
        raise DomainError("chart_jacobian needs an interior point")
    return chart_jacobian_arrays(p.c1, p.c2, p.chart.kind, p.chart.sigma)


def _fd_jet(u, a, b, h):
    # 4th order central stencils
    w1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
    w2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
    k = np.arange(-2, 3)
    ua = np.array([u(a + i * h, b) for i in k])
    ub = np.array([u(a, b + i * h) for i in k])
    ua_ = w1 @ ua / h
    ub_ = w1 @ ub / h
    uaa = w2 @ ua / h**2
    ubb = w2 @ ub / h**2
    # mixed derivative as tensor product of first-derivative stencils
    uab = 0.0
    for i, wi in zip(k, w1):
        if wi == 0.0:
            continue
        for j, wj in zip(k, w1):
            if wj == 0.0:
                continue
            uab += wi * wj * u(a + i * h, b + j * h)
    uab /= h * h
    return ua_, ub_, uaa, uab, ubb


def dalembertian_in_chart(
    chart: ChartId,
    u: Callable,
    c1: float,
    c2: float,
    jet: Optional[Callable] = None,
    h: float = 1e-4,
) -> float:
    """Apply the flat 1+1 wave operator dt^2 - dr^2, written in ``chart``.

    ``u(c1, c2)`` is a scalar function of the chart coordinates.  If ``jet``
    is given it must return ``(u_1, u_2, u_11, u_12, u_22)`` at the point;
    otherwise 4th order central differences with step ``h`` are used.

    In NfTf coordinates (x, y) = (rho_nf, rho_Tf) the operator is
    ``-x^4 y^2 d_x^2 + 2 x^3 y^3 d_x d_y - x^3 y^2 d_x``; NfSf is its negative.
    """
    if jet is not None:
        u1, u2, u11, u12, u22 = jet(c1, c2)
    else:
        u1, u2, u11, u12, u22 = _fd_jet(u, c1, c2, h)
    if chart.kind is ChartKind.CARTESIAN:
        return u11 - u22
    x, y = c1, c2
    val = -(x**4) * y**2 * u11 + 2.0 * x**3 * y**3 * u12 - x**3 * y**2 * u1
    return val if chart.kind is ChartKind.NFTF else -val
