"""Exact d=3 Klein-Gordon advanced/retarded propagators and their null tail.

Only the smooth term is represented; the delta layer on the light cone is
left out.  ``sign=+1`` is supported in t > 0, ``sign=-1`` in t < 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import j1

from .compactification import DomainError


@dataclass(frozen=True)
class PropagatorSample:
    t: float
    r: float
    m: float
    sign: int
    value: float


@dataclass(frozen=True)
class NullTailFrame:
    v: float
    rho: float
    zeta: float
    xi: float

    @classmethod
    def from_tr(cls, t: float, r: float) -> "NullTailFrame":
        v = abs(t) - r
        z, x = sc_frequency(v)
        return cls(v, (abs(t) + r) ** -0.5, z, x)


def bessel_j1(x):
    """Bessel function J_1 (thin wrapper, vectorized)."""
    return j1(x)


def dpm_smooth(t, r, m: float, sign: int = 1):
    """Smooth part  -sign (m/4pi) (t^2-r^2)^(-1/2) J_1(m sqrt(t^2-r^2))  inside the cone.

    Vanishes outside ``sign*t > 0, t^2 > r^2``.  Near the cone it tends to
    ``-sign m^2/(8 pi)``.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    q = t * t - r * r
    inside = (sign * t > 0) & (q > 0)
    qs = np.where(inside, q, 1.0)
    z = m * np.sqrt(qs)
    # J_1(z)/z, with the series near 0 to avoid cancellation
    small = z < 1e-4
    ratio = np.where(small, 0.5 - z * z / 16.0, j1(z) / np.where(small, 1.0, z))
    val = -sign * (m * m / (4 * math.pi)) * ratio
    out = np.where(inside, val, 0.0)
    return float(out) if out.ndim == 0 else out


def null_tail_asymptotic(v, rho, m: float, sign: int = 1):
    """Leading null-infinity term in terms of v = |t|-r and rho = (|t|+r)^(-1/2).

    ``-sign sqrt(m/(8 pi^3)) rho^(3/2) v^(-3/4) cos(m sqrt(v)/rho - 3 pi/4)``.
    """
    v = np.asarray(v, dtype=float)
    rho = np.asarray(rho, dtype=float)
    amp = math.sqrt(m / (8 * math.pi**3))
    out = -sign * amp * rho**1.5 * v**-0.75 * np.cos(m * np.sqrt(v) / rho - 0.75 * math.pi)
    return float(out) if out.ndim == 0 else out


def tail_phase(v, rho, m: float):
    return m * np.sqrt(v) / rho - 0.75 * math.pi


def sc_frequency(v: float):
    """(zeta, xi) = (1/(2 sqrt v), -sqrt v): frequency of the tail oscillation."""
    if not v > 0:
        raise DomainError(f"v > 0 required, got {v}")
    s = math.sqrt(v)
    return 1.0 / (2.0 * s), -s


def envelope_at_extrema(v: float, rho_max: float, m: float = 1.0, sign: int = 1, count: int = 8):
    """Sample |dpm_smooth| / (rho^(3/2) v^(-3/4)) at the cosine extrema with rho <= rho_max.

    The extrema are where the tail phase is a multiple of pi.  Returns
    (rho values, ratios).
    """
    sv = math.sqrt(v)
    kmin = math.ceil((m * sv / rho_max - 0.75 * math.pi) / math.pi)
    k = np.arange(kmin, kmin + count)
    rho = m * sv / (k * math.pi + 0.75 * math.pi)
    t = 0.5 * (rho**-2 + v)
    r = 0.5 * (rho**-2 - v)
    vals = dpm_smooth(t, r, m, sign)
    return rho, np.abs(vals) / (rho**1.5 * v**-0.75)
