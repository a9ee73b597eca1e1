"""Hyperbolic (Milne-type) coordinates inside the light cone, d = 1.

The map iota sends (t, x) with t^2 > |x|^2 to (tau, y), where
tau = sign(t) sqrt(t^2 - |x|^2) and y lies in the unit ball.  Ball functions
are sampled on a uniform grid in the hyperbolic distance eta,
y = tanh(eta/2), so nodes cluster at the ideal boundary and the hyperbolic
Laplacian in d = 1 is simply -d_eta^2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import cumulative_simpson

from .compactification import DomainError


@dataclass(frozen=True)
class HyperbolicPoint:
    tau: float
    y: np.ndarray

    def __post_init__(self):
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        object.__setattr__(self, "y", y)
        if self.tau == 0:
            raise ValueError("tau must be nonzero")
        if not np.linalg.norm(y) < 1:
            raise ValueError("|y| < 1 required")


def iota(t: float, x) -> HyperbolicPoint:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    r2 = float(x @ x)
    if not t * t > r2:
        raise DomainError(f"t^2 > |x|^2 required, got t={t}, |x|^2={r2}")
    a = math.sqrt(t * t - r2)
    sg = 1.0 if t > 0 else -1.0
    return HyperbolicPoint(sg * a, x * sg / (abs(t) + a))


def iota_inv(p: HyperbolicPoint):
    y2 = float(p.y @ p.y)
    if not y2 < 1:
        raise DomainError("|y| < 1 required")
    den = 1.0 - y2
    return p.tau * (1.0 + y2) / den, 2.0 * p.tau * p.y / den


def iota_arrays(t, x):
    """Vectorized d=1 iota: (tau, y) arrays."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    a = np.sqrt(t * t - x * x)
    sg = np.sign(t)
    return sg * a, x * sg / (np.abs(t) + a)


def iota_inv_arrays(tau, y):
    tau = np.asarray(tau, dtype=float)
    y = np.asarray(y, dtype=float)
    den = 1.0 - y * y
    return tau * (1.0 + y * y) / den, 2.0 * tau * y / den


@dataclass(frozen=True)
class BallGrid:
    """Uniform grid in eta on [-eta_max, eta_max]; y = tanh(eta/2)."""

    n: int = 257
    eta_max: float = 12.0

    @property
    def eta(self) -> np.ndarray:
        return np.linspace(-self.eta_max, self.eta_max, self.n)

    @property
    def y(self) -> np.ndarray:
        return np.tanh(self.eta / 2)

    @property
    def h(self) -> float:
        return 2 * self.eta_max / (self.n - 1)


# 4th order first/second derivative stencils with one-sided ends
_C1 = np.array([1, -8, 0, 8, -1]) / 12.0
_C2 = np.array([-1, 16, -30, 16, -1]) / 12.0
_L1 = np.array([[-25, 48, -36, 16, -3], [-3, -10, 18, -6, 1]]) / 12.0
_L2 = np.array([[45, -154, 214, -156, 61, -10], [10, -15, -4, 14, -6, 1]]) / 12.0


def fd_diff(u, h: float, order: int = 1, axis: int = 0):
    """4th order finite-difference derivative along ``axis`` (needs >= 6 nodes)."""
    u = np.moveaxis(np.asarray(u), axis, 0)
    n = u.shape[0]
    if n < 6:
        raise ValueError("need at least 6 nodes")
    out = np.empty_like(u)
    c = _C1 if order == 1 else _C2
    out[2:-2] = sum(c[j] * u[j : n - 4 + j] for j in range(5))
    edge = _L1 if order == 1 else _L2
    for i in range(2):
        w = edge[i]
        k = len(w)
        out[i] = sum(w[j] * u[j] for j in range(k))
        sgn = -1 if order == 1 else 1
        out[n - 1 - i] = sgn * sum(w[j] * u[n - 1 - j] for j in range(k))
    out /= h**order
    return np.moveaxis(out, 0, axis)


def laplacian_h1(u, grid: BallGrid, axis: int = -1):
    """Nonnegative hyperbolic Laplacian in d=1: -d_eta^2 (4th order FD)."""
    return -fd_diff(u, grid.h, 2, axis)


def laplacian_h1_spectral(u, grid: BallGrid, axis: int = -1):
    """-d_eta^2 by FFT; for data decaying at both ends of the grid."""
    u = np.asarray(u)
    n = u.shape[axis]
    k = 2 * np.pi * np.fft.fftfreq(n, d=grid.h)
    shape = [1] * u.ndim
    shape[axis] = n
    return np.fft.ifft(np.fft.fft(u, axis=axis) * (k**2).reshape(shape), axis=axis)


def _check_d(d: int, u):
    if d != 1 and np.shape(u)[-1] != 1:
        raise NotImplementedError("the ball Laplacian is implemented for d = 1 (y-independent data for other d)")


def box_esc(u, tau, grid: Optional[BallGrid] = None, d: int = 1):
    """d_tau^2 + d tau^-1 d_tau + tau^-2 Delta_H on u[tau_index, eta_index].

    ``tau`` is a uniform grid.  A y-independent ``u`` may be given with a
    single eta column (any d).
    """
    u = np.asarray(u)
    tau = np.asarray(tau, dtype=float)
    _check_d(d, u)
    ht = tau[1] - tau[0]
    T = tau[:, None]
    out = fd_diff(u, ht, 2, 0) + d / T * fd_diff(u, ht, 1, 0)
    if u.shape[1] > 1:
        out = out + laplacian_h1(u, grid, axis=1) / T**2
    return out


def _potential_values(potential, grid, ncols):
    if potential is None:
        return 0.0
    if grid is None:
        raise ValueError("a potential needs a grid")
    return np.asarray(potential(grid.y), dtype=float)[None, :] if ncols > 1 else float(potential(0.0))


def kg_apply(u, tau, m: float, grid: Optional[BallGrid] = None, d: int = 1, potential: Optional[Callable] = None):
    """(box_esc + m^2 + tau^-2 V) u."""
    u = np.asarray(u)
    T = np.asarray(tau, dtype=float)[:, None]
    V = _potential_values(potential, grid, u.shape[1])
    return box_esc(u, tau, grid, d) + m * m * u + V * u / T**2


def conjugated_apply(u0, tau, m: float, sign: int = 1, grid: Optional[BallGrid] = None, d: int = 1, potential: Optional[Callable] = None):
    """d_tau^2 + 2 i sign m d_tau + tau^-2 (d(2-d)/4 + Delta_H + V), by finite differences.

    Equals tau^(d/2) e^(-i sign m tau) (box_esc + m^2 + tau^-2 V) e^(i sign m tau) tau^(-d/2).
    ``potential`` is a function of y only.
    """
    u = np.asarray(u0, dtype=complex)
    tau = np.asarray(tau, dtype=float)
    _check_d(d, u)
    ht = tau[1] - tau[0]
    T = tau[:, None]
    V = _potential_values(potential, grid, u.shape[1])
    out = fd_diff(u, ht, 2, 0) + 2j * sign * m * fd_diff(u, ht, 1, 0)
    rem = (d * (2 - d) / 4.0 + V) * u
    if u.shape[1] > 1:
        rem = rem + laplacian_h1(u, grid, axis=1)
    return out + rem / T**2


@dataclass
class ExpansionSeries:
    m: float
    sign: int
    d: int
    coeffs: list
    grid: BallGrid
    potential: Optional[Callable] = None

    def partial_sum(self, tau, K: Optional[int] = None):
        """sum_{k<=K} w_k tau^-k on tau[:, None] x grid."""
        K = len(self.coeffs) - 1 if K is None else K
        T = np.asarray(tau, dtype=float)[:, None]
        return sum(self.coeffs[k][None, :] * T ** (-k) for k in range(K + 1))


def _L_apply(w, grid, d, V):
    return (d * (2 - d) / 4.0 + V) * w + laplacian_h1_spectral(w, grid)


def expansion_recursion(v, K: int, m: float, sign: int = 1, d: int = 1, grid: Optional[BallGrid] = None, potential: Optional[Callable] = None) -> ExpansionSeries:
    """Term-by-term solution of the conjugated equation in powers of 1/tau.

    With L = d(2-d)/4 + Delta_H + V, the tau^(-k-1) balance gives
    w_k = [k(k-1) + L] w_{k-1} / (2 i sign m k),  w_0 = v.
    The eta derivatives use FFT, so v must decay at both ends of the grid.
    """
    if K < 1:
        raise ValueError("K >= 1 required")
    if m <= 0:
        raise ValueError("m > 0 required")
    if d != 1:
        raise NotImplementedError("recursion implemented for d = 1")
    grid = grid or BallGrid()
    w = np.asarray(v(grid.y) if callable(v) else v, dtype=complex)
    V = 0.0 if potential is None else np.asarray(potential(grid.y), dtype=float)
    coeffs = [w]
    for k in range(1, K + 1):
        prev = coeffs[-1]
        coeffs.append((k * (k - 1) * prev + _L_apply(prev, grid, d, V)) / (2j * sign * m * k))
    return ExpansionSeries(m, sign, d, coeffs, grid, potential)


def recursion_residual(series: ExpansionSeries, tau):
    """max over y of |conjugated operator applied to the partial sum|, per tau node."""
    u = series.partial_sum(tau)
    r = conjugated_apply(u, tau, series.m, series.sign, series.grid, series.d, series.potential)
    return np.max(np.abs(r[4:-4]), axis=1), np.asarray(tau)[4:-4]


@dataclass
class IntegratedProfile:
    tau: np.ndarray
    values: np.ndarray
    warning: Optional[str] = None


def asymptotic_integrate(f1, tau, u_at_1, sign: int = 1, min_decay: float = 1.0) -> IntegratedProfile:
    """u_at_1 + sign (1/2i) int_1^tau f1 dtau' on a tau grid starting at 1.

    Composite Simpson per column.  If the tail of |f1| does not decay faster
    than tau^-min_decay the result carries a warning.
    """
    tau = np.asarray(tau, dtype=float)
    f1 = np.asarray(f1, dtype=complex)
    if f1.ndim == 1:
        f1 = f1[:, None]
    if abs(tau[0] - 1.0) > 1e-12:
        raise ValueError("tau grid must start at 1")
    # cumulative_simpson drops imaginary parts, so integrate them separately
    integral = cumulative_simpson(f1.real, x=tau, axis=0, initial=0.0) + 1j * cumulative_simpson(
        f1.imag, x=tau, axis=0, initial=0.0
    )
    u1 = np.broadcast_to(np.asarray(u_at_1, dtype=complex), f1.shape[1:])
    vals = u1[None, :] + sign * integral / 2j
    msg = None
    tail = tau > tau[0] + 0.5 * (tau[-1] - tau[0])
    mag = np.max(np.abs(f1[tail]), axis=1)
    if np.all(mag > 0) and tail.sum() > 3:
        slope = np.polyfit(np.log(tau[tail]), np.log(mag), 1)[0]
        if slope > -min_decay:
            msg = f"f1 tail decays like tau^{slope:.2f}; integral may not converge"
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return IntegratedProfile(tau, vals, msg)
