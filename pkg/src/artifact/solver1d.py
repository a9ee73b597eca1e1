"""Klein-Gordon  (d_t^2 - d_x^2 + m^2) u = f  in one space dimension.

Two independent solvers on a periodic uniform grid:

* :func:`spectral_solve` evaluates the exact Fourier solution at any time.
* :func:`fd_solve` steps a 4th order (space and time) two-level scheme.

The periodic box must be large enough that nothing wraps around before the
measurement time; :func:`domain_half_width` gives the sizing rule.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

SNAPSHOT_SCHEMA = "artifact.snapshot/1"
SNAPSHOT_COLUMNS = ("t", "x", "re_u", "im_u", "re_ut", "im_ut")


@dataclass(frozen=True)
class Grid1D:
    x_min: float
    x_max: float
    n: int

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n

    @property
    def x(self) -> np.ndarray:
        # periodic: right end excluded
        return self.x_min + self.dx * np.arange(self.n)

    @property
    def k(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    @classmethod
    def symmetric(cls, half_width: float, dx: float) -> "Grid1D":
        n = int(round(2 * half_width / dx))
        return cls(-half_width, half_width, n)


def domain_half_width(t_end: float, support: float) -> float:
    """Half width so the full extent is at least 2.5 t_end + support."""
    return 0.5 * (2.5 * t_end + support) + support


@dataclass
class Field1D:
    grid: Grid1D
    t: float
    u: np.ndarray
    ut: np.ndarray
    m: float

    def edge_ok(self, floor: float = 1e-8, frac: float = 0.05) -> bool:
        n = self.grid.n
        w = max(1, int(frac * n))
        edge = np.concatenate([self.u[:w], self.u[-w:]])
        return bool(np.max(np.abs(edge)) < floor)


@dataclass
class Trajectory:
    grid: Grid1D
    m: float
    times: np.ndarray
    u: np.ndarray  # (n_times, n)
    ut: np.ndarray

    def field(self, i: int) -> Field1D:
        return Field1D(self.grid, float(self.times[i]), self.u[i], self.ut[i], self.m)

    def envelope(self) -> np.ndarray:
        return np.sqrt(np.abs(self.u) ** 2 + np.abs(self.ut) ** 2 / self.m**2)


def _as_values(g, x):
    if g is None:
        return np.zeros_like(x, dtype=complex)
    return np.asarray(g(x) if callable(g) else g, dtype=complex)


def _alias_check(uh, label):
    n = uh.size
    mag = np.abs(np.fft.fftshift(uh)) ** 2
    tot = mag.sum()
    if tot == 0:
        return
    w = max(1, n // 20)
    tail = mag[:w].sum() + mag[-w:].sum()
    if tail / tot > 1e-10:
        warnings.warn(f"{label}: spectral tail mass {tail / tot:.1e} > 1e-10, possible aliasing", RuntimeWarning, stacklevel=3)


def spectral_solve(u0, u1, f=None, t: float = 0.0, grid: Optional[Grid1D] = None, m: float = 1.0, quad_nodes: int = 64) -> Field1D:
    """Exact Fourier solution at time t.

    ``u0``, ``u1`` are arrays on the grid or callables of x.  ``f(t, x)`` is
    an optional forcing, integrated by Gauss-Legendre Duhamel quadrature.
    """
    if grid is None:
        raise ValueError("grid is required")
    x = grid.x
    k = grid.k
    om = np.sqrt(m * m + k * k)
    a = np.fft.fft(_as_values(u0, x))
    b = np.fft.fft(_as_values(u1, x))
    _alias_check(a, "u0")
    _alias_check(b, "u1")
    c, s = np.cos(om * t), np.sin(om * t)
    uh = c * a + s / om * b
    uth = -om * s * a + c * b
    if f is not None and t != 0:
        nodes, weights = np.polynomial.legendre.leggauss(quad_nodes)
        sn = 0.5 * t * (nodes + 1)
        wn = 0.5 * t * weights
        for si, wi in zip(sn, wn):
            fh = np.fft.fft(_as_values(lambda xx: f(si, xx), x))
            uh += wi * np.sin(om * (t - si)) / om * fh
            uth += wi * np.cos(om * (t - si)) * fh
    return Field1D(grid, float(t), np.fft.ifft(uh), np.fft.ifft(uth), m)


def spectral_trajectory(u0, u1, times, grid: Grid1D, m: float = 1.0) -> Trajectory:
    """Free spectral solution sampled at ``times`` (one transform pair per time)."""
    x, k = grid.x, grid.k
    om = np.sqrt(m * m + k * k)
    a = np.fft.fft(_as_values(u0, x))
    b = np.fft.fft(_as_values(u1, x))
    _alias_check(a, "u0")
    _alias_check(b, "u1")
    times = np.asarray(times, dtype=float)
    U = np.empty((times.size, grid.n), dtype=complex)
    UT = np.empty_like(U)
    for i, t in enumerate(times):
        c, s = np.cos(om * t), np.sin(om * t)
        U[i] = np.fft.ifft(c * a + s / om * b)
        UT[i] = np.fft.ifft(-om * s * a + c * b)
    return Trajectory(grid, m, times, U, UT)


def _d2(u, dx):
    # 4th order periodic second difference
    return (
        -np.roll(u, 2) + 16 * np.roll(u, 1) - 30 * u + 16 * np.roll(u, -1) - np.roll(u, -2)
    ) / (12 * dx * dx)


def max_stable_dt(dx: float, m: float) -> float:
    """Stability limit of :func:`fd_solve`: dt^2 (16/(3 dx^2) + m^2) <= 12."""
    return math.sqrt(12.0 / (16.0 / (3 * dx * dx) + m * m))


def fd_solve(
    u0,
    u1,
    f=None,
    t_end: float = 1.0,
    dt: Optional[float] = None,
    grid: Optional[Grid1D] = None,
    m: float = 1.0,
    order: int = 4,
    every: float = 0.5,
    potential: Optional[Callable] = None,
    safety: float = 0.9,
) -> Trajectory:
    """Finite-difference trajectory with snapshots every ``every`` time units.

    Uses u^{n+1} = 2u^n - u^{n-1} + dt^2 B^n + dt^4/12 (A B^n + f_tt^n), with
    A = D2 - m^2 - Q and B = A u + f, which is 4th order in time; D2 is the
    4th order periodic stencil.
    """
    if grid is None:
        raise ValueError("grid is required")
    if order != 4:
        raise ValueError("only order=4 is implemented")
    dx = grid.dx
    limit = max_stable_dt(dx, m)
    if dt is None:
        dt = 0.5 * limit
    if not dt < safety * limit:
        raise ValueError(f"CFL violation: dt={dt} exceeds {safety} x stability limit {limit:.4g}")
    x = grid.x
    Q = 0.0 if potential is None else np.asarray(potential(x), dtype=float)

    def A(v):
        return _d2(v, dx) - (m * m + Q) * v

    def F(t):
        return _as_values(lambda xx: f(t, xx), x) if f is not None else 0.0

    stride = max(1, math.ceil(every / dt - 1e-9))
    dt = every / stride
    nsteps = int(round(t_end / dt))
    u_prev = _as_values(u0, x)
    v0 = _as_values(u1, x)
    # Taylor start for u(dt)
    B0 = A(u_prev) + F(0.0)
    u_cur = u_prev + dt * v0 + dt**2 / 2 * B0 + dt**3 / 6 * (A(v0)) + dt**4 / 24 * A(B0)
    if f is not None:
        ft0 = (F(dt) - F(0.0)) / dt
        u_cur = u_cur + dt**3 / 6 * ft0
    times, U, UT = [0.0], [u_prev.copy()], [v0.copy()]
    for n in range(1, nsteps + 1):
        t = n * dt
        B = A(u_cur) + F(t)
        ftt = (F(t + dt) - 2 * F(t) + F(t - dt)) / dt**2 if f is not None else 0.0
        u_next = 2 * u_cur - u_prev + dt**2 * B + dt**4 / 12 * (A(B) + ftt)
        if n % stride == 0:
            # centered velocity with 4th order correction: (u+ - u-)/2dt - dt^2/6 u_ttt
            ut = (u_next - u_prev) / (2 * dt) - dt**2 / 6 * (A((u_next - u_prev) / (2 * dt)))
            times.append(t)
            U.append(u_cur.copy())
            UT.append(ut)
        u_prev, u_cur = u_cur, u_next
    return Trajectory(grid, m, np.array(times), np.array(U), np.array(UT))


def energy(fld: Field1D) -> float:
    """int |u_t|^2 + |u_x|^2 + m^2 |u|^2 dx (spectral u_x, periodic trapezoid)."""
    ux = np.fft.ifft(1j * fld.grid.k * np.fft.fft(fld.u))
    dens = np.abs(fld.ut) ** 2 + np.abs(ux) ** 2 + fld.m**2 * np.abs(fld.u) ** 2
    return float(np.sum(dens) * fld.grid.dx)


# ---------------------------------------------------------------------------
# measurements


@dataclass(frozen=True)
class Ray:
    kind: str  # "timelike" or "null"
    x0: float = 0.0
    velocity: float = 0.0
    c: float = 0.0

    def position(self, t):
        if self.kind == "timelike":
            return self.x0 + self.velocity * t
        if self.kind == "null":
            return t - self.c
        raise ValueError(f"unknown ray kind {self.kind!r}")

    @classmethod
    def timelike(cls, x0: float = 0.0, velocity: float = 0.0) -> "Ray":
        if abs(velocity) >= 1:
            raise ValueError("timelike rays need |velocity| < 1")
        return cls("timelike", x0=x0, velocity=velocity)

    @classmethod
    def null(cls, c: float) -> "Ray":
        return cls("null", c=c)


@dataclass
class RayMeasurement:
    ray: Ray
    times: np.ndarray
    values: np.ndarray
    fitted_exponent: float
    fit_r2: float
    flagged: bool


def _interp_rows(traj: Trajectory, arr, idx, xs):
    g = traj.grid
    out = np.empty(len(idx), dtype=arr.dtype)
    for j, (i, x) in enumerate(zip(idx, xs)):
        p = (x - g.x_min) / g.dx
        i0 = int(math.floor(p)) % g.n
        w = p - math.floor(p)
        out[j] = (1 - w) * arr[i, i0] + w * arr[i, (i0 + 1) % g.n]
    return out


def ray_decay(traj: Trajectory, ray: Ray, window=(40.0, 160.0)) -> RayMeasurement:
    """Fit the decay exponent of the envelope sqrt(|u|^2 + |u_t|^2/m^2) along a ray."""
    sel = np.where((traj.times >= window[0]) & (traj.times <= window[1]))[0]
    if sel.size < 3:
        raise ValueError("window contains fewer than 3 snapshots")
    ts = traj.times[sel]
    xs = ray.position(ts)
    u = _interp_rows(traj, traj.u, sel, xs)
    ut = _interp_rows(traj, traj.ut, sel, xs)
    env = np.sqrt(np.abs(u) ** 2 + np.abs(ut) ** 2 / traj.m**2)
    if np.any(env <= 0) or not np.all(np.isfinite(env)):
        return RayMeasurement(ray, ts, u, float("nan"), 0.0, True)
    X, Y = np.log(ts), np.log(env)
    k, c = np.polyfit(X, Y, 1)
    res = Y - (k * X + c)
    r2 = 1.0 - res.var() / Y.var() if Y.var() > 0 else 0.0
    return RayMeasurement(ray, ts, u, float(-k), float(r2), bool(r2 < 0.9))


@dataclass
class ModeProfile:
    sign: int
    y: np.ndarray
    t_centers: np.ndarray
    values: np.ndarray  # (n_t, n_y)


def mode_extract(traj: Trajectory, sign: int, y, t_centers, window: float = 20.0) -> ModeProfile:
    """Oscillatory profiles u_(+/-) along rays x = t * 2y/(1+y^2), d = 1.

    Over each window of snapshots the function tau^(1/2) u is fitted by
    least squares to a e^(i m tau) + b e^(-i m tau); u_+ = a, u_- = b.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    y = np.atleast_1d(np.asarray(y, dtype=float))
    t_centers = np.atleast_1d(np.asarray(t_centers, dtype=float))
    m = traj.m
    vel = 2 * y / (1 + y * y)
    out = np.empty((t_centers.size, y.size), dtype=complex)
    for a, tc in enumerate(t_centers):
        sel = np.where(np.abs(traj.times - tc) <= window / 2)[0]
        ts = traj.times[sel]
        for b, v in enumerate(vel):
            tau = ts * math.sqrt(1 - v * v)
            if tau.size < 4 or m * (tau.max() - tau.min()) < 2 * math.pi:
                raise ValueError("window shorter than one oscillation period")
            u = _interp_rows(traj, traj.u, sel, v * ts)
            g = np.sqrt(tau) * u
            M = np.stack([np.exp(1j * m * tau), np.exp(-1j * m * tau)], axis=1)
            coef = np.linalg.lstsq(M, g, rcond=None)[0]
            out[a, b] = coef[0] if sign == 1 else coef[1]
    return ModeProfile(sign, y, t_centers, out)


# ---------------------------------------------------------------------------
# snapshot store


def write_snapshots(traj: Trajectory, path, every: int = 1, fmt: str = "csv") -> None:
    """Columnar dump (t, x, re_u, im_u, re_ut, im_ut) with a schema header."""
    idx = np.arange(0, traj.times.size, every)
    x = traj.grid.x
    if fmt == "npz":
        np.savez_compressed(
            path,
            schema=np.array(SNAPSHOT_SCHEMA),
            t=traj.times[idx],
            x=x,
            u=traj.u[idx],
            ut=traj.ut[idx],
            m=traj.m,
            grid=np.array([traj.grid.x_min, traj.grid.x_max, traj.grid.n]),
        )
        return
    if fmt != "csv":
        raise ValueError(f"unknown snapshot format {fmt!r}")
    with open(path, "w") as fh:
        fh.write(f"# schema: {SNAPSHOT_SCHEMA}\n")
        fh.write(f"# m: {traj.m!r}\n# grid: {traj.grid.x_min!r} {traj.grid.x_max!r} {traj.grid.n}\n")
        fh.write(",".join(SNAPSHOT_COLUMNS) + "\n")
        for i in idx:
            block = np.column_stack(
                [np.full(x.size, traj.times[i]), x, traj.u[i].real, traj.u[i].imag, traj.ut[i].real, traj.ut[i].imag]
            )
            np.savetxt(fh, block, delimiter=",", fmt="%.17g")


def read_snapshots(path) -> Trajectory:
    path = str(path)
    if path.endswith(".npz"):
        d = np.load(path)
        if str(d["schema"]) != SNAPSHOT_SCHEMA:
            raise ValueError(f"unsupported snapshot schema {d['schema']}")
        g = d["grid"]
        return Trajectory(Grid1D(float(g[0]), float(g[1]), int(g[2])), float(d["m"]), d["t"], d["u"], d["ut"])
    meta = {}
    header = 0
    with open(path) as fh:
        for line in fh:
            header += 1
            if not line.startswith("#"):
                break
            key, _, val = line[1:].partition(":")
            meta[key.strip()] = val.strip()
    if meta.get("schema") != SNAPSHOT_SCHEMA:
        raise ValueError(f"unsupported snapshot schema {meta.get('schema')}")
    gx = meta["grid"].split()
    grid = Grid1D(float(gx[0]), float(gx[1]), int(gx[2]))
    data = np.loadtxt(path, delimiter=",", skiprows=header)
    data = data.reshape(-1, grid.n, 6)
    return Trajectory(
        grid,
        float(meta["m"]),
        data[:, 0, 0],
        data[..., 2] + 1j * data[..., 3],
        data[..., 4] + 1j * data[..., 5],
    )
