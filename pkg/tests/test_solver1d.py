import math
import warnings

import numpy as np
import pytest

from artifact.solver1d import (
    Grid1D,
    Ray,
    Trajectory,
    domain_half_width,
    energy,
    fd_solve,
    max_stable_dt,
    mode_extract,
    ray_decay,
    read_snapshots,
    spectral_solve,
    spectral_trajectory,
    write_snapshots,
)


def gauss(w=2.0):
    return lambda x: np.exp(-x * x / (2 * w * w))


def test_single_mode_exact():
    g = Grid1D(0.0, 2 * math.pi * 4, 128)
    k, m = 3 / 4, 1.0
    u0 = np.exp(1j * k * g.x)
    for t in (0.0, 1.7, 25.0):
        fld = spectral_solve(u0, None, None, t, g, m)
        assert np.allclose(fld.u, math.cos(math.sqrt(m * m + k * k) * t) * u0, atol=1e-12)


def test_identity_at_zero_time():
    g = Grid1D.symmetric(40.0, 0.1)
    fld = spectral_solve(gauss(), None, None, 0.0, g, 1.0)
    assert np.allclose(fld.u, gauss()(g.x), atol=1e-13)
    assert np.allclose(fld.ut, 0.0, atol=1e-13)


def test_alias_warning():
    g = Grid1D.symmetric(10.0, 0.5)
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        spectral_solve(np.sign(g.x), None, None, 1.0, g, 1.0)
    assert any("aliasing" in str(w.message) for w in rec)


def test_duhamel_forcing_matches_fd():
    g = Grid1D.symmetric(30.0, 0.1)
    f = lambda t, x: np.exp(-x * x) * np.sin(t)
    s = spectral_solve(None, None, f, 5.0, g, 1.0)
    tr = fd_solve(None, None, f, 5.0, None, g, 1.0, every=5.0)
    assert np.abs(tr.u[-1] - s.u).max() < 1e-5
    assert np.abs(s.u).max() > 0.1


def test_fd_zero_data():
    g = Grid1D.symmetric(10.0, 0.1)
    tr = fd_solve(None, None, None, 3.0, None, g, 1.0)
    assert np.all(tr.u == 0)


def test_fd_agrees_with_spectral_at_50():
    g = Grid1D.symmetric(domain_half_width(50.0, 12.0), 0.05)
    tr = fd_solve(gauss(), None, None, 50.0, None, g, 1.0, every=50.0)
    s = spectral_solve(gauss(), None, None, 50.0, g, 1.0)
    l2 = math.sqrt(np.sum(np.abs(tr.u[-1] - s.u) ** 2) * g.dx)
    assert l2 < 1e-4
    assert tr.field(len(tr.times) - 1).edge_ok()


def test_fd_fourth_order():
    errs = []
    for dx in (0.2, 0.1):
        g = Grid1D.symmetric(30.0, dx)
        tr = fd_solve(gauss(1.0), None, None, 10.0, None, g, 1.0, every=10.0)
        s = spectral_solve(gauss(1.0), None, None, 10.0, g, 1.0)
        errs.append(math.sqrt(np.sum(np.abs(tr.u[-1] - s.u) ** 2) * dx))
    assert errs[0] / errs[1] == pytest.approx(16.0, rel=0.25)


def test_cfl_violation_raises_before_stepping():
    g = Grid1D.symmetric(10.0, 0.1)
    with pytest.raises(ValueError, match="CFL"):
        fd_solve(gauss(), None, None, 1.0, max_stable_dt(g.dx, 1.0), g, 1.0)


def test_energy_examples():
    g = Grid1D(0.0, 2 * math.pi * 4, 64)
    from artifact.solver1d import Field1D

    assert energy(Field1D(g, 0.0, np.zeros(g.n), np.zeros(g.n), 1.0)) == 0.0
    k, A = 0.5, 0.7
    om = math.sqrt(1 + k * k)
    u = A * np.exp(1j * k * g.x)
    fld = Field1D(g, 0.0, u, -1j * om * u, 1.0)
    L = g.x_max - g.x_min
    assert energy(fld) == pytest.approx((om * om + k * k + 1) * A * A * L, rel=1e-12)


def test_energy_conserved_flat():
    g = Grid1D.symmetric(domain_half_width(100.0, 12.0), 0.1)
    tr = spectral_trajectory(gauss(), lambda x: 0.3 * x * np.exp(-x * x / 4), np.linspace(0, 100, 21), g, 1.0)
    e = np.array([energy(tr.field(i)) for i in range(len(tr.times))])
    assert np.abs(e / e[0] - 1).max() < 1e-8
    assert np.all(e / e[0] <= 1 + 1e-6)


def test_zero_field_flagged():
    g = Grid1D.symmetric(10.0, 0.5)
    tr = Trajectory(g, 1.0, np.linspace(0, 160, 321), np.zeros((321, g.n), complex), np.zeros((321, g.n), complex))
    meas = ray_decay(tr, Ray.timelike(0.0))
    assert meas.flagged


def test_ray_validation():
    with pytest.raises(ValueError):
        Ray.timelike(0.0, 1.0)


def test_synthetic_mode_input():
    g = Grid1D.symmetric(200.0, 0.25)
    times = np.arange(60.0, 160.01, 0.25)
    T, X = np.meshgrid(times, g.x, indexing="ij")
    tau = np.sqrt(np.maximum(T * T - X * X, 1e-12))
    u = tau**-0.5 * np.exp(1j * tau)
    tr = Trajectory(g, 1.0, times, u, 1j * u)
    ys = np.array([0.0, 0.1, 0.2])
    up = mode_extract(tr, 1, ys, [100.0, 140.0])
    um = mode_extract(tr, -1, ys, [100.0, 140.0])
    assert np.abs(up.values - 1).max() < 1e-3
    assert np.abs(um.values).max() < 1e-3
    with pytest.raises(ValueError):
        mode_extract(tr, 1, ys, [100.0], window=1.0)


@pytest.fixture(scope="module")
def gaussian_run():
    t_end = 160.0
    g = Grid1D.symmetric(domain_half_width(t_end, 12.0), 0.1)
    times = np.arange(0.0, t_end + 1e-9, 0.5)
    return spectral_trajectory(gauss(), None, times, g, 1.0)


def test_timelike_and_null_rays(gaussian_run):
    a = ray_decay(gaussian_run, Ray.timelike(0.0))
    b = ray_decay(gaussian_run, Ray.null(10.0))
    assert a.fitted_exponent == pytest.approx(0.5, abs=0.05)
    assert b.fitted_exponent >= 1.5
    assert b.fitted_exponent - a.fitted_exponent >= 1.0
    assert gaussian_run.field(len(gaussian_run.times) - 1).edge_ok()


def test_mode_profiles_stable_and_conjugate(gaussian_run):
    ys = np.array([0.0, 0.05, 0.1, 0.15])
    centers = [90.0, 120.0, 150.0]
    up = mode_extract(gaussian_run, 1, ys, centers)
    um = mode_extract(gaussian_run, -1, ys, centers)
    rel = np.abs(up.values - up.values[-1]) / np.abs(up.values[-1])
    assert rel.max() < 0.02
    assert np.allclose(um.values, np.conj(up.values), rtol=1e-6, atol=1e-9)


def test_phase_lock_on_axis(gaussian_run):
    tr = gaussian_run
    sel = (tr.times >= 80) & (tr.times <= 160)
    i0 = np.argmin(np.abs(tr.grid.x))
    g = np.exp(-1j * tr.times[sel]) * np.sqrt(tr.times[sel]) * tr.u[sel, i0]
    # the e^{+i m tau} part of e^{-imt} t^{1/2} u is a slowly varying complex number
    ph = np.angle(mode_extract(tr, 1, [0.0], [90.0, 150.0]).values[:, 0])
    drift = abs((ph[1] - ph[0] + math.pi) % (2 * math.pi) - math.pi) / (2 * math.pi)
    assert drift < 0.05
    assert np.abs(g).max() > 0


@pytest.mark.parametrize("fmt,suffix", [("csv", ".csv"), ("npz", ".npz")])
def test_snapshot_round_trip(tmp_path, fmt, suffix):
    g = Grid1D.symmetric(10.0, 0.5)
    tr = fd_solve(gauss(), None, None, 3.0, None, g, 1.0, every=0.5)
    path = tmp_path / f"snap{suffix}"
    write_snapshots(tr, path, every=2, fmt=fmt)
    back = read_snapshots(path)
    assert back.grid == tr.grid
    assert np.allclose(back.times, tr.times[::2])
    assert np.array_equal(back.u, tr.u[::2])
    assert np.array_equal(back.ut, tr.ut[::2])


def test_snapshot_rejects_unknown_format(tmp_path):
    g = Grid1D.symmetric(10.0, 0.5)
    tr = fd_solve(gauss(), None, None, 1.0, None, g, 1.0)
    with pytest.raises(ValueError):
        write_snapshots(tr, tmp_path / "x", fmt="parquet")
