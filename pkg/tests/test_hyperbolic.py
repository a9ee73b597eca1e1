import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from artifact.compactification import DomainError
from artifact.hyperbolic import (
    BallGrid,
    HyperbolicPoint,
    asymptotic_integrate,
    box_esc,
    conjugated_apply,
    expansion_recursion,
    iota,
    iota_arrays,
    iota_inv,
    iota_inv_arrays,
    kg_apply,
    recursion_residual,
)


def test_iota_examples():
    p = iota(1.0, [0.0])
    assert p.tau == 1.0 and p.y[0] == 0.0
    p = iota(5.0, [3.0])
    assert (p.tau, p.y[0]) == pytest.approx((4.0, 1 / 3), abs=1e-15)
    p = iota(-5.0, [3.0])
    assert (p.tau, p.y[0]) == pytest.approx((-4.0, -1 / 3), abs=1e-15)
    with pytest.raises(DomainError):
        iota(1.0, [1.0])


def test_iota_inv_examples():
    t, x = iota_inv(HyperbolicPoint(4.0, [1 / 3]))
    assert (t, x[0]) == pytest.approx((5.0, 3.0), abs=1e-14)
    t, x = iota_inv(HyperbolicPoint(1.0, [0.0]))
    assert (t, x[0]) == (1.0, 0.0)
    with pytest.raises(ValueError):
        HyperbolicPoint(1.0, [1.0])
    with pytest.raises(ValueError):
        HyperbolicPoint(0.0, [0.2])


def test_round_trips(rng):
    n = 10_000
    tau = rng.choice([-1, 1], n) * 10 ** rng.uniform(-2, 3, n)
    y = rng.uniform(-0.9, 0.9, n)
    t, x = iota_inv_arrays(tau, y)
    tau2, y2 = iota_arrays(t, x)
    assert np.allclose(tau2, tau, rtol=1e-12, atol=0)
    assert np.allclose(y2, y, rtol=0, atol=1e-12)
    t = rng.choice([-1, 1], n) * 10 ** rng.uniform(-1, 3, n)
    x = t * rng.uniform(-0.9, 0.9, n)
    t2, x2 = iota_inv_arrays(*iota_arrays(t, x))
    assert np.allclose(t2, t, rtol=1e-12)
    assert np.allclose(x2, x, rtol=1e-11, atol=1e-12 * np.abs(t))


@given(st.floats(0.5, 50), st.floats(-0.9, 0.9), st.floats(-0.9, 0.9))
def test_round_trip_vector(t, a, b):
    x = np.array([a, b]) * t / math.sqrt(2)
    p = iota(t, x)
    t2, x2 = iota_inv(p)
    assert t2 == pytest.approx(t, rel=1e-12)
    assert np.allclose(x2, x, atol=1e-12 * t)


def test_pullback_of_d_tau(rng):
    def f(t, x):
        return math.sin(0.3 * t) * math.exp(-0.1 * x * x) + 0.01 * t * x

    h = 1e-4
    for _ in range(50):
        t = rng.uniform(2, 10)
        x = t * rng.uniform(-0.8, 0.8)
        p = iota(t, [x])
        g = lambda tau: f(*[float(np.ravel(v)[0]) for v in iota_inv(HyperbolicPoint(tau, p.y))])
        lhs = (g(p.tau + h) - g(p.tau - h)) / (2 * h)
        ft = (f(t + h, x) - f(t - h, x)) / (2 * h)
        fx = (f(t, x + h) - f(t, x - h)) / (2 * h)
        rhs = (t * ft + x * fx) / math.sqrt(t * t - x * x)
        assert lhs == pytest.approx(rhs, abs=1e-8)


def test_box_constants_and_powers():
    tau = np.linspace(1.0, 5.0, 401)
    for d in (1, 2, 3):
        u = np.ones((tau.size, 1))
        assert np.abs(box_esc(u, tau, d=d)).max() < 1e-10
        a = 1.5
        u = tau[:, None] ** -a
        ref = a * (a + 1 - d) * tau[:, None] ** (-a - 2)
        assert np.abs(box_esc(u, tau, d=d) - ref)[3:-3].max() < 1e-6


def test_box_equivalence_through_iota():
    # u is a smooth bump inside the cone; compare dt^2 - dx^2 with the hyperbolic form
    def u(t, x):
        return np.exp(-((t - 6.0) ** 2) / 4 - x * x / 2)

    def box_cart(t, x):
        e = u(t, x)
        utt = ((t - 6) ** 2 / 4 - 0.5) * e
        uxx = (x * x - 1) * e
        return utt - uxx

    grid = BallGrid(n=601, eta_max=3.0)
    tau = np.linspace(3.0, 9.0, 1201)
    T, E = np.meshgrid(tau, grid.eta, indexing="ij")
    t, x = T * np.cosh(E), T * np.sinh(E)
    ours = box_esc(u(t, x), tau, grid, d=1)
    ref = box_cart(t, x)
    inner = (slice(10, -10), slice(10, -10))
    assert np.abs(ours - ref)[inner].max() < 1e-5


def test_leading_order_annihilation():
    m = 1.0
    tau = np.linspace(5.0, 200.0, 40001)
    u = (np.exp(1j * m * tau) * tau**-0.5)[:, None]
    res = np.abs(kg_apply(u, tau, m, d=1)[:, 0])[10:-10]
    tt = tau[10:-10]
    assert np.allclose(res, 0.25 * tt**-2.5, rtol=1e-4)
    slope = np.polyfit(np.log(tt), np.log(res), 1)[0]
    assert slope == pytest.approx(-2.5, abs=1e-3)


def test_conjugated_constant_and_inverse_power():
    tau = np.linspace(1.0, 50.0, 4901)
    grid = BallGrid(n=65, eta_max=4.0)
    out = conjugated_apply(np.ones((tau.size, 1)), tau, 1.0, 1, d=1)
    assert np.abs(out[:, 0] * tau**2).max() < 1.0
    assert np.allclose(out[:, 0], 0.25 / tau**2, atol=1e-10)
    for sign in (1, -1):
        out = conjugated_apply((1 / tau)[:, None], tau, 1.0, sign, d=1)
        ref = 2 / tau**3 + 2j * sign * 1.0 * (-1 / tau**2) + 0.25 / tau**3
        assert np.abs(out[:, 0] - ref)[3:-3].max() < 1e-6
    assert grid.n == 65


@pytest.mark.parametrize("sign", [1, -1])
def test_conjugation_identity(sign, rng):
    m = 1.3
    grid = BallGrid(n=97, eta_max=5.0)
    tau = np.linspace(1.5, 51.0, 19801)
    T = tau[:, None]
    c = rng.normal(size=3)
    prof = np.exp(-grid.eta**2 / 4)
    u0 = (c[0] + c[1] / T + c[2] * np.sin(0.2 * T) / T) * prof[None, :]
    pot = lambda y: 0.3 / (1 + y * y)
    lhs = conjugated_apply(u0, tau, m, sign, grid, d=1, potential=pot)
    phase = np.exp(1j * sign * m * T) * T**-0.5
    rhs = T**0.5 * np.exp(-1j * sign * m * T) * kg_apply(phase * u0, tau, m, grid, d=1, potential=pot)
    sel = (tau >= 2) & (tau <= 50)
    scale = np.abs(lhs[sel]).max()
    assert np.abs(lhs - rhs)[sel].max() / scale < 1e-6


def test_recursion_zero_datum():
    s = expansion_recursion(np.zeros(BallGrid().n), 3, 1.0)
    assert all(np.all(w == 0) for w in s.coeffs)


def test_recursion_rejects_bad_input():
    with pytest.raises(ValueError):
        expansion_recursion(np.zeros(5), 0, 1.0)
    with pytest.raises(ValueError):
        expansion_recursion(np.zeros(5), 2, 0.0)


def test_recursion_residual_slope():
    grid = BallGrid(201, 6.0)
    s = expansion_recursion(lambda y: np.exp(-8 * np.arctanh(y) ** 2), 3, 1.0, -1, grid=grid)
    tau = np.arange(9.0, 101.0, 0.01)
    r, tt = recursion_residual(s, tau)
    sel = (tt >= 10) & (tt <= 100)
    slope = -np.polyfit(np.log(tt[sel]), np.log(r[sel]), 1)[0]
    assert slope >= 3 + 1 - 0.1


def _ahat(k):
    return np.exp(-k * k / 2)


def test_recursion_matches_fourier_oracle():
    # u(t, x) = int e^{i(kx - omega t)} ahat(k) dk; along x = tau sinh eta, t = tau cosh eta
    # stationary phase gives u ~ e^{-i m tau} tau^{-1/2} sum_k w_k tau^{-k}
    m = 1.0
    grid = BallGrid(201, 6.0)
    eta = grid.eta
    w0 = _ahat(m * np.sinh(eta)) * np.sqrt(2 * np.pi * m) * np.cosh(eta) * np.exp(-1j * np.pi / 4)
    s = expansion_recursion(w0, 3, m, -1, grid=grid)
    k = np.linspace(-14, 14, 400001)
    dk = k[1] - k[0]
    om = np.sqrt(m * m + k * k)
    taus = np.linspace(60, 400, 30)
    nodes = [60, 100, 130]
    G = []
    for T in taus:
        x, t = T * np.sinh(eta[nodes]), T * np.cosh(eta[nodes])
        u = np.array([np.sum(np.exp(1j * (k * xx - om * tt)) * _ahat(k)) * dk for xx, tt in zip(x, t)])
        G.append(u * np.exp(1j * m * T) * np.sqrt(T))
    A = np.vander(1 / taus, 6, increasing=True)
    c = np.linalg.lstsq(A, np.array(G), rcond=None)[0]
    for kk in range(3):
        scale = np.abs(s.coeffs[kk]).max()
        assert np.abs(c[kk] - s.coeffs[kk][nodes]).max() / scale < 0.01


def test_asymptotic_integrate_examples():
    tau = np.linspace(1.0, 101.0, 20001)
    out = asymptotic_integrate(np.zeros_like(tau), tau, 0.7 + 0.1j, sign=1)
    assert np.all(out.values[:, 0] == 0.7 + 0.1j)
    for sign in (1, -1):
        out = asymptotic_integrate(tau**-2, tau, 2.0, sign=sign)
        ref = 2.0 + sign * (1 - 1 / tau) / 2j
        assert np.abs(out.values[:, 0] - ref).max() < 1e-6
    tau = np.linspace(1.0, 1001.0, 40001)
    out = asymptotic_integrate(tau**-1.5, tau, 0.0)
    limit = 2.0 / 2j
    gap = np.abs(out.values[:, 0] - limit)
    sel = tau > 50
    slope = np.polyfit(np.log(tau[sel]), np.log(gap[sel]), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.02)
    assert out.warning is None


def test_asymptotic_integrate_warns_on_slow_tail():
    tau = np.linspace(1.0, 101.0, 2001)
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        out = asymptotic_integrate(tau**-0.5, tau, 0.0)
    assert out.warning is not None
    assert any(issubclass(w.category, RuntimeWarning) for w in rec)
    with pytest.raises(ValueError):
        asymptotic_integrate(tau, tau + 1, 0.0)
