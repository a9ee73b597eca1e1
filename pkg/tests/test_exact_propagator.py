import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from artifact.compactification import DomainError
from artifact.exact_propagator import (
    NullTailFrame,
    bessel_j1,
    dpm_smooth,
    envelope_at_extrema,
    null_tail_asymptotic,
    sc_frequency,
    tail_phase,
)


def _series_j1(x, terms=40):
    # alternating power series, summed with 50 significant digits
    with mp.workdps(50):
        x = mp.mpf(x)
        return float(mp.fsum((-1) ** k * (x / 2) ** (2 * k + 1) / (mp.factorial(k) * mp.factorial(k + 1)) for k in range(terms)))


def test_j1_small_and_zero():
    assert bessel_j1(0.0) == 0.0
    assert bessel_j1(1e-8) / 1e-8 == pytest.approx(0.5, rel=1e-12)


def test_j1_series_oracle_at_10():
    assert bessel_j1(10.0) == pytest.approx(_series_j1(10.0), rel=1e-12)


@given(st.floats(0.0, 200.0))
def test_j1_against_mpmath(x):
    ref = float(mp.besselj(1, x))
    assert bessel_j1(x) == pytest.approx(ref, rel=1e-10, abs=1e-14)


def test_support(rng):
    t = -rng.uniform(0, 50, 1000)
    r = rng.uniform(0, 50, 1000)
    assert np.all(dpm_smooth(t, r, 1.0, 1) == 0.0)
    assert dpm_smooth(1.0, 2.0, 1.0, 1) == 0.0
    assert dpm_smooth(-3.0, 1.0, 1.0, -1) != 0.0
    assert dpm_smooth(3.0, 1.0, 1.0, -1) == 0.0


def test_light_cone_limit():
    for m in (0.5, 1.0, 3.0):
        val = dpm_smooth(5.0 + 1e-12, 5.0, m, 1)
        assert val == pytest.approx(-(m * m) / (8 * math.pi), rel=1e-6)


def test_composition_example():
    assert dpm_smooth(10.0, 0.0, 1.0, 1) == pytest.approx(-(1 / (4 * math.pi)) * 0.1 * bessel_j1(10.0), rel=1e-14)


def test_sign_antisymmetry():
    assert dpm_smooth(-7.0, 2.0, 1.3, -1) == pytest.approx(-dpm_smooth(7.0, 2.0, 1.3, 1), rel=1e-14)


def test_tail_phase_example():
    assert tail_phase(4.0, 0.1, 1.0) == pytest.approx(20 - 0.75 * math.pi)


def _remainder(rho, v=4.0, m=1.0):
    t = 0.5 * (rho**-2 + v)
    r = 0.5 * (rho**-2 - v)
    return abs(dpm_smooth(t, r, m, 1) - null_tail_asymptotic(v, rho, m, 1)) / rho**1.5


def test_remainder_shrinks_relative_to_rho_three_halves():
    # compare maxima over a short window around each rho so that cosine zeros do not bias it
    def peak(rho):
        return max(_remainder(r) for r in np.linspace(0.97 * rho, 1.03 * rho, 41))

    vals = [peak(r) for r in (0.1, 0.05, 0.025)]
    assert vals[0] > vals[1] > vals[2]


@pytest.mark.parametrize("m", [1.0, 2.0])
def test_envelope_coefficient(m):
    rho, ratio = envelope_at_extrema(4.0, 0.05, m=m)
    assert np.all(rho <= 0.05)
    # large-argument J1 asymptotics: amplitude sqrt(m / (8 pi^3))
    assert np.allclose(ratio, math.sqrt(m / (8 * math.pi**3)), rtol=0.01)


def test_zero_crossings_follow_phase():
    v, m = 4.0, 1.0
    rho = np.linspace(0.05, 0.01, 20001)
    t = 0.5 * (rho**-2 + v)
    r = 0.5 * (rho**-2 - v)
    d = dpm_smooth(t, r, m, 1)
    idx = np.nonzero(np.sign(d[1:]) != np.sign(d[:-1]))[0]
    assert len(idx) > 10
    ph = tail_phase(v, rho[idx], m)
    # distance of the crossing phase to the nearest pi/2 + k pi, in periods
    off = np.abs(((ph - math.pi / 2) / math.pi + 0.5) % 1.0 - 0.5) / 2
    assert off.max() < 0.02


def test_kg_residual_away_from_cone(rng):
    m, h = 1.0, 1e-3
    for _ in range(50):
        r = rng.uniform(0.5, 5.0)
        t = math.sqrt(r * r + rng.uniform(1.5, 20.0))
        f = lambda tt, rr: dpm_smooth(tt, rr, m, 1)
        utt = (f(t + h, r) - 2 * f(t, r) + f(t - h, r)) / h**2
        urr = (f(t, r + h) - 2 * f(t, r) + f(t, r - h)) / h**2
        ur = (f(t, r + h) - f(t, r - h)) / (2 * h)
        res = utt - urr - 2 / r * ur + m * m * f(t, r)
        assert abs(res) < 1e-5


def test_sc_frequency():
    assert sc_frequency(1.0) == (0.5, -1.0)
    assert sc_frequency(0.25) == (1.0, -0.5)
    z, x = sc_frequency(1e-10)
    assert z > 1e4 and abs(x) < 1e-4
    for bad in (0.0, -1.0):
        with pytest.raises(DomainError):
            sc_frequency(bad)
    fr = NullTailFrame.from_tr(10.0, 6.0)
    assert (fr.v, fr.rho, fr.zeta, fr.xi) == pytest.approx((4.0, 0.25, 0.25, -2.0))


def test_sign_validated():
    with pytest.raises(ValueError):
        dpm_smooth(1.0, 0.5, 1.0, 0)
