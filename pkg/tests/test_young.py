import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from osclab.errors import MalformedYoungError, OverflowRangeError
from osclab.young import (YoungFunction, check_submultiplicative, from_name,
                          growth_bounds, plog, plog_alt, power,
                          young_inverse)


def scan_inverse(phi, y, lo=0.0, hi=10.0, n=2_000_001):
    """Fine-grid scan followed by linear interpolation."""
    t = np.linspace(lo, hi, n)
    v = phi(t)
    i = np.searchsorted(v, y)
    return t[i - 1] + (y - v[i - 1]) * (t[i] - t[i - 1]) / (v[i] - v[i - 1])


def test_inverse_examples():
    assert young_inverse(power(2), 4.0) == pytest.approx(2.0, rel=1e-15)
    for phi in (power(3), plog(2, 1), plog_alt(2, 1)):
        assert young_inverse(phi, 1.0) == pytest.approx(1.0, abs=1e-12)
        assert young_inverse(phi, 0.0) == 0.0
    phi = plog(1, 1)
    t = young_inverse(phi, 2 * math.e)
    assert t * (1 + math.log(t)) == pytest.approx(2 * math.e, rel=1e-12)
    assert t == pytest.approx(scan_inverse(phi, 2 * math.e), abs=1e-8)


def test_inverse_overflow():
    with pytest.raises(OverflowRangeError):
        young_inverse(plog(1, 0.5), 1e14)


@pytest.mark.parametrize('phi', [power(1.5), plog(2, 1), plog(1, 3),
                                 plog_alt(2, 1), plog_alt(1, 2)])
def test_inverse_roundtrip(phi):
    for t in np.logspace(-6, 9, 61):
        y = float(phi(t))
        if y > 1e12 * 1e6:
            continue
        back = young_inverse(phi, y)
        assert back == pytest.approx(t, rel=1e-8)
        assert abs(float(phi(back)) - y) <= 1e-10 * max(1.0, y)


def test_growth_bounds_power_exact():
    lo, hi = growth_bounds(power(3), t_max=1e9)
    assert lo == pytest.approx(3, rel=1e-14)
    assert hi == pytest.approx(3, rel=1e-14)


def test_growth_bounds_plog_analytic_profile():
    # t phi'/phi = p + alpha / (1 + log t) on t > 1
    p, a, tmax = 2.0, 1.0, 1e9
    lo, hi = growth_bounds(plog(p, a), t_max=tmax)
    assert hi == pytest.approx(p + a, abs=1e-6)
    assert lo == pytest.approx(p + a / (1 + math.log(tmax)), rel=1e-9)


def test_growth_bounds_alt_dense_oracle():
    phi = plog_alt(2, 1)
    lo, hi = growth_bounds(phi, t_max=1e9)
    t = 1 + np.geomspace(1e-12, 1e9, 2_000_000)
    lg = np.log(math.e + t)
    ratio = 2 + t / ((math.e + t) * lg)
    assert lo == pytest.approx(ratio.min(), abs=1e-3)
    assert hi == pytest.approx(ratio.max(), abs=1e-3)
    assert np.isfinite([lo, hi]).all()


def test_submultiplicativity():
    holds, worst = check_submultiplicative(power(2.5))
    assert holds and worst == pytest.approx(1.0, rel=1e-12)
    holds, worst = check_submultiplicative(plog(2, 3))
    assert holds and worst <= 1.0 + 1e-12
    phi = plog_alt(2, 1)
    holds, worst = check_submultiplicative(phi)
    assert holds and 1.0 < worst <= phi.submult_c


def test_constructor_rejects_bad_candidates():
    with pytest.raises(MalformedYoungError):
        YoungFunction('shifted', lambda t: t ** 2 + 1e-9)
    with pytest.raises(MalformedYoungError):
        YoungFunction('concave', lambda t: np.sqrt(t))
    with pytest.raises(MalformedYoungError):
        YoungFunction('alt-c1', plog_alt(2, 2).func)


@pytest.mark.parametrize('phi', [power(2.5), plog(2, 1), plog(1.2, 4),
                                 plog_alt(3, 2)])
def test_derivative_matches_finite_difference(phi):
    t = np.concatenate([np.logspace(-3, 0, 20)[:-1] * 0.999,
                        np.logspace(0.01, 6, 30)])
    h = 1e-6 * t
    fd = (phi(t + h) - phi(t - h)) / (2 * h)
    assert np.allclose(phi.derivative(t), fd, rtol=1e-6)


def test_from_name():
    assert from_name('power:2')(3.0) == 9.0
    assert from_name('plog:2:1').analytic_bounds == (2.0, 3.0)
    assert from_name('plog-alt:2:1').submult_c == pytest.approx(
        math.log(math.e + 1))
    with pytest.raises(ValueError):
        from_name('nope:1')


@given(st.floats(1, 20), st.floats(0, 6), st.floats(1e-3, 1e3),
       st.floats(1e-3, 1e3))
def test_plog_submultiplicative_property(p, a, s, t):
    phi = plog(p, a)
    assert float(phi(s * t)) <= float(phi(s) * phi(t)) * (1 + 1e-12)
