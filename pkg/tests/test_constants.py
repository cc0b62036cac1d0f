import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import gamma

from osclab.constants import (Bijection, JNParams, alt_young_constant,
                              chebyshev_chain, laplace_bound,
                              laplace_transform, orlicz_constant,
                              plog_closed_form_cap, theorem_constant,
                              variable_c_n, variable_jn_constant)
from osclab.errors import InfeasibleError, ParameterError
from osclab.grid import CellFunction, CellMeasure, Grid
from osclab.norms import ExponentFunction
from osclab.testfuncs import random_step
from osclab.young import growth_bounds, plog, plog_alt, power


def dense_theorem_oracle(inv, ck, log_c, u_max=40.0, n=400001):
    u = np.linspace(0.0, u_max, n)
    with np.errstate(divide='ignore', invalid='ignore'):
        d = 1.0 - ck * np.array([inv(math.exp(-x)) for x in u])
        obj = np.where(d > 0, log_c + u - np.log(np.where(d > 0, d, 1)),
                       np.inf)
    return math.exp(obj.min())


def test_theorem_identity_example():
    c, L = theorem_constant(Bijection.identity(), 1, 1, 1, 0)
    assert c == pytest.approx(4.0, rel=1e-12)
    assert L == pytest.approx(2.0, rel=1e-6)
    c1, _ = theorem_constant(Bijection.identity(), 1, 1, 1, 1)
    assert c1 == pytest.approx(8.0, rel=1e-12)


@pytest.mark.parametrize('s,ck,n_mu', [(1.0, 1.0, 1.0), (2.0, 1.5, 1.0),
                                       (0.5, 2.0, 2.0), (4.0, 1.0, 0.5)])
def test_theorem_dense_oracle(s, ck, n_mu):
    psi = Bijection.power(s)
    c, L = theorem_constant(psi, ck, 1.0, 1.0, n_mu)
    want = dense_theorem_oracle(psi.inverse, ck, n_mu * math.log(2))
    assert c <= want * (1 + 1e-9)
    assert c == pytest.approx(want, rel=1e-6)
    assert c == pytest.approx(
        2 ** n_mu * L / (1 - ck * psi.inverse(1 / L)), rel=1e-12)


def test_theorem_power_asymptotics():
    ratios = [theorem_constant(Bijection.power(p), 1, 1, 1, 0)[0] / p
              for p in (10.0, 100.0, 1000.0)]
    assert all(b < a for a, b in zip(ratios, ratios[1:]))
    assert abs(ratios[-1] - math.e) < 0.01 * math.e


def test_theorem_orlicz_bijection():
    phi = plog(2, 1)
    c, L = theorem_constant(Bijection.orlicz(phi), 1, 1, 1, 1)
    psi = Bijection.orlicz(phi)
    want = dense_theorem_oracle(psi.inverse, 1.0, math.log(2), u_max=20,
                                n=4001)
    assert c <= want * (1 + 1e-9)
    assert c == pytest.approx(want, rel=1e-3)


def test_theorem_rejects_bad_input():
    with pytest.raises(ParameterError):
        theorem_constant(Bijection.identity(), 0.5, 1.0)
    with pytest.raises(ParameterError):
        theorem_constant(Bijection.identity(), 1, 1, c_mu=0.5)
    zero = Bijection('flat', lambda t: t ** 50, lambda t: t ** 0.02,
                     check=False)
    with pytest.raises(InfeasibleError):
        theorem_constant(zero, 1e30, 1.0)


def test_bijection_validation():
    with pytest.raises(ParameterError):
        Bijection('bad', lambda t: t, lambda t: t ** 2)
    with pytest.raises(ParameterError):
        Bijection.power(0)
    psi = Bijection.orlicz(power(3))
    assert psi.inverse(0.125) == pytest.approx(0.5, rel=1e-10)


@pytest.mark.parametrize('p', [1.0, 1.5, 2.0, 3.7, 6.0])
@pytest.mark.parametrize('s', [0.3, 1.0, 2.5])
def test_laplace_gamma_oracle(p, s):
    assert laplace_transform(power(p), s) == pytest.approx(
        gamma(p + 1) / s ** p, rel=1e-10)


@pytest.mark.parametrize('p', [1.0, 2.0, 3.5, 8.0])
def test_laplace_bound_closed_form(p):
    jn = JNParams(2.0, 3.0)
    want = jn.c2 * (jn.c1 * gamma(p + 1)) ** (1 / p)
    got = laplace_bound(power(p), jn)
    assert got == pytest.approx(want, rel=1e-10)
    assert 0.3 * jn.c2 <= got / p <= 1.2 * jn.c2 * gamma(2) * 2


def test_laplace_bound_plog_band():
    jn = JNParams()
    for p, alpha in [(2, 0.5), (3, 1), (5, 2)]:
        ratio = laplace_bound(plog(p, alpha), jn) / (p + alpha)
        assert 0.3 * jn.c2 <= ratio <= 1.2 * jn.c2
    with pytest.raises(ParameterError):
        laplace_transform(power(2), 0)


def test_laplace_decreasing():
    phi = plog(2, 1)
    vals = [laplace_transform(phi, s) for s in (0.5, 1, 2, 4, 8)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_orlicz_constant_examples():
    assert orlicz_constant(plog(2, 0), 1.0, 1.0, 1.0) == pytest.approx(13.5)
    for p in (1.0, 2.0, 4.0):
        for alpha in (0.0, 0.5, 2.0, 5.0):
            phi = plog(p, alpha)
            assert orlicz_constant(phi) <= plog_closed_form_cap(p, alpha) \
                * (1 + 1e-12)
    with pytest.raises(ParameterError):
        orlicz_constant(plog_alt(2, 1))


def test_alt_young_constant_formula_and_comparison():
    lg = math.log(math.e + 1)
    assert alt_young_constant(1, 0) == pytest.approx(2 * math.e * 2)
    want = (2 * math.e * lg ** 2 * math.log(math.e + 2 * lg) * 5)
    assert alt_young_constant(3, 1) == pytest.approx(want, rel=1e-14)
    # the closed form sits above the constant built from sampled bounds
    for p, alpha in [(1, 0), (2, 1), (3, 2)]:
        phi = plog_alt(p, alpha)
        measured = orlicz_constant(phi, bounds=growth_bounds(phi))
        assert alt_young_constant(p, alpha) > measured


def test_variable_constants():
    assert variable_jn_constant(1.0, 1.0) == pytest.approx(math.log(2) / 2)
    with pytest.raises(ParameterError):
        variable_jn_constant(0.0, 2.0)
    cs = [variable_c_n(p, 1) for p in (1.0, 2.0, 4.0, 8.0)]
    assert all(c > 0 for c in cs)
    for p, c in zip((1.0, 2.0, 4.0, 8.0), cs):
        direct, _ = theorem_constant(Bijection.power(p), 1, 1, 1, 1)
        assert c * p == pytest.approx(direct, rel=1e-12)
    # C(q)/q decreases in q
    assert all(b <= a * (1 + 1e-12) for a, b in zip(cs, cs[1:]))


def test_chebyshev_constant_exponent_is_markov():
    g = Grid(1, 6)
    mu = CellMeasure.lebesgue(g)
    f = random_step(g, 3)
    e = ExponentFunction.constant(g, 1.0)
    avg = np.sum(f.values * mu.masses)
    dev = np.abs(f.values - avg)
    for t in (0.1, 0.5, 1.0):
        lhs, rhs = chebyshev_chain(f, e, g.root, t, 1.0)
        assert lhs == pytest.approx(np.sum(mu.masses[dev >= t]), rel=1e-9)
        assert rhs == pytest.approx(np.sum(dev * mu.masses) / t, rel=1e-9)
        assert lhs <= rhs * (1 + 1e-9)


@settings(max_examples=20)
@given(st.integers(0, 2 ** 31), st.floats(0.05, 3.0), st.floats(1.0, 3.0))
def test_chebyshev_chain_holds(seed, t, r):
    rng = np.random.default_rng(seed)
    g = Grid(1, 5)
    f = CellFunction(g, rng.standard_normal(g.n_cells))
    e = ExponentFunction(g, rng.uniform(1, 3, g.n_cells))
    lhs, rhs = chebyshev_chain(f, e, g.root, t, r)
    assert lhs <= rhs * (1 + 1e-8)
    with pytest.raises(ParameterError):
        chebyshev_chain(f, e, g.root, 0.0, r)
