import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from osclab.errors import FunctionalError, ParameterError
from osclab.functionals import (CubeFunctional, ainfty_char_profile,
                                check_wr_properties, embedding_constant,
                                fujii_wilson, local_maximal, random_antichain,
                                sd_check, wr_value)
from osclab.grid import CellFunction, CellMeasure, DyadicCube, Grid
from osclab.norms import ExponentFunction, LocalNormSpec
from osclab.testfuncs import indicator, power_weight, random_step
from osclab.young import plog


def test_wr_example():
    g = Grid(1, 1)
    mu = CellMeasure.lebesgue(g)
    w = CellFunction(g, [1.0, 3.0])
    assert wr_value(w, mu, g.root, 2) == pytest.approx(math.sqrt(5),
                                                       rel=1e-14)
    y = CubeFunctional.wr(w, mu, 2)
    assert y.value(g.root) == pytest.approx(math.sqrt(5), rel=1e-14)
    assert y.value(DyadicCube(1, (1,))) == pytest.approx(1.5, rel=1e-14)
    with pytest.raises(ParameterError):
        CubeFunctional.wr(w, mu, 1.0)
    with pytest.raises(ParameterError):
        CubeFunctional.wr(CellFunction(g, [-1.0, 1.0]), mu, 2)


def test_functional_constructors():
    g = Grid(1, 2)
    mu = CellMeasure.lebesgue(g)
    assert CubeFunctional.of_measure(mu).value(g.root) == pytest.approx(1.0)
    mp = CubeFunctional.measure_power(mu, 0.5)
    assert mp.value(DyadicCube(2, (3,))) == pytest.approx(0.5)
    w = CellFunction(g, [1.0, 2.0, 3.0, 4.0])
    wm = CubeFunctional.weight_mass(w, mu)
    assert wm.value(DyadicCube(1, (1,))) == pytest.approx(1.75)
    table = {q: 1.0 for k in range(3) for q in g.cubes(k)}
    assert CubeFunctional.table(mu, table).value(g.root) == 1.0
    del table[g.root]
    with pytest.raises(FunctionalError):
        CubeFunctional.table(mu, table)
    with pytest.raises(FunctionalError):
        CubeFunctional.weight_mass(CellFunction(g, [0, 0, 1, 1]), mu)
    loose = CubeFunctional.weight_mass(CellFunction(g, [0, 0, 1, 1]), mu,
                                       strict=False)
    assert loose.value(DyadicCube(1, (0,))) == 0.0


@given(st.integers(0, 2 ** 31), st.floats(1.1, 6.0))
def test_wr_properties_hold(seed, r):
    rng = np.random.default_rng(seed)
    g = Grid(1, 6)
    mu = CellMeasure(g, rng.random(g.n_cells) + 0.01)
    w = CellFunction(g, rng.random(g.n_cells) ** 3)
    slack = check_wr_properties(w, mu, r, trials=30, seed=seed)
    assert set(slack) == {'jensen', 'ratio', 'superadditive', 'monotone',
                          'ainfty'}
    assert min(slack.values()) >= -1e-12


def test_local_maximal_example():
    g = Grid(1, 2)
    mu = CellMeasure.lebesgue(g)
    m = local_maximal(CellFunction(g, [4.0, 0, 0, 0]), g.root, mu)
    assert np.allclose(m.values, [4, 2, 1, 1])
    m = local_maximal(CellFunction(g, [4.0, 0, 0, 0]), DyadicCube(1, (1,)),
                      mu)
    assert np.allclose(m.values, 0)


def brute_maximal(wv, mv, grid, cube):
    out = np.zeros(grid.n_cells)
    for k in range(cube.level, grid.depth + 1):
        for q in grid.cubes(k):
            mask = grid.cell_mask(q)
            if not np.all(grid.cell_mask(cube)[mask]):
                continue
            if mv[mask].sum() > 0:
                avg = np.sum(wv[mask] * mv[mask]) / mv[mask].sum()
                out[mask] = np.maximum(out[mask], avg)
    return out


@given(st.integers(0, 2 ** 31))
def test_fujii_wilson_brute_force(seed):
    rng = np.random.default_rng(seed)
    g = Grid(1, 5)
    mu = CellMeasure(g, rng.random(g.n_cells) + 0.01)
    w = CellFunction(g, rng.random(g.n_cells) ** 4)
    y = CubeFunctional.weight_mass(w, mu)
    best = 0.0
    for k in range(g.depth):
        for q in g.cubes(k):
            mx = brute_maximal(w.values, mu.masses, g, q)
            local = local_maximal(w, q, mu).values
            assert np.allclose(local, mx, rtol=1e-12)
            best = max(best, np.sum(mx * mu.masses) / y.value(q))
    got, _ = fujii_wilson(w, y, mu)
    assert got == pytest.approx(best, rel=1e-12)
    assert got >= 1 - 1e-12


def test_fujii_wilson_constant_weight_is_one():
    g = Grid(2, 4)
    mu = CellMeasure.lebesgue(g)
    w = CellFunction.constant(g, 2.0)
    val, _ = fujii_wilson(w, CubeFunctional.weight_mass(w, mu), mu)
    assert val == pytest.approx(1.0, rel=1e-12)


def test_fujii_wilson_grows_with_power_weight_exponent():
    g = Grid(1, 10)
    mu = CellMeasure.lebesgue(g)
    vals = []
    for delta in (0.0, -0.3, -0.6, -0.9):
        w = power_weight(g, delta)
        vals.append(fujii_wilson(w, CubeFunctional.weight_mass(w, mu), mu)[0])
    assert vals[0] == pytest.approx(1.0)
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_fujii_wilson_zero_weight_cubes():
    g = Grid(1, 4)
    mu = CellMeasure.lebesgue(g)
    w = indicator(g, 0.5)
    y = CubeFunctional.weight_mass(w, mu, strict=False)
    val, cube = fujii_wilson(w, y, mu)
    # root: M(w) is 1 on the left half and 1/2 on the right
    assert val == pytest.approx(1.5)
    assert cube == g.root
    with pytest.raises(FunctionalError):
        CubeFunctional.table(mu, [np.zeros(1 << k) for k in range(5)])
    bad = CubeFunctional('table', mu, [np.zeros(1 << k) for k in range(5)],
                         strict=False)
    with pytest.raises(FunctionalError):
        fujii_wilson(w, bad, mu)


@given(st.integers(0, 2 ** 31), st.integers(1, 2))
def test_random_antichain_is_disjoint(seed, dim):
    g = Grid(dim, 7 if dim == 1 else 4)
    rng = np.random.default_rng(seed)
    for _ in range(5):
        chain = random_antichain(g, rng)
        fam = chain.family(g)  # validates disjointness and containment
        assert len(chain) == len(list(fam)) > 0
        ind = chain.indicator(g)
        assert set(np.unique(ind.values)) <= {0.0, 1.0}
        mu = CellMeasure.lebesgue(g)
        assert chain.mass(mu) == pytest.approx(
            np.sum(ind.values * mu.masses))


def test_random_antichain_fractions_spread():
    g = Grid(1, 12)
    mu = CellMeasure.lebesgue(g)
    rng = np.random.default_rng(0)
    fr = [c.mass(mu) / mu.mass(c.root)
          for c in (random_antichain(g, rng) for _ in range(300))]
    assert min(fr) < 0.05 and max(fr) > 0.9
    assert 0.2 < np.median(fr) < 0.8


def test_sd_examples():
    g = Grid(1, 8)
    mu = CellMeasure.lebesgue(g)
    one = CellFunction.constant(g, 1.0)
    a = CubeFunctional.measure_power(mu, 0.25)
    holds, est = sd_check(a, one, mu, p=2, s=3, trials=100, bound=1.0)
    assert holds and est <= 1.0
    # a = 1 gives frac**(1/p - 1/s), which blows up as frac -> 0 for s < p
    flat = CubeFunctional.measure_power(mu, 0.0)
    holds, est = sd_check(flat, one, mu, p=3, s=1.5, trials=200, bound=1.0)
    assert not holds and est > 1.0
    with pytest.raises(ParameterError):
        sd_check(a, one, mu, p=2, s=1.0)


def test_profile_identity_for_lp():
    g = Grid(1, 8)
    mu = CellMeasure.lebesgue(g)
    prof = ainfty_char_profile(CubeFunctional.of_measure(mu),
                               LocalNormSpec.lp(mu, 3), trials=40, seed=1)
    for frac, val in prof.samples:
        assert val == pytest.approx(frac ** (1 / 3), rel=1e-9)
    assert prof.fitted_C == pytest.approx(1.0, rel=1e-9)
    assert prof.label == 'characteristic-restricted'
    assert prof.inverse_name == 'power:3'


def test_profile_orlicz_and_variable_labels():
    g = Grid(1, 6)
    mu = CellMeasure.lebesgue(g)
    y = CubeFunctional.of_measure(mu)
    prof = ainfty_char_profile(y, LocalNormSpec.orlicz(mu, plog(2, 1)),
                               trials=20)
    assert prof.label == 'exact'
    assert prof.fitted_C == pytest.approx(1.0, rel=1e-6)
    pf = ExponentFunction(g, np.linspace(1.5, 3, g.n_cells))
    prof = ainfty_char_profile(y, LocalNormSpec.variable(mu, pf), trials=20)
    assert prof.label == 'exact'
    for frac, val in prof.samples:
        assert val <= prof.bound(frac) * (1 + 1e-12)


def test_embedding_constant_lebesgue_is_one():
    g = Grid(1, 8)
    mu = CellMeasure.lebesgue(g)
    one = CellFunction.constant(g, 1.0)
    fs = [random_step(g, s) for s in range(5)]
    c = embedding_constant(one, CubeFunctional.of_measure(mu), mu, fs)
    assert c == pytest.approx(1.0, rel=1e-12)
    with pytest.warns(UserWarning):
        embedding_constant(one, CubeFunctional.of_measure(mu), mu,
                           [CellFunction.constant(g, 2.0)])


@given(st.integers(0, 2 ** 31))
def test_embedding_constant_brute_force(seed):
    rng = np.random.default_rng(seed)
    g = Grid(1, 4)
    mu = CellMeasure.lebesgue(g)
    w = CellFunction(g, rng.random(g.n_cells) + 0.1)
    y = CubeFunctional.weight_mass(w, mu)
    f = CellFunction(g, rng.standard_normal(g.n_cells))
    bmo = 0.0
    best = 0.0
    for k in range(g.depth):
        for q in g.cubes(k):
            m = g.cell_mask(q)
            avg = np.sum(f.values[m] * mu.masses[m]) / mu.masses[m].sum()
            dev = np.abs(f.values[m] - avg)
            bmo = max(bmo, np.sum(dev * mu.masses[m]) / mu.masses[m].sum())
            best = max(best, np.sum(dev * w.values[m] * mu.masses[m])
                       / y.value(q))
    got = embedding_constant(w, y, mu, [f])
    assert got == pytest.approx(best / bmo, rel=1e-12)
