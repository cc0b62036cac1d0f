import numpy as np
import pytest
from hypothesis import given, strategies as st

from osclab.errors import (DegenerateMeasureError, ParameterError,
                           StoppingPreconditionError)
from osclab.grid import (CellFunction, CellMeasure, DyadicCube, Grid,
                         cube_average)
from osclab.norms import LocalNormSpec
from osclab.oscillation import (best_constant_oscillation, bmo_norm,
                                cz_decompose, fit_exponential_tail, jn_tail,
                                jn_tail_curve, level_oscillations,
                                oscillation, sparse_dominate,
                                sup_localized_oscillation, truncate)
from osclab.testfuncs import indicator, log_reciprocal, random_step


def brute_oscillation(vals, masses):
    avg = np.sum(vals * masses) / masses.sum()
    return np.sum(np.abs(vals - avg) * masses) / masses.sum()


@pytest.mark.parametrize('k', [1, 2, 3, 5, 7])
def test_indicator_oscillation(k):
    g = Grid(1, 3)
    mu = CellMeasure.lebesgue(g)
    f = CellFunction(g, [1.0] * k + [0.0] * (8 - k))
    th = k / 8
    assert oscillation(f, g.root, mu) == pytest.approx(2 * th * (1 - th),
                                                       rel=1e-14)


def test_four_cell_example():
    g = Grid(1, 2)
    mu = CellMeasure.lebesgue(g)
    f = CellFunction(g, [0, 1, 2, 3])
    assert oscillation(f, g.root, mu) == pytest.approx(1.0)
    assert best_constant_oscillation(f, g.root, mu) == pytest.approx(1.0)


def test_bmo_of_half_indicator():
    g = Grid(1, 10)
    mu = CellMeasure.lebesgue(g)
    val, cube = bmo_norm(indicator(g, 0.5), mu)
    assert val == pytest.approx(0.5, rel=1e-14)
    assert cube == g.root


def test_log_bmo_stable_under_refinement():
    vals = []
    for depth in (14, 16):
        g = Grid(1, depth)
        vals.append(bmo_norm(log_reciprocal(g), CellMeasure.lebesgue(g))[0])
    assert abs(vals[0] - vals[1]) <= 0.02 * vals[1]


@given(st.integers(0, 2 ** 31))
def test_level_oscillations_match_brute_force(seed):
    rng = np.random.default_rng(seed)
    g = Grid(2, 3)
    mu = CellMeasure(g, rng.random(g.n_cells) + 0.01)
    f = CellFunction(g, rng.standard_normal(g.n_cells))
    for level in range(g.depth + 1):
        got = level_oscillations(f, mu, level)
        for i, q in enumerate(g.cubes(level)):
            mask = g.cell_mask(q)
            want = brute_oscillation(f.values[mask], mu.masses[mask])
            assert got[i] == pytest.approx(want, rel=1e-12, abs=1e-14)
            assert oscillation(f, q, mu) == pytest.approx(want, rel=1e-12,
                                                          abs=1e-14)


@given(st.integers(0, 2 ** 31))
def test_best_constant_two_sided(seed):
    rng = np.random.default_rng(seed)
    g = Grid(1, 5)
    mu = CellMeasure(g, rng.random(g.n_cells) + 0.01)
    f = CellFunction(g, rng.standard_normal(g.n_cells))
    b = best_constant_oscillation(f, g.root, mu)
    o = oscillation(f, g.root, mu)
    assert b <= o + 1e-12
    assert o <= 2 * b + 1e-12
    grid_c = np.linspace(f.values.min(), f.values.max(), 2001)
    dense = min(np.sum(np.abs(f.values - c) * mu.masses) for c in grid_c)
    assert b <= dense / mu.total + 1e-12


@given(st.integers(0, 2 ** 31), st.floats(-1, 0), st.floats(0.01, 1))
def test_truncation_does_not_increase_bmo(seed, lo, width):
    rng = np.random.default_rng(seed)
    g = Grid(1, 6)
    mu = CellMeasure(g, rng.random(g.n_cells) + 0.01)
    f = CellFunction(g, rng.standard_normal(g.n_cells))
    t = truncate(f, lo, lo + width)
    assert t.values.min() >= lo and t.values.max() <= lo + width
    for level in range(g.depth + 1):
        for q in g.cubes(level):
            assert (best_constant_oscillation(t, q, mu)
                    <= best_constant_oscillation(f, q, mu) + 1e-12)
    assert bmo_norm(t, mu)[0] <= 2 * bmo_norm(f, mu)[0] + 1e-12
    with pytest.raises(ParameterError):
        truncate(f, 1, 1)


def test_cz_hand_example():
    g = Grid(1, 4)
    mu = CellMeasure.lebesgue(g)
    f = CellFunction(g, [4.0] * 4 + [0.0] * 12)
    res = cz_decompose(f, g.root, mu, 2.0)
    assert list(res.selected) == [DyadicCube(2, (0,))]
    assert res.averages == (4.0,)
    assert res.root_average == pytest.approx(1.0)
    assert res.smallness_ratio(mu) == pytest.approx(0.5)
    with pytest.raises(StoppingPreconditionError):
        cz_decompose(f, g.root, mu, 0.5)


@given(st.integers(0, 2 ** 31), st.floats(1.0, 6.0))
def test_cz_properties(seed, factor):
    rng = np.random.default_rng(seed)
    g = Grid(2, 4)
    mu = CellMeasure(g, rng.random(g.n_cells) + 0.05)
    f = CellFunction(g, rng.standard_normal(g.n_cells) ** 3)
    a = np.abs(f.values)
    L = factor * cube_average(a, g.root, mu)
    res = cz_decompose(f, g.root, mu, L)
    covered = np.zeros(g.n_cells, dtype=bool)
    cap = mu.doubling_factor * L
    for q, avg in zip(res.selected, res.averages):
        mask = g.cell_mask(q)
        assert not np.any(covered & mask)
        covered |= mask
        assert L < avg <= cap * (1 + 1e-12)
        want = np.sum(a[mask] * mu.masses[mask]) / mu.masses[mask].sum()
        assert avg == pytest.approx(want, rel=1e-12)
    assert np.all(a[~covered] <= L * (1 + 1e-12))
    assert res.smallness_ratio(mu) <= 1 + 1e-12


def test_jn_tail_examples():
    g = Grid(1, 2)
    mu = CellMeasure.lebesgue(g)
    f = CellFunction(g, [0, 1, 2, 3])
    assert jn_tail(f, g.root, mu, 0.0) == 1.0
    assert jn_tail(f, g.root, mu, 0.5) == 0.5
    assert jn_tail(f, g.root, mu, 1.5) == 0.0
    with pytest.raises(ParameterError):
        jn_tail(f, g.root, mu, -1)


@given(st.integers(0, 2 ** 31))
def test_jn_tail_curve_monotone_and_brute(seed):
    rng = np.random.default_rng(seed)
    g = Grid(1, 6)
    mu = CellMeasure(g, rng.random(g.n_cells) + 0.01)
    f = CellFunction(g, rng.standard_normal(g.n_cells))
    ts = np.sort(rng.uniform(0, 3, 30))
    curve = jn_tail_curve(f, g.root, mu, ts)
    assert np.all(np.diff(curve) <= 1e-15)
    avg = np.sum(f.values * mu.masses) / mu.total
    for t, c in zip(ts, curve):
        want = mu.masses[np.abs(f.values - avg) > t].sum() / mu.total
        assert c == pytest.approx(want, rel=1e-12, abs=1e-15)


def test_exponential_fit_recovers_rate():
    ts = np.linspace(0, 5, 20)
    a, b = fit_exponential_tail(ts, 0.7 * np.exp(-1.3 * ts))
    assert a == pytest.approx(np.log(0.7), rel=1e-10)
    assert b == pytest.approx(1.3, rel=1e-10)
    with pytest.raises(ParameterError):
        fit_exponential_tail([0, 1], [1.0, 0.0])


def test_sparse_constant_function():
    g = Grid(1, 5)
    mu = CellMeasure.lebesgue(g)
    fam = sparse_dominate(CellFunction.constant(g, 3.0), g.root, mu)
    assert len(fam) == 1
    assert fam.oscillations == [0.0]
    assert fam.domination_constant == 0.0
    assert fam.sparseness(mu) == 1.0


def test_sparse_indicator():
    g = Grid(1, 6)
    mu = CellMeasure.lebesgue(g)
    fam = sparse_dominate(indicator(g, 0.5), g.root, mu, stopping_factor=2)
    # |f - 1/2| = 1/2 everywhere and osc = 1/2: nothing stops
    assert len(fam) == 1
    assert fam.domination_constant == pytest.approx(1.0)


@given(st.integers(0, 2 ** 31), st.floats(1.5, 4.0))
def test_sparse_family_structure(seed, lam):
    g = Grid(2, 4)
    mu = CellMeasure.lebesgue(g)
    f = random_step(g, seed, levels=4)
    fam = sparse_dominate(f, g.root, mu, stopping_factor=lam)
    seen = np.zeros(g.n_cells, dtype=int)
    for q, e, em in zip(fam.members, fam.major_sets, fam.major_masses):
        assert np.all(g.cell_mask(q)[e])
        seen[e] += 1
        assert em == pytest.approx(mu.masses[e].sum())
    assert np.all(seen <= 1)
    # mass of the stopped children is at most mu(Q)/lam
    assert fam.sparseness(mu) <= lam / (lam - 1) + 1e-12
    assert not fam.truncated


def test_sparse_rejects_bad_factor():
    g = Grid(1, 3)
    mu = CellMeasure.lebesgue(g)
    with pytest.raises(ParameterError):
        sparse_dominate(indicator(g), g.root, mu, stopping_factor=1.0)
    zero = CellMeasure(g, [0.0] * 4 + [1.0] * 4)
    with pytest.raises(DegenerateMeasureError):
        sparse_dominate(indicator(g), DyadicCube(1, (0,)), zero)


def test_sup_localized_indicator():
    g = Grid(1, 8)
    mu = CellMeasure.lebesgue(g)
    f = indicator(g, 0.5)
    # (f - 1/2) / (1/2) is +-1 on the root, and every smaller cube sees 0
    val, cube = sup_localized_oscillation(f, LocalNormSpec.lp(mu, 3))
    assert val == pytest.approx(1.0, rel=1e-12)
    assert cube == g.root


@given(st.integers(0, 2 ** 31))
def test_sup_localized_l1_is_one(seed):
    g = Grid(1, 6)
    mu = CellMeasure.lebesgue(g)
    f = random_step(g, seed)
    val, _ = sup_localized_oscillation(f, LocalNormSpec.lp(mu, 1))
    assert val == pytest.approx(1.0, rel=1e-9)
    v2, _ = sup_localized_oscillation(f, LocalNormSpec.lp(mu, 2))
    v4, _ = sup_localized_oscillation(f, LocalNormSpec.lp(mu, 4))
    assert 1 - 1e-9 <= v2 <= v4 * (1 + 1e-9)


def test_sup_localized_rejects_constant():
    g = Grid(1, 4)
    mu = CellMeasure.lebesgue(g)
    with pytest.raises(ParameterError):
        sup_localized_oscillation(CellFunction.constant(g, 1.0),
                                  LocalNormSpec.lp(mu, 2))
