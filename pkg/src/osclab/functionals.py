"""Cube functionals and A-infinity type conditions.

A cube functional assigns a positive number to every dyadic cube.  The
kinds provided are the base measure, the mass of a weight, the Holder
enlarged mass ``w_r``, a power of the measure and an explicit table.  All
of them precompute one flat array per level so that norms can be
evaluated for every cube of a level at once.
"""

from dataclasses import dataclass
import warnings

import numpy as np

from .errors import FunctionalError, ParameterError
from .grid import (CellFunction, DisjointFamily, admissible_levels,
                   level_blocks, pyramid, upsample, _vals)
from .norms import LocalNormSpec, local_norm
from .young import young_inverse

__all__ = ['CubeFunctional', 'AinftyProfile', 'Antichain', 'wr_value',
           'check_wr_properties', 'local_maximal', 'fujii_wilson',
           'random_antichain', 'sd_check', 'ainfty_char_profile',
           'embedding_constant', 'candidate_inverse']


class CubeFunctional:
    """A positive functional on the dyadic cubes of a grid.

    Build it through the class methods :meth:`of_measure`,
    :meth:`weight_mass`, :meth:`wr`, :meth:`measure_power` or
    :meth:`table`.
    """

    def __init__(self, kind, measure, levels, weight=None, r=None,
                 exponent=None, strict=True):
        self.kind = kind
        self.measure = measure
        self.weight = weight
        self.r = r
        self.r_conj = None if r is None else r / (r - 1.0)
        self.exponent = exponent
        self._levels = [np.asarray(a, dtype=float).ravel() for a in levels]
        for a in self._levels:
            a.setflags(write=False)
        self.strict = strict
        if not strict:
            return
        mass_ok = [measure.level_masses(k) > 0 for k in range(len(levels))]
        for k, (vals, ok) in enumerate(zip(self._levels, mass_ok)):
            if np.any(~(vals[ok] > 0)):
                cube = measure.grid.cube_at(k, int(np.argmax(ok & ~(vals > 0))))
                raise FunctionalError(
                    f"{kind} functional is not positive at {cube}")

    def __repr__(self):
        return f"CubeFunctional({self.describe()})"

    def describe(self):
        if self.kind == 'wr':
            return f"wr:{self.r:g}"
        if self.kind == 'measure-power':
            return f"measure-power:{self.exponent:g}"
        return self.kind

    @classmethod
    def of_measure(cls, measure):
        """``Y(Q) = mu(Q)``."""
        grid = measure.grid
        return cls('measure', measure,
                   [measure.level_masses(k) for k in range(grid.depth + 1)])

    @classmethod
    def weight_mass(cls, weight, measure, strict=True):
        """``Y(Q) = w(Q) = sum_Q w dmu``.

        With ``strict=False`` cubes where ``w`` vanishes may get 0.
        """
        pyr = pyramid(measure.grid.nd(_vals(weight) * measure.masses))
        return cls('weight-mass', measure, pyr, weight=weight, strict=strict)

    @classmethod
    def wr(cls, weight, measure, r):
        """``Y(Q) = mu(Q)**(1/r') (sum_Q w**r dmu)**(1/r)``."""
        r = float(r)
        if not r > 1:
            raise ParameterError("w_r needs r > 1")
        w = _vals(weight)
        if np.any(w < 0):
            raise ParameterError("weights must be nonnegative")
        grid = measure.grid
        pw = pyramid(grid.nd(w ** r * measure.masses))
        rc = r / (r - 1.0)
        levels = [measure.level_array(k) ** (1.0 / rc) * pw[k] ** (1.0 / r)
                  for k in range(grid.depth + 1)]
        return cls('wr', measure, levels, weight=weight, r=r)

    @classmethod
    def measure_power(cls, measure, exponent):
        """``Y(Q) = mu(Q)**exponent``."""
        e = float(exponent)
        grid = measure.grid
        return cls('measure-power', measure,
                   [measure.level_masses(k) ** e
                    for k in range(grid.depth + 1)], exponent=e)

    @classmethod
    def table(cls, measure, values):
        """Explicit values, either a ``{cube: value}`` mapping covering every
        cube or a list of per-level arrays."""
        grid = measure.grid
        if isinstance(values, dict):
            levels = []
            for k in range(grid.depth + 1):
                arr = np.empty(1 << (k * grid.dimension))
                for i in range(arr.size):
                    cube = grid.cube_at(k, i)
                    if cube not in values:
                        raise FunctionalError(f"table misses cube {cube}")
                    arr[i] = values[cube]
                levels.append(arr)
        else:
            levels = list(values)
            if len(levels) != grid.depth + 1:
                raise ParameterError("need one array per level")
        return cls('table', measure, levels)

    def level_values(self, level):
        return self._levels[level]

    def value(self, cube):
        grid = self.measure.grid
        grid.check(cube)
        m = 1 << cube.level
        flat = 0
        for i in cube.index:
            flat = flat * m + i
        return float(self._levels[cube.level][flat])


def wr_value(w, measure, cube, r):
    """``mu(Q)**(1/r') (sum_Q w**r dmu)**(1/r)`` for one cube."""
    r = float(r)
    if not r > 1:
        raise ParameterError("w_r needs r > 1")
    grid = measure.grid
    sl = grid.slices(grid.check(cube))
    wv = grid.nd(_vals(w))[sl]
    m = measure.nd[sl]
    mass = pyramid(m)[0].ravel()[0]
    if not mass > 0:
        raise ParameterError(f"cube {cube} has zero mass")
    integral = pyramid(wv ** r * m)[0].ravel()[0]
    return float(mass ** (1.0 - 1.0 / r) * integral ** (1.0 / r))


def _wr_set(w, m, mask, r):
    mu = np.sum(m[mask])
    return mu ** (1.0 - 1.0 / r) * np.sum(w[mask] ** r * m[mask]) ** (1.0 / r)


def _rel(rhs, lhs):
    scale = max(abs(rhs), abs(lhs))
    return (rhs - lhs) / scale if scale > 0 else 0.0


def check_wr_properties(w, measure, r, trials=200, seed=0):
    """Worst relative slack of the four ``w_r`` properties over random sets.

    Keys: ``'jensen'`` for ``w(E) <= w_r(E)``, ``'ratio'`` for
    ``w_r(E) <= (mu(E)/mu(F))**(1/r') w_r(F)`` with ``E`` inside ``F``,
    ``'superadditive'`` for ``sum w_r(E_j) <= w_r(union)``, ``'monotone'``
    for ``w_r(E) <= w_r(F)``, and ``'ainfty'`` for
    ``sum w_r(Q_j) / w_r(Q) <= (mu(union Q_j)/mu(Q))**(1/r')`` over random
    dyadic antichains.  A slack below zero is a violation.
    """
    if trials < 1:
        raise ParameterError("trials must be positive")
    r = float(r)
    if not r > 1:
        raise ParameterError("w_r needs r > 1")
    rc = r / (r - 1.0)
    rng = np.random.default_rng(seed)
    wv = _vals(w)
    m = measure.masses
    n = wv.size
    worst = {'jensen': np.inf, 'ratio': np.inf, 'superadditive': np.inf,
             'monotone': np.inf, 'ainfty': np.inf}
    fy = CubeFunctional.wr(w, measure, r)
    for _ in range(trials):
        big = rng.random(n) < rng.uniform(0.05, 1.0)
        if not np.any(m[big] > 0):
            big[np.argmax(m)] = True
        small = big & (rng.random(n) < rng.uniform(0.05, 1.0))
        if not np.any(m[small] > 0):
            small[np.flatnonzero(big & (m > 0))[0]] = True
        wr_big = _wr_set(wv, m, big, r)
        wr_small = _wr_set(wv, m, small, r)
        w_big = np.sum(wv[big] * m[big])
        worst['jensen'] = min(worst['jensen'], _rel(wr_big, w_big))
        ratio = (np.sum(m[small]) / np.sum(m[big])) ** (1.0 / rc)
        worst['ratio'] = min(worst['ratio'], _rel(ratio * wr_big, wr_small))
        worst['monotone'] = min(worst['monotone'], _rel(wr_big, wr_small))
        labels = rng.integers(0, rng.integers(2, 9), n)
        parts = [big & (labels == j) for j in range(labels.max() + 1)]
        total = sum(_wr_set(wv, m, p, r) for p in parts if np.any(p))
        worst['superadditive'] = min(worst['superadditive'],
                                     _rel(wr_big, total))
        chain = random_antichain(measure.grid, rng, min_level=1)
        lhs = sum(fy.level_values(k)[idx].sum()
                  for k, idx in chain.items()) / fy.value(chain.root)
        frac = chain.mass(measure) / measure.mass(chain.root)
        worst['ainfty'] = min(worst['ainfty'], _rel(frac ** (1.0 / rc), lhs))
    return {k: float(v) for k, v in worst.items()}


# ---------------------------------------------------------------------------
# maximal function and Fujii-Wilson

def _level_avgs(wv_nd, m_nd):
    sums = pyramid(wv_nd * m_nd)
    masses = pyramid(m_nd)
    out = []
    for s, mm in zip(sums, masses):
        with np.errstate(invalid='ignore', divide='ignore'):
            out.append(np.where(mm > 0, s / np.where(mm > 0, mm, 1.0), 0.0))
    return out


def _running_max(avgs, start):
    cur = avgs[start]
    for j in range(start + 1, len(avgs)):
        cur = np.maximum(upsample(cur, 2), avgs[j])
    return cur


def local_maximal(w, cube, measure):
    """Dyadic maximal function of ``w chi_Q`` over the subcubes of ``Q``.

    Cells outside ``Q`` get 0.
    """
    grid = measure.grid
    sl = grid.slices(grid.check(cube))
    avgs = _level_avgs(grid.nd(_vals(w))[sl], measure.nd[sl])
    out = np.zeros(grid.shape)
    out[sl] = _running_max(avgs, 0)
    return CellFunction(grid, out.ravel())


def fujii_wilson(w, functional, measure, min_level=1, max_level=None):
    """``max_Q (1/Y(Q)) sum_Q M(w chi_Q) dmu`` over admissible dyadic cubes.

    Returns ``(value, argmax_cube)``.
    """
    grid = measure.grid
    avgs = _level_avgs(grid.nd(_vals(w)), measure.nd)
    best, where = -np.inf, None
    for k in admissible_levels(grid, min_level, max_level):
        mx = _running_max(avgs, k)
        tot = pyramid(mx * measure.nd)[k].ravel()
        y = np.asarray(functional.level_values(k), dtype=float)
        # 0/0 (no weight on the cube) is skipped
        ok = (measure.level_masses(k) > 0) & ((y > 0) | (tot > 0))
        if np.any(ok & ~(y > 0)):
            raise FunctionalError("Y vanishes on a cube carrying weight")
        vals = np.where(ok, tot / np.where(ok, y, 1.0), -np.inf)
        i = int(np.argmax(vals))
        if vals[i] > best:
            best, where = float(vals[i]), grid.cube_at(k, i)
    return best, where


# ---------------------------------------------------------------------------
# random antichains

class Antichain(dict):
    """Disjoint dyadic subcubes of ``root`` as ``{level: flat indices}``.

    Flat indices address the row-major order of the whole level.
    """

    def __init__(self, root, items):
        super().__init__(items)
        self.root = root

    def cubes(self, grid):
        return [grid.cube_at(k, int(i)) for k in sorted(self)
                for i in self[k]]

    def family(self, grid):
        return DisjointFamily(self.root, self.cubes(grid))

    def mass(self, measure):
        return float(sum(measure.level_masses(k)[idx].sum()
                         for k, idx in self.items()))

    def indicator(self, grid):
        """``sum_j chi_{Q_j}`` as a cell function."""
        out = np.zeros(grid.shape)
        for q in self.cubes(grid):
            out[grid.slices(q)] = 1.0
        return CellFunction(grid, out.ravel())

    def __len__(self):
        return int(sum(len(v) for v in self.values()))


def _children_flat(flat, level, dim):
    """Flat indices of the children of cubes at ``level``."""
    m = 1 << level
    coords = np.array(np.unravel_index(flat, (m,) * dim)).T
    out = []
    for off in np.ndindex(*(2,) * dim):
        out.append(np.ravel_multi_index(
            tuple((2 * coords + np.array(off)).T), (2 * m,) * dim))
    return np.sort(np.concatenate(out))


def random_antichain(grid, rng, root=None, min_level=1, max_depth=None):
    """Random disjoint family of strict dyadic subcubes of ``root``.

    Starting from the children of ``root``, each cube is kept with
    probability ``keep``, split with probability ``split`` or dropped.  Both
    probabilities are drawn per call so that the covered fraction spreads
    over ``(0, 1)``.  ``root`` defaults to a random cube of level at most
    ``depth - min_level``.
    """
    dim = grid.dimension
    if root is None:
        top = grid.depth - max(min_level, 1)
        if top < 0:
            raise ParameterError("grid too shallow for an antichain")
        # favour coarse roots, which leave room for deep antichains
        level = int(top * rng.random() ** 2)
        root = grid.cube_at(level, int(rng.integers(0, 1 << (level * dim))))
    if root.level >= grid.depth:
        raise ParameterError("root is a single cell")
    last = grid.depth if max_depth is None else min(grid.depth, max_depth)
    flat = 0
    for i in root.index:
        flat = flat * (1 << root.level) + i
    for _ in range(20):
        out = _grow(rng, flat, root.level, last, dim)
        if out:
            return Antichain(root, out)
    kids = _children_flat(np.array([flat]), root.level, dim)
    return Antichain(root, {root.level + 1:
                            kids[[int(rng.integers(0, kids.size))]]})


def _grow(rng, flat, root_level, last, dim):
    keep = rng.uniform(0.02, 0.5)
    split = (1.0 - keep) * rng.uniform(0.3, 0.95)
    frontier = _children_flat(np.array([flat]), root_level, dim)
    out = {}
    for level in range(root_level + 1, last + 1):
        u = rng.random(frontier.size)
        if level == last:
            chosen = frontier[u < keep + split]
            nxt = np.empty(0, dtype=int)
        else:
            chosen = frontier[u < keep]
            nxt = frontier[(u >= keep) & (u < keep + split)]
        if chosen.size:
            out[level] = chosen
        if not nxt.size:
            break
        frontier = _children_flat(nxt, level, dim)
    return out


# ---------------------------------------------------------------------------
# SD condition and A-infinity profiles

def _sd_ratio(a, wmass, measure, chain, p, s):
    root = chain.root
    a0, w0 = a.value(root), wmass.value(root)
    tot = 0.0
    for k, idx in sorted(chain.items()):
        tot += np.sum((a.level_values(k)[idx] / a0) ** p
                      * wmass.level_values(k)[idx] / w0)
    frac = chain.mass(measure) / measure.mass(root)
    if not frac > 0:
        return 0.0
    return float(tot ** (1.0 / p) / frac ** (1.0 / s))


def sd_check(a, w, measure, p, s, trials=200, seed=0, families=None,
             bound=None, min_level=1):
    """Estimate the smallest constant in the SD condition by sampling.

    The estimate is the largest
    ``(sum (a(Q_j)/a(Q))**p w(Q_j)/w(Q))**(1/p) / (mu(union)/mu(Q))**(1/s)``
    over random antichains (or the given ``families``).  With ``bound`` the
    check holds when the estimate stays below it; otherwise it holds when
    the estimate is finite and the first half of the samples already
    reaches 90% of it.  Returns ``(holds, estimate)``.
    """
    if trials < 1:
        raise ParameterError("trials must be positive")
    if not p >= 1 or not s > 1:
        raise ParameterError("need p >= 1 and s > 1")
    wmass = CubeFunctional.weight_mass(w, measure)
    rng = np.random.default_rng(seed)
    if families is None:
        families = [random_antichain(measure.grid, rng, min_level=min_level)
                    for _ in range(trials)]
    ratios = np.array([_sd_ratio(a, wmass, measure, c, p, s)
                       for c in families])
    est = float(ratios.max())
    if bound is not None:
        return bool(est <= bound), est
    half = ratios[:max(1, len(ratios) // 2)].max()
    return bool(np.isfinite(est) and half >= 0.9 * est), est


def candidate_inverse(spec):
    """Named candidate ``Psi^{-1}`` for the family of ``spec``."""
    fam = spec.family
    if fam in ('lp', 'weak-lp'):
        p = spec.p
        return f"power:{p:g}", lambda t: t ** (1.0 / p)
    if fam in ('orlicz', 'weak-orlicz'):
        phi = spec.phi

        def inv(t):
            return 0.0 if t <= 0 else 1.0 / young_inverse(phi, 1.0 / t)
        return f"orlicz:{phi.name}", inv
    pp = spec.exponent.p_plus
    return f"power:{pp:g}", lambda t: t ** (1.0 / pp)


@dataclass(frozen=True)
class AinftyProfile:
    """Sampled ``(fraction, norm)`` pairs with a fitted constant.

    ``fitted_C`` is the smallest ``C`` with ``norm <= C * inverse(fraction)``
    on every sample.  ``label`` is ``'exact'`` for Orlicz and variable
    families, where characteristic functions suffice, and
    ``'characteristic-restricted'`` otherwise.
    """

    samples: tuple
    fitted_C: float
    inverse_name: str
    inverse: object
    label: str

    def bound(self, fraction):
        return self.fitted_C * self.inverse(fraction)


def ainfty_char_profile(functional, spec, measure=None, trials=50, seed=0,
                        min_level=1):
    """Norms of ``sum_j chi_{Q_j}`` on random antichains.

    The norm is taken in the family of ``spec`` normalised by
    ``functional``; fractions use ``measure`` (default the spec's).
    """
    if trials < 1:
        raise ParameterError("trials must be positive")
    if measure is None:
        measure = spec.measure
    grid = measure.grid
    spec = LocalNormSpec(spec.family, spec.measure, p=spec.p, phi=spec.phi,
                         exponent=spec.exponent, functional=functional,
                         check_average=False)
    name, inv = candidate_inverse(spec)
    rng = np.random.default_rng(seed)
    samples = []
    for _ in range(trials):
        chain = random_antichain(grid, rng, min_level=min_level)
        frac = chain.mass(measure) / measure.mass(chain.root)
        val = local_norm(chain.indicator(grid), chain.root, spec)
        samples.append((float(frac), float(val)))
    ratios = [v / inv(f) for f, v in samples if f > 0]
    fitted = max(ratios) if ratios else 0.0
    label = ('exact' if spec.family in ('orlicz', 'variable')
             else 'characteristic-restricted')
    return AinftyProfile(tuple(samples), float(fitted), name, inv, label)


def embedding_constant(w, functional, measure, test_functions, min_level=1):
    """Largest ``(1/Y(Q)) sum_Q |f - f_Q| w dmu / ||f||_BMO``.

    Averages ``f_Q`` are taken against ``measure``; constant test functions
    are skipped with a warning.  Returns an empirical lower bound for the
    embedding constant.
    """
    from .oscillation import bmo_norm

    grid = measure.grid
    wm = _vals(w) * measure.masses
    best = 0.0
    for f in test_functions:
        b, _ = bmo_norm(f, measure, min_level)
        if not b > 0:
            warnings.warn("skipping a test function with zero BMO norm")
            continue
        fv = grid.nd(_vals(f))
        for k in admissible_levels(grid, min_level):
            mass = measure.level_masses(k)
            s = pyramid(grid.nd(_vals(f) * measure.masses))[k].ravel()
            ok = mass > 0
            avg = np.where(ok, s / np.where(ok, mass, 1.0), 0.0)
            dev = np.abs(level_blocks(fv, k) - avg[:, None])
            num = np.sum(dev * level_blocks(grid.nd(wm), k), axis=1)
            y = np.asarray(functional.level_values(k), dtype=float)
            vals = np.where(ok, num / np.where(ok, y, 1.0), 0.0) / b
            best = max(best, float(vals.max()))
    return best
