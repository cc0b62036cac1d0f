"""Mean oscillation, dyadic BMO, Calderon-Zygmund stopping times and
sparse families.

Per-level quantities are computed for all cubes of a level at once on the
``level_blocks`` layout (one row per cube).  Cubes of zero mass carry no
oscillation and are skipped by every supremum.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (DegenerateMeasureError, ParameterError,
                     StoppingPreconditionError)
from .grid import (DisjointFamily, DyadicCube, admissible_levels,
                   cube_average, level_blocks, pyramid, upsample, _vals)
from .norms import norm_blocks

__all__ = ['oscillation', 'level_oscillations', 'bmo_norm', 'truncate',
           'best_constant_oscillation', 'CZResult', 'cz_decompose',
           'jn_tail', 'jn_tail_curve', 'fit_exponential_tail',
           'SparseFamily', 'sparse_dominate', 'sup_localized_oscillation']


def _sub(grid, arr_flat, cube):
    return grid.nd(arr_flat)[grid.slices(cube)]


def oscillation(f, cube, measure):
    """Mean of ``|f - f_Q|`` over ``cube`` against ``measure``."""
    grid = measure.grid
    total = measure.mass(cube)
    if not total > 0:
        raise DegenerateMeasureError(f"cube {cube} has zero mass")
    avg = cube_average(f, cube, measure)
    fv = _sub(grid, _vals(f), cube)
    m = _sub(grid, measure.masses, cube)
    return float(pyramid(np.abs(fv - avg) * m)[0].ravel()[0] / total)


def _level_stats(f, measure, level):
    """Blocks of ``f`` and masses with per-cube mass and average."""
    grid = measure.grid
    fb = level_blocks(grid.nd(_vals(f)), level)
    mb = level_blocks(measure.nd, level)
    mass = measure.level_masses(level)
    s = pyramid(grid.nd(_vals(f) * measure.masses))[level].ravel()
    with np.errstate(invalid='ignore', divide='ignore'):
        avg = np.where(mass > 0, s / np.where(mass > 0, mass, 1.0), 0.0)
    return fb, mb, mass, avg


def level_oscillations(f, measure, level):
    """Oscillation of ``f`` on every cube of ``level`` (0 on null cubes)."""
    fb, mb, mass, avg = _level_stats(f, measure, level)
    dev = np.sum(np.abs(fb - avg[:, None]) * mb, axis=1)
    return np.where(mass > 0, dev / np.where(mass > 0, mass, 1.0), 0.0)


def _argmax_over_levels(values_by_level, grid):
    best, where = -np.inf, None
    for level, vals in values_by_level:
        i = int(np.argmax(vals))
        if vals[i] > best:
            best, where = float(vals[i]), grid.cube_at(level, i)
    return best, where


def bmo_norm(f, measure, min_level=1, max_level=None):
    """Dyadic BMO norm: the largest cube oscillation.

    Cubes of level ``<= depth - min_level`` (and ``<= max_level`` when
    given) are scanned.  Returns ``(value, argmax_cube)``; ties go to the
    coarsest level, then the smallest index.
    """
    grid = measure.grid
    levels = admissible_levels(grid, min_level, max_level)
    return _argmax_over_levels(
        ((k, level_oscillations(f, measure, k)) for k in levels), grid)


def truncate(f, lower, upper):
    """Clamp ``f`` cellwise to ``[lower, upper]``."""
    if not lower < upper:
        raise ParameterError(f"need lower < upper, got {lower}, {upper}")
    return f.with_values(np.clip(f.values, lower, upper))


def best_constant_oscillation(f, cube, measure):
    """``min_c`` of the mean of ``|f - c|`` over ``cube``.

    Attained at a weighted median, which is one of the cell values.
    """
    grid = measure.grid
    total = measure.mass(cube)
    if not total > 0:
        raise DegenerateMeasureError(f"cube {cube} has zero mass")
    fv = _sub(grid, _vals(f), cube).ravel()
    m = _sub(grid, measure.masses, cube).ravel()
    order = np.argsort(fv, kind='stable')
    cum = np.cumsum(m[order])
    med = fv[order][np.searchsorted(cum, 0.5 * cum[-1])]
    return float(np.sum(np.abs(fv - med) * m) / total)


# ---------------------------------------------------------------------------
# Calderon-Zygmund

@dataclass(frozen=True)
class CZResult:
    """Maximal dyadic subcubes of ``parent`` where the mean of ``|g|``
    exceeds ``level_L``."""

    parent: DyadicCube
    level_L: float
    selected: DisjointFamily
    averages: tuple
    root_average: float
    doubling_factor: float

    def smallness_ratio(self, measure):
        """``sum mu(Q_j) / (mu(Q) avg(Q) / L)``; at most 1."""
        tot = sum(measure.mass(q) for q in self.selected)
        cap = measure.mass(self.parent) * self.root_average / self.level_L
        return tot / cap if cap > 0 else 0.0


def _stopping(values_nd, mass_nd, threshold):
    """Top-down scan of strict subcubes whose mean exceeds ``threshold``.

    ``values_nd`` and ``mass_nd`` cover the parent cube only.  Returns a
    list of ``(relative_level, index_tuple, average)`` in scan order.
    """
    sums = pyramid(values_nd * mass_nd)
    masses = pyramid(mass_nd)
    n = values_nd.ndim
    covered = np.zeros((1,) * n, dtype=bool)
    out = []
    for j in range(1, len(sums)):
        covered = upsample(covered, 2)
        mass = masses[j]
        with np.errstate(invalid='ignore', divide='ignore'):
            avg = np.where(mass > 0, sums[j] / np.where(mass > 0, mass, 1.0),
                           -np.inf)
        hit = (avg > threshold) & ~covered
        if np.any(hit):
            for idx in np.argwhere(hit):
                out.append((j, tuple(int(i) for i in idx),
                            float(avg[tuple(idx)])))
            covered = covered | hit
    return out


def cz_decompose(g, cube, measure, L):
    """Local Calderon-Zygmund decomposition of ``|g|`` at height ``L``.

    Needs ``L >= avg(|g|, Q)``.  Selected cubes satisfy
    ``L < avg(|g|, Q_j) <= c_mu 2**n_mu L`` and every positive-mass cell
    off their union has ``|g| <= L``.
    """
    grid = measure.grid
    grid.check(cube)
    a = np.abs(_vals(g))
    root_avg = cube_average(a, cube, measure)
    if not L >= root_avg:
        raise StoppingPreconditionError(
            f"L={L:g} is below the average {root_avg:.6g} of |g| over {cube}")
    sl = grid.slices(cube)
    hits = _stopping(grid.nd(a)[sl], measure.nd[sl], L)
    members, avgs = [], []
    for j, idx, avg in hits:
        level = cube.level + j
        scale = 1 << j
        members.append(DyadicCube(
            level, tuple(scale * c + i for c, i in zip(cube.index, idx))))
        avgs.append(avg)
    order = sorted(range(len(members)), key=lambda i: members[i])
    fam = DisjointFamily(cube, [members[i] for i in order], validate=False)
    return CZResult(cube, float(L), fam, tuple(avgs[i] for i in order),
                    root_avg, measure.doubling_factor)


# ---------------------------------------------------------------------------
# John-Nirenberg tails

def jn_tail(f, cube, measure, t):
    """``mu({x in Q : |f - f_Q| > t}) / mu(Q)``."""
    if t < 0:
        raise ParameterError("t must be nonnegative")
    return float(jn_tail_curve(f, cube, measure, [t])[0])


def jn_tail_curve(f, cube, measure, ts):
    """:func:`jn_tail` at every threshold in ``ts``."""
    grid = measure.grid
    total = measure.mass(cube)
    if not total > 0:
        raise DegenerateMeasureError(f"cube {cube} has zero mass")
    avg = cube_average(f, cube, measure)
    dev = np.abs(_sub(grid, _vals(f), cube).ravel() - avg)
    m = _sub(grid, measure.masses, cube).ravel()
    order = np.argsort(dev, kind='stable')
    dev, m = dev[order], m[order]
    # mass strictly above each threshold
    above = np.concatenate([np.cumsum(m[::-1])[::-1], [0.0]])
    pos = np.searchsorted(dev, np.asarray(ts, dtype=float), side='right')
    return above[pos] / total


def fit_exponential_tail(ts, tails):
    """Least-squares fit ``log tail = a - b t`` on the positive tails.

    Returns ``(a, b)``.
    """
    ts = np.asarray(ts, dtype=float)
    tails = np.asarray(tails, dtype=float)
    keep = tails > 0
    if keep.sum() < 2:
        raise ParameterError("need at least two positive tail values")
    slope, icpt = np.polyfit(ts[keep], np.log(tails[keep]), 1)
    return float(icpt), float(-slope)


# ---------------------------------------------------------------------------
# sparse families

@dataclass
class SparseFamily:
    """Stopping cubes with their disjoint major sets.

    ``major_sets[i]`` holds the flat cell indices of the major set of
    ``members[i]``; ``oscillations[i]`` the oscillation of ``f`` on it.
    """

    root: DyadicCube
    members: list
    major_sets: list
    oscillations: list
    stopping_factor: float
    domination_constant: float = 0.0
    truncated: bool = False
    major_masses: list = field(default_factory=list)

    def __len__(self):
        return len(self.members)

    def sparseness(self, measure):
        """Largest ``mu(Q) / mu(E_Q)`` over the members."""
        worst = 0.0
        for q, em in zip(self.members, self.major_masses):
            mq = measure.mass(q)
            if mq > 0:
                worst = max(worst, mq / em if em > 0 else np.inf)
        return worst


def sparse_dominate(f, root, measure, stopping_factor=2.0,
                    max_members=200000):
    """Sparse family of ``f`` below ``root`` by recursive stopping times.

    Inside a member ``Q`` the maximal dyadic subcubes ``R`` with mean of
    ``|f - f_Q|`` above ``stopping_factor * osc(f, Q)`` are selected and
    become members; ``E_Q`` is ``Q`` minus their union.  The measured
    constant is ``max |f - f_root| / sum_{Q ni x} osc(f, Q)`` over cells,
    with 0/0 read as 0.
    """
    lam = float(stopping_factor)
    if not lam > 1:
        raise ParameterError("stopping factor must exceed 1")
    grid = measure.grid
    grid.check(root)
    if not measure.mass(root) > 0:
        raise DegenerateMeasureError(f"cube {root} has zero mass")
    fv = grid.nd(_vals(f))
    mn = measure.nd
    flat_idx = np.arange(grid.n_cells).reshape(grid.shape)
    cover = np.zeros(grid.shape)
    members, majors, oscs, mmass = [], [], [], []
    queue = [root]
    truncated = False
    while queue:
        q = queue.pop(0)
        if len(members) >= max_members:
            truncated = True
            break
        sl = grid.slices(q)
        fq, mq = fv[sl], mn[sl]
        tot = pyramid(mq)[0].ravel()[0]
        avg = pyramid(fq * mq)[0].ravel()[0] / tot
        dev = np.abs(fq - avg)
        osc = float(pyramid(dev * mq)[0].ravel()[0] / tot)
        keep = np.ones(fq.shape, dtype=bool)
        children = []
        if osc > 0:
            for j, idx, _ in _stopping(dev, mq, lam * osc):
                scale = 1 << j
                child = DyadicCube(q.level + j, tuple(
                    scale * c + i for c, i in zip(q.index, idx)))
                children.append(child)
                s = grid.cells_per_side(child)
                keep[tuple(slice(i * s, (i + 1) * s) for i in idx)] = False
        members.append(q)
        majors.append(flat_idx[sl][keep])
        oscs.append(osc)
        mmass.append(float(np.sum(mq[keep])))
        cover[sl] += osc
        queue.extend(c for c in children if measure.mass(c) > 0)
    if queue:
        truncated = True
    sl = grid.slices(root)
    avg0 = cube_average(f, root, measure)
    num = np.abs(fv[sl] - avg0)
    den = cover[sl]
    with np.errstate(invalid='ignore', divide='ignore'):
        ratio = np.where(num > 0, num / den, 0.0)
    pos = mn[sl] > 0
    c_dom = float(ratio[pos].max()) if np.any(pos) else 0.0
    return SparseFamily(root, members, majors, oscs, lam, c_dom, truncated,
                        mmass)


# ---------------------------------------------------------------------------
# localized supremum

def sup_localized_oscillation(f, spec, measure=None, min_level=1,
                              max_level=None, bmo=None):
    """Largest localized norm of ``(f - f_P) / ||f||_BMO`` over dyadic ``P``.

    Averages and the BMO norm use ``measure`` (default: the measure of
    ``spec``); the norm itself uses ``spec``.  Returns ``(value, cube)``.
    """
    if measure is None:
        measure = spec.measure
    grid = measure.grid
    if bmo is None:
        bmo, _ = bmo_norm(f, measure, min_level)
    if not bmo > 0:
        raise ParameterError("f has zero BMO norm")
    levels = admissible_levels(grid, min_level, max_level)

    def per_level(k):
        fb, _, mass, avg = _level_stats(f, measure, k)
        vb, wb = spec.blocks(_vals(f), k)
        pb = spec.exponent_blocks(k)
        vals = norm_blocks(spec, (vb - avg[:, None]) / bmo, wb, pb)
        return k, np.where(mass > 0, vals, -np.inf)

    return _argmax_over_levels((per_level(k) for k in levels), grid)
