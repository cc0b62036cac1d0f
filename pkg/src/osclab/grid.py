"""Dyadic geometry, sampled functions and discrete measures.

Everything lives on the finest cells of a uniform dyadic grid over a root
cube.  Cell arrays are stored flat in row-major order; an ``n``-dimensional
view of shape ``(2**depth,) * n`` is available through :meth:`Grid.nd`.
Sums over dyadic cubes come from a pyramid of partial sums built by adding
the ``2**n`` children of each cube in a fixed order, so the parent mass is
bitwise equal to the ordered sum of its children.
"""

from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
import math

import numpy as np

from .errors import (DegenerateMeasureError, DomainError, NonDoublingError,
                     ParameterError, ResolutionError)

__all__ = ['DyadicCube', 'Grid', 'CellFunction', 'CellMeasure',
           'DisjointFamily', 'cube_mass', 'cube_average', 'estimate_doubling',
           'subcube_alpha', 'SubcubeResult', 'pyramid', 'level_blocks']


@dataclass(frozen=True, order=True)
class DyadicCube:
    """A dyadic cube addressed by its level and integer index per axis."""

    level: int
    index: tuple

    def __post_init__(self):
        if self.level < 0:
            raise DomainError(f"negative level {self.level}")
        idx = tuple(int(i) for i in self.index)
        object.__setattr__(self, 'index', idx)
        size = 1 << self.level
        for i in idx:
            if not 0 <= i < size:
                raise DomainError(
                    f"index {idx} outside level {self.level} (size {size})")

    @property
    def dimension(self):
        return len(self.index)

    def children(self):
        """The ``2**n`` children in row-major order of their offsets."""
        n = len(self.index)
        return [DyadicCube(self.level + 1,
                           tuple(2 * i + o for i, o in zip(self.index, off)))
                for off in product((0, 1), repeat=n)]

    def parent(self):
        if self.level == 0:
            raise DomainError("the root cube has no parent")
        return DyadicCube(self.level - 1, tuple(i >> 1 for i in self.index))

    def ancestor(self, level):
        if not 0 <= level <= self.level:
            raise DomainError(f"no ancestor at level {level}")
        shift = self.level - level
        return DyadicCube(level, tuple(i >> shift for i in self.index))

    def contains(self, other):
        """True when ``other`` is this cube or one of its descendants."""
        if other.level < self.level:
            return False
        return other.ancestor(self.level) == self

    def __str__(self):
        return f"{self.level}:{','.join(str(i) for i in self.index)}"

    @classmethod
    def parse(cls, text):
        """Parse ``"level:i0,i1,..."``."""
        try:
            level, idx = text.split(':')
            return cls(int(level), tuple(int(i) for i in idx.split(',')))
        except ValueError as exc:
            raise ParameterError(f"bad cube spec {text!r}: {exc}") from None


@dataclass(frozen=True)
class Grid:
    """Uniform dyadic grid of ``2**(dimension*depth)`` finest cells."""

    dimension: int
    depth: int
    origin: tuple = None
    side: float = 1.0

    def __post_init__(self):
        if self.dimension < 1 or self.depth < 1:
            raise ParameterError("dimension and depth must be positive")
        if self.origin is None:
            object.__setattr__(self, 'origin', (0.0,) * self.dimension)
        if len(self.origin) != self.dimension:
            raise ParameterError("origin length must equal the dimension")

    @property
    def n_cells(self):
        return 1 << (self.dimension * self.depth)

    @property
    def shape(self):
        return (1 << self.depth,) * self.dimension

    @property
    def cell_side(self):
        return self.side / (1 << self.depth)

    @property
    def cell_volume(self):
        return self.cell_side ** self.dimension

    @property
    def root(self):
        return DyadicCube(0, (0,) * self.dimension)

    def nd(self, values):
        return np.asarray(values).reshape(self.shape)

    def check(self, cube):
        if cube.dimension != self.dimension:
            raise DomainError(f"cube {cube} has wrong dimension")
        if cube.level > self.depth:
            raise DomainError(
                f"cube {cube} is finer than the grid depth {self.depth}")
        return cube

    def side_length(self, cube):
        return self.side / (1 << cube.level)

    def cells_per_side(self, cube):
        return 1 << (self.depth - self.check(cube).level)

    def slices(self, cube):
        """Slices of the ``nd`` view covering ``cube``."""
        s = self.cells_per_side(cube)
        return tuple(slice(i * s, (i + 1) * s) for i in cube.index)

    def cell_mask(self, cube):
        mask = np.zeros(self.shape, dtype=bool)
        mask[self.slices(cube)] = True
        return mask.ravel()

    def cubes(self, level):
        """All cubes of a level, in row-major index order."""
        m = 1 << level
        return [DyadicCube(level, idx)
                for idx in product(range(m), repeat=self.dimension)]

    def cube_at(self, level, flat_index):
        """Cube whose position in :meth:`cubes` order is ``flat_index``."""
        m = 1 << level
        idx = np.unravel_index(int(flat_index), (m,) * self.dimension)
        return DyadicCube(level, tuple(int(i) for i in idx))

    def cell_centers(self):
        """Midpoint coordinates, shape ``(n_cells, dimension)``."""
        h = self.cell_side
        axes = [o + h * (np.arange(1 << self.depth) + 0.5)
                for o in self.origin]
        mesh = np.meshgrid(*axes, indexing='ij')
        return np.stack([m.ravel() for m in mesh], axis=1)

    def cell_edges(self, axis=0):
        h = self.cell_side
        return self.origin[axis] + h * np.arange((1 << self.depth) + 1)


def pyramid(arr_nd):
    """Cube sums of ``arr_nd`` at every level, index 0 is the root.

    Children are added in row-major offset order; the result at level ``k``
    has shape ``(2**k,) * n``.
    """
    arr = np.asarray(arr_nd, dtype=float)
    n = arr.ndim
    levels = [arr]
    cur = arr
    while cur.shape[0] > 1:
        acc = None
        for off in product((0, 1), repeat=n):
            part = cur[tuple(slice(o, None, 2) for o in off)]
            acc = part.copy() if acc is None else acc + part
        levels.append(acc)
        cur = acc
    return levels[::-1]


def level_blocks(arr_nd, level):
    """Rearrange an ``nd`` cell array into ``(n_cubes, cells_per_cube)``.

    Rows follow the row-major order of the cubes at ``level`` relative to
    the array; columns follow row-major order inside each cube.
    """
    arr = np.asarray(arr_nd)
    n = arr.ndim
    m = 1 << level
    s = arr.shape[0] // m
    if m * s != arr.shape[0]:
        raise DomainError(f"level {level} finer than the array")
    split = arr.reshape(sum(((m, s) for _ in range(n)), ()))
    order = tuple(range(0, 2 * n, 2)) + tuple(range(1, 2 * n, 2))
    return split.transpose(order).reshape(m ** n, s ** n)


def upsample(level_arr_nd, factor):
    """Repeat each entry ``factor`` times along every axis."""
    out = np.asarray(level_arr_nd)
    for ax in range(out.ndim):
        out = np.repeat(out, factor, axis=ax)
    return out


class CellFunction:
    """Real values on the finest cells of a grid."""

    def __init__(self, grid, values):
        vals = np.array(values, dtype=float).ravel()
        if vals.size != grid.n_cells:
            raise ParameterError(
                f"expected {grid.n_cells} cell values, got {vals.size}")
        if not np.all(np.isfinite(vals)):
            raise ParameterError("cell values must be finite")
        vals.setflags(write=False)
        self.grid = grid
        self.values = vals

    def __repr__(self):
        return f"CellFunction({self.grid}, n={self.values.size})"

    @property
    def nd(self):
        return self.grid.nd(self.values)

    @classmethod
    def from_callable(cls, grid, fn):
        """Sample ``fn`` at cell midpoints; ``fn`` takes ``(n_cells, n)``."""
        return cls(grid, fn(grid.cell_centers()))

    @classmethod
    def constant(cls, grid, c):
        return cls(grid, np.full(grid.n_cells, float(c)))

    def with_values(self, values):
        return CellFunction(self.grid, values)

    def __neg__(self):
        return self.with_values(-self.values)

    def __abs__(self):
        return self.with_values(np.abs(self.values))

    def __add__(self, other):
        return self.with_values(self.values + _vals(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self.with_values(self.values - _vals(other))

    def __mul__(self, other):
        return self.with_values(self.values * _vals(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self.with_values(self.values / _vals(other))


def _vals(x):
    if isinstance(x, CellFunction):
        return x.values
    return np.asarray(x, dtype=float)


class CellMeasure:
    """Nonnegative mass per finest cell with cached cube sums.

    ``doubling_dim`` fixes the doubling dimension used when the doubling
    constant is estimated; it defaults to the grid dimension.
    """

    def __init__(self, grid, masses, doubling_dim=None):
        m = np.array(masses, dtype=float).ravel()
        if m.size != grid.n_cells:
            raise ParameterError(
                f"expected {grid.n_cells} masses, got {m.size}")
        if not np.all(np.isfinite(m)) or np.any(m < 0):
            raise ParameterError("masses must be finite and nonnegative")
        m.setflags(write=False)
        self.grid = grid
        self.masses = m
        self._pyr = pyramid(grid.nd(m))
        for arr in self._pyr:
            arr.setflags(write=False)
        if not self._pyr[0].ravel()[0] > 0:
            raise DegenerateMeasureError("total mass must be positive")
        self.doubling_dim = (float(grid.dimension) if doubling_dim is None
                             else float(doubling_dim))
        if self.doubling_dim <= 0:
            raise ParameterError("doubling dimension must be positive")

    def __repr__(self):
        return f"CellMeasure({self.grid}, total={self.total!r})"

    @classmethod
    def lebesgue(cls, grid):
        """Cell volumes of the root cube."""
        return cls(grid, np.full(grid.n_cells, grid.cell_volume))

    @classmethod
    def from_weight(cls, weight, base=None, doubling_dim=None):
        """Materialise ``w dmu`` (``base`` defaults to Lebesgue)."""
        grid = weight.grid
        if base is None:
            base = cls.lebesgue(grid)
        return cls(grid, weight.values * base.masses, doubling_dim)

    def weighted(self, weight):
        return CellMeasure.from_weight(weight, self, self.doubling_dim)

    @property
    def total(self):
        return float(self._pyr[0].ravel()[0])

    @property
    def nd(self):
        return self.grid.nd(self.masses)

    def mass(self, cube):
        self.grid.check(cube)
        return float(self._pyr[cube.level][cube.index])

    def level_masses(self, level):
        """Masses of all cubes at ``level`` in row-major index order."""
        if not 0 <= level <= self.grid.depth:
            raise DomainError(f"level {level} outside the grid")
        return self._pyr[level].ravel()

    def level_array(self, level):
        return self._pyr[level]

    def set_mass(self, mask):
        return float(np.sum(self.masses[np.asarray(mask)]))

    @cached_property
    def doubling(self):
        """``(c_mu, n_mu)`` estimated over dyadic ancestor pairs."""
        return _estimate_doubling(self, self.doubling_dim)

    @property
    def doubling_factor(self):
        """``c_mu * 2**n_mu``, the parent-to-child mass ratio bound."""
        c, nm = self.doubling
        return c * 2.0 ** nm


@dataclass(frozen=True)
class DisjointFamily:
    """Pairwise disjoint strict subcubes of a parent cube."""

    parent: DyadicCube
    members: tuple
    validate: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        members = tuple(sorted(self.members))
        object.__setattr__(self, 'members', members)
        if not self.validate:
            return
        seen = set(members)
        if len(seen) != len(members):
            raise DomainError("repeated member")
        for q in members:
            if q.level <= self.parent.level or not self.parent.contains(q):
                raise DomainError(f"{q} is not a strict subcube of "
                                  f"{self.parent}")
            for lev in range(self.parent.level + 1, q.level):
                anc = q.ancestor(lev)
                if anc in seen:
                    raise DomainError(f"{anc} and {q} overlap")

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def union_mask(self, grid):
        mask = np.zeros(grid.shape, dtype=bool)
        for q in self.members:
            mask[grid.slices(q)] = True
        return mask.ravel()


def cube_mass(measure, cube):
    """Mass of a dyadic cube, read from the cached pyramid."""
    return measure.mass(cube)


def cube_average(f, cube, measure):
    """Average of ``f`` over ``cube`` against ``measure``."""
    grid = measure.grid
    sl = grid.slices(grid.check(cube))
    m = measure.nd[sl]
    total = measure.mass(cube)
    if not total > 0:
        raise DegenerateMeasureError(f"cube {cube} has zero mass")
    fv = grid.nd(_vals(f))[sl]
    s = pyramid(fv * m)[0].ravel()[0]
    return float(s / total)


def estimate_doubling(measure, doubling_dim=None):
    """Estimate ``(c_mu, n_mu)`` from all dyadic ancestor/descendant pairs.

    The constant is the largest ``mu(P) / ((l(P)/l(Q))**n_mu * mu(Q))`` over
    pairs ``Q`` inside ``P``, floored at 1.  It is a lower bound for the
    constant over all (not only dyadic) nested pairs.
    """
    dim = measure.doubling_dim if doubling_dim is None else float(doubling_dim)
    if doubling_dim is None:
        return measure.doubling
    return _estimate_doubling(measure, dim)


def _estimate_doubling(measure, dim):
    grid = measure.grid
    best = 1.0
    for j in range(1, grid.depth + 1):
        child = measure.level_array(j)
        zero = child <= 0
        for k in range(j):
            anc = upsample(measure.level_array(k), 1 << (j - k))
            if np.any(zero & (anc > 0)):
                bad = np.argwhere(zero & (anc > 0))[0]
                raise NonDoublingError(
                    f"cube {DyadicCube(j, tuple(bad))} has zero mass inside "
                    f"an ancestor of positive mass")
            ok = ~zero
            if not np.any(ok):
                continue
            scale = 2.0 ** ((j - k) * dim)
            ratio = anc[ok] / (scale * child[ok])
            best = max(best, float(ratio.max()))
    return best, dim


@dataclass(frozen=True)
class SubcubeResult:
    """Outcome of :func:`subcube_alpha`.

    ``offset`` and ``size`` describe the box in cells relative to the cube
    (same offset on each axis).
    """

    cube: DyadicCube
    offset: int
    size: int
    alpha: float
    eps_cell: float
    bound: float

    @property
    def margin(self):
        return min(self.alpha, 1.0 - self.alpha)

    def box_slices(self, grid):
        base = grid.slices(self.cube)
        return tuple(slice(b.start + self.offset,
                           b.start + self.offset + self.size) for b in base)


def _box_mass_table(m_nd):
    """Summed-area table padded with a leading zero row on each axis."""
    sat = np.asarray(m_nd, dtype=float)
    for ax in range(sat.ndim):
        sat = np.cumsum(sat, axis=ax)
    return np.pad(sat, [(1, 0)] * sat.ndim)


def _box_mass(sat, lo, hi):
    n = sat.ndim
    total = 0.0
    for corner in product((0, 1), repeat=n):
        idx = tuple(hi if c else lo for c in corner)
        sign = (-1) ** (n - sum(corner))
        total += sign * sat[idx]
    return total


def subcube_alpha(measure, cube):
    """Find a near-concentric cell-aligned box with a balanced mass share.

    The box of side ``m`` cells sits at offset ``(s - m) // 2`` on every
    axis, so boxes are nested and ``h(m) = mu(box_m)`` is nondecreasing.  A
    bisection on ``m`` finds where ``h`` crosses half the cube mass; of the
    two boxes around the crossing the one with ``alpha`` nearest 1/2 wins
    (the smaller box on ties).  ``eps_cell`` is the mass share of the shell
    between those two boxes, i.e. the grid-resolution slack in the bound
    ``min(alpha, 1 - alpha) >= 1 / (4 c_mu) - eps_cell``.
    """
    grid = measure.grid
    grid.check(cube)
    if cube.level >= grid.depth:
        raise ResolutionError(f"cube {cube} is a single cell")
    total = measure.mass(cube)
    if not total > 0:
        raise DegenerateMeasureError(f"cube {cube} has zero mass")
    s = grid.cells_per_side(cube)
    m_nd = measure.nd[grid.slices(cube)]
    sat = _box_mass_table(m_nd)

    def h(size):
        if size <= 0:
            return 0.0
        off = (s - size) // 2
        return _box_mass(sat, off, off + size)

    half = 0.5 * total
    lo, hi = 0, s
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if h(mid) >= half:
            hi = mid
        else:
            lo = mid
    candidates = [size for size in (lo, hi) if 1 <= size <= s - 1]
    if not candidates:
        raise ResolutionError(f"no proper box inside {cube}")

    def exact_alpha(size):
        off = (s - size) // 2
        sl = (slice(off, off + size),) * grid.dimension
        return float(np.sum(m_nd[sl]) / total)

    scored = [(abs(exact_alpha(size) - 0.5), size) for size in candidates]
    _, best = min(scored)
    alpha = exact_alpha(best)
    eps = max(0.0, (h(hi) - h(lo)) / total)
    c_mu = measure.doubling[0]
    bound = 1.0 / (4.0 * c_mu)
    if min(alpha, 1.0 - alpha) < bound - eps - 1e-12:
        raise ResolutionError(
            f"best box in {cube} has alpha={alpha:.6g}, below 1/(4c)-eps",
            best_alpha=alpha)
    return SubcubeResult(cube, (s - best) // 2, best, alpha, eps, bound)


def admissible_levels(grid, min_level=1, max_level=None):
    """Levels ``0..depth-min_level`` (optionally capped at ``max_level``)."""
    if min_level < 0:
        raise ParameterError("min_level must be nonnegative")
    top = grid.depth - min_level
    if max_level is not None:
        top = min(top, max_level)
    if top < 0:
        raise ParameterError("no admissible levels")
    return range(top + 1)


def log2_int(x):
    k = int(round(math.log2(x)))
    if 1 << k != x:
        raise ParameterError(f"{x} is not a power of two")
    return k
