"""Localized norms against a measure and a cube functional.

Each family is evaluated on ``(f, cube, spec)`` where ``spec`` is a
:class:`LocalNormSpec`.  Internally every routine works on *blocks*: a 2-D
array with one row per cube and one column per cell of that cube, so that
all cubes of a level can be solved in one vectorised bisection.

Weights in the block routines are already normalised: row ``i`` of ``W``
holds ``nu(cell) / Y(Q_i)``.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (FunctionalError, OverflowRangeError, ParameterError)
from .grid import CellMeasure, level_blocks, _vals
from .young import YoungFunction, young_inverse

__all__ = ['FAMILIES', 'ExponentFunction', 'LocalNormSpec', 'lp_norm',
           'weak_lp_norm', 'orlicz_modular', 'luxemburg_norm',
           'weak_orlicz_norm', 'variable_modular', 'variable_norm',
           'local_norm', 'norm_blocks']

FAMILIES = ('lp', 'weak-lp', 'orlicz', 'weak-orlicz', 'variable')

RTOL = 1e-13
MAX_EXPAND = 2000


class ExponentFunction:
    """A variable exponent ``p(.)`` with ``1 <= p- <= p(x) <= p+ < inf``."""

    def __init__(self, grid, values):
        vals = np.array(values, dtype=float).ravel()
        if vals.size != grid.n_cells:
            raise ParameterError(
                f"expected {grid.n_cells} exponents, got {vals.size}")
        if not np.all(np.isfinite(vals)) or vals.min() < 1:
            raise ParameterError("exponents must be finite and >= 1")
        vals.setflags(write=False)
        self.grid = grid
        self.values = vals
        self.p_minus = float(vals.min())
        self.p_plus = float(vals.max())

    @classmethod
    def constant(cls, grid, p):
        return cls(grid, np.full(grid.n_cells, float(p)))

    def scaled(self, s):
        return ExponentFunction(self.grid, s * self.values)

    @property
    def nd(self):
        return self.grid.nd(self.values)


@dataclass(frozen=True)
class LocalNormSpec:
    """Family, parameters, measure ``nu`` and normalising functional ``Y``.

    ``functional`` may be any object with ``level_values(level)`` and
    ``value(cube)``; ``None`` means ``Y(Q) = nu(Q)``.  When
    ``check_average`` is set, construction verifies ``nu(Q) <= Y(Q)`` on
    every dyadic cube, which is what makes ``||chi_Q|| <= 1``.
    """

    family: str
    measure: CellMeasure
    p: Optional[float] = None
    phi: Optional[YoungFunction] = None
    exponent: Optional[ExponentFunction] = None
    functional: object = None
    check_average: bool = True

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown family {self.family!r}")
        if self.family == 'lp' and not (self.p is not None and self.p >= 1):
            raise ParameterError("lp needs p >= 1")
        if self.family == 'weak-lp' and not (self.p is not None
                                             and self.p > 0):
            raise ParameterError("weak-lp needs p > 0")
        if self.family in ('orlicz', 'weak-orlicz') and self.phi is None:
            raise ParameterError(f"{self.family} needs a Young function")
        if self.family == 'variable' and self.exponent is None:
            raise ParameterError("variable needs an exponent function")
        if self.functional is not None and self.check_average:
            self._check_average()

    def _check_average(self):
        grid = self.measure.grid
        for level in range(grid.depth + 1):
            y = np.asarray(self.functional.level_values(level), dtype=float)
            nu = self.measure.level_masses(level)
            bad = nu > y * (1 + 1e-12)
            if np.any(bad):
                cube = grid.cube_at(level, int(np.argmax(bad)))
                raise FunctionalError(
                    f"nu(Q) > Y(Q) at {cube}: the average property fails")

    @property
    def geom_K(self):
        return 2.0 if self.family.startswith('weak') else 1.0

    @classmethod
    def lp(cls, measure, p, functional=None, **kw):
        return cls('lp', measure, p=float(p), functional=functional, **kw)

    @classmethod
    def weak_lp(cls, measure, p, functional=None, **kw):
        return cls('weak-lp', measure, p=float(p), functional=functional,
                   **kw)

    @classmethod
    def orlicz(cls, measure, phi, functional=None, **kw):
        return cls('orlicz', measure, phi=phi, functional=functional, **kw)

    @classmethod
    def weak_orlicz(cls, measure, phi, functional=None, **kw):
        return cls('weak-orlicz', measure, phi=phi, functional=functional,
                   **kw)

    @classmethod
    def variable(cls, measure, exponent, functional=None, **kw):
        return cls('variable', measure, exponent=exponent,
                   functional=functional, **kw)

    def y_level(self, level):
        """``Y`` for every cube of ``level`` in row-major order."""
        if self.functional is None:
            return self.measure.level_masses(level)
        return np.asarray(self.functional.level_values(level), dtype=float)

    def y_value(self, cube):
        if self.functional is None:
            return self.measure.mass(cube)
        return float(self.functional.value(cube))

    def blocks(self, values, level, root=None):
        """Block layout of cell ``values`` and normalised weights.

        With ``root`` the blocks cover the subcubes of ``root`` at absolute
        ``level``; otherwise all cubes of ``level``.
        """
        grid = self.measure.grid
        vals = grid.nd(values)
        nu = self.measure.nd
        if root is None:
            y = self.y_level(level)
            rel = level
        else:
            sl = grid.slices(root)
            vals, nu = vals[sl], nu[sl]
            rel = level - root.level
            y = _sub_level(self.y_level(level), grid, root, level)
        if np.any(~(y > 0)):
            raise FunctionalError("Y(Q) must be positive")
        vb = level_blocks(vals, rel)
        wb = level_blocks(nu, rel) / y[:, None]
        return vb, wb

    def exponent_blocks(self, level, root=None):
        if self.exponent is None:
            return None
        grid = self.measure.grid
        p = self.exponent.nd
        if root is not None:
            p = p[grid.slices(root)]
            level = level - root.level
        return level_blocks(p, level)


def _sub_level(flat_level_values, grid, root, level):
    """Entries of a level array that lie inside ``root``, row-major."""
    m = 1 << level
    arr = np.asarray(flat_level_values).reshape((m,) * grid.dimension)
    s = 1 << (level - root.level)
    sl = tuple(slice(i * s, (i + 1) * s) for i in root.index)
    return arr[sl].ravel()


# ---------------------------------------------------------------------------
# block kernels

def _lp_blocks(A, W, p):
    scale = A.max(axis=1)
    out = np.zeros(A.shape[0])
    nz = scale > 0
    if np.any(nz):
        r = A[nz] / scale[nz, None]
        out[nz] = scale[nz] * np.sum(W[nz] * r ** p, axis=1) ** (1.0 / p)
    return out


def _sorted_tail(A, W):
    """Values sorted descending with the cumulative weight of ``{|f| >= v}``.
    """
    order = np.argsort(-A, axis=1, kind='stable')
    As = np.take_along_axis(A, order, axis=1)
    Ws = np.take_along_axis(W, order, axis=1)
    return As, np.cumsum(Ws, axis=1)


def _weak_lp_blocks(A, W, p):
    As, C = _sorted_tail(A, W)
    return np.max(As * C ** (1.0 / p), axis=1)


def _orlicz_modular_blocks(A, W, phi, lam):
    with np.errstate(over='ignore', invalid='ignore', divide='ignore'):
        v = phi(A / lam[:, None])
        v = np.where(W > 0, W * v, 0.0)
    return np.sum(v, axis=1)


def _variable_modular_blocks(A, W, P, lam):
    with np.errstate(over='ignore', invalid='ignore', divide='ignore'):
        v = (A / lam[:, None]) ** P
        v = np.where(W > 0, W * v, 0.0)
    return np.sum(v, axis=1)


def _weak_orlicz_sup(As, C, phi, lam):
    with np.errstate(over='ignore', invalid='ignore', divide='ignore'):
        v = phi(As / lam[:, None]) * C
        v = np.where(As > 0, v, 0.0)
    return np.max(v, axis=1)


def _solve_scale(modular, A, W):
    """Smallest ``lam`` with ``modular(lam) <= 1`` for every row.

    ``modular`` maps a vector of scales to a vector of modular values and is
    non-increasing in each entry.  Rows whose effective support is empty
    get 0.
    """
    eff = np.where(W > 0, A, 0.0)
    top = eff.max(axis=1) if eff.size else np.zeros(A.shape[0])
    out = np.zeros(A.shape[0])
    live = top > 0
    if not np.any(live):
        return out
    idx = np.flatnonzero(live)
    hi = top[idx].copy()
    sub = lambda lam: modular(lam, idx)
    for _ in range(MAX_EXPAND):
        bad = ~(sub(hi) <= 1.0)
        if not np.any(bad):
            break
        hi[bad] *= 2.0
    else:
        raise OverflowRangeError("modular never drops below 1 within the cap")
    lo = hi / 2.0
    for _ in range(MAX_EXPAND):
        good = sub(lo) <= 1.0
        if not np.any(good):
            break
        hi[good] = lo[good]
        lo[good] /= 2.0
    else:
        raise OverflowRangeError("modular stays below 1 as the scale -> 0")
    for _ in range(200):
        if np.all(hi - lo <= RTOL * hi):
            break
        mid = np.sqrt(lo * hi)
        ok = sub(mid) <= 1.0
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)
    out[idx] = hi
    return out


def norm_blocks(spec, A, W, P=None):
    """Norm of each row of ``|f|`` blocks ``A`` with normalised weights ``W``.

    ``P`` holds exponent blocks for the variable family.
    """
    A = np.abs(np.asarray(A, dtype=float))
    W = np.asarray(W, dtype=float)
    fam = spec.family
    if fam == 'lp':
        return _lp_blocks(A, W, spec.p)
    if fam == 'weak-lp':
        return _weak_lp_blocks(A, W, spec.p)
    if fam == 'orlicz':
        phi = spec.phi
        return _solve_scale(
            lambda lam, i: _orlicz_modular_blocks(A[i], W[i], phi, lam),
            A, W)
    if fam == 'weak-orlicz':
        phi = spec.phi
        As, C = _sorted_tail(A, W)
        return _solve_scale(
            lambda lam, i: _weak_orlicz_sup(As[i], C[i], phi, lam), A, W)
    if P is None:
        raise ParameterError("variable family needs exponent blocks")
    return _solve_scale(
        lambda lam, i: _variable_modular_blocks(A[i], W[i], P[i], lam), A, W)


def modular_blocks(spec, A, W, lam, P=None):
    """The family's modular at scale ``lam`` (one per row)."""
    A = np.abs(np.asarray(A, dtype=float))
    lam = np.broadcast_to(np.asarray(lam, dtype=float), (A.shape[0],))
    fam = spec.family
    if fam == 'orlicz':
        return _orlicz_modular_blocks(A, W, spec.phi, lam)
    if fam == 'variable':
        return _variable_modular_blocks(A, W, P, lam)
    if fam == 'lp':
        return _orlicz_modular_blocks(A, W, lambda t: t ** spec.p, lam)
    As, C = _sorted_tail(A, W)
    if fam == 'weak-orlicz':
        return _weak_orlicz_sup(As, C, spec.phi, lam)
    return _weak_orlicz_sup(As, C, lambda t: t ** spec.p, lam)


# ---------------------------------------------------------------------------
# single-cube API

def _cube_blocks(f, cube, spec):
    grid = spec.measure.grid
    grid.check(cube)
    vb, wb = spec.blocks(_vals(f), cube.level, root=cube)
    pb = spec.exponent_blocks(cube.level, root=cube)
    return vb, wb, pb


def _require(spec, *families):
    if spec.family not in families:
        raise ParameterError(
            f"expected family in {families}, got {spec.family!r}")


def local_norm(f, cube, spec):
    """Dispatch to the family of ``spec``."""
    vb, wb, pb = _cube_blocks(f, cube, spec)
    return float(norm_blocks(spec, vb, wb, pb)[0])


def lp_norm(f, cube, spec):
    """``((1/Y(Q)) sum_Q |f|**p dnu)**(1/p)``."""
    _require(spec, 'lp')
    return local_norm(f, cube, spec)


def weak_lp_norm(f, cube, spec):
    """``sup_t t (nu({|f| > t} cap Q) / Y(Q))**(1/p)``, exact over the cell
    values."""
    _require(spec, 'weak-lp')
    return local_norm(f, cube, spec)


def orlicz_modular(f, cube, spec, lam):
    """``(1/Y(Q)) sum_Q phi(|f| / lam) dnu``."""
    _require(spec, 'orlicz')
    if not lam > 0:
        raise ParameterError("lam must be positive")
    vb, wb, _ = _cube_blocks(f, cube, spec)
    val = float(modular_blocks(spec, vb, wb, lam)[0])
    if not np.isfinite(val):
        raise OverflowRangeError(
            f"phi overflowed at scale {lam:g}; widen the bracket")
    return val


def luxemburg_norm(f, cube, spec):
    """``inf{lam > 0 : orlicz_modular(f, lam) <= 1}`` by bisection."""
    _require(spec, 'orlicz')
    return local_norm(f, cube, spec)


def weak_orlicz_norm(f, cube, spec):
    """``inf{lam : sup_t phi(t) nu({|f| > lam t} cap Q) / Y(Q) <= 1}``.

    The inner supremum is exact: it is attained from the left at one of
    the thresholds ``|f|-value / lam``.
    """
    _require(spec, 'weak-orlicz')
    return local_norm(f, cube, spec)


def variable_modular(f, cube, spec, lam):
    """``(1/Y(Q)) sum_Q (|f| / lam)**p(x) dnu``."""
    _require(spec, 'variable')
    if not lam > 0:
        raise ParameterError("lam must be positive")
    vb, wb, pb = _cube_blocks(f, cube, spec)
    val = float(modular_blocks(spec, vb, wb, lam, pb)[0])
    if not np.isfinite(val):
        raise OverflowRangeError(
            f"modular overflowed at scale {lam:g}; widen the bracket")
    return val


def variable_norm(f, cube, spec):
    """Luxemburg norm for the variable exponent of ``spec``."""
    _require(spec, 'variable')
    return local_norm(f, cube, spec)


def weak_orlicz_closed_form(f, cube, spec):
    """``max_k v_k / phi^{-1}(1 / C_k)`` over the sorted cell values.

    Independent route to the weak Orlicz norm used to cross-check the
    bisection.
    """
    _require(spec, 'weak-orlicz')
    vb, wb, _ = _cube_blocks(f, cube, spec)
    As, C = _sorted_tail(np.abs(vb), wb)
    best = 0.0
    for v, c in zip(As[0], C[0]):
        if v > 0 and c > 0:
            best = max(best, v / young_inverse(spec.phi, 1.0 / c))
    return best


def modular_at_norm(f, cube, spec, value):
    """Modular evaluated at the returned norm (diagnostic)."""
    if value <= 0:
        return 0.0
    vb, wb, pb = _cube_blocks(f, cube, spec)
    return float(modular_blocks(spec, vb, wb, value, pb)[0])
