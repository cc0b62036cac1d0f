"""Young functions, their inverses and growth bounds.

Three built-in families are provided::

    power(p)            t**p
    plog(p, alpha)      t**p * (1 + log+ t)**alpha
    plog_alt(p, alpha)  t**p * (log(e + t) / log(e + 1))**alpha

with ``log+ t = max(log t, 0)``.  The first two are submultiplicative; the
third is only quasi-submultiplicative with constant ``log(e + 1)**alpha``.
"""

from dataclasses import dataclass, field
import math
from typing import Callable, Optional

import numpy as np

from .errors import MalformedYoungError, OverflowRangeError, ParameterError

__all__ = ['YoungFunction', 'power', 'plog', 'plog_alt', 'from_name',
           'young_inverse', 'growth_bounds', 'check_submultiplicative']

INVERSE_CAP = 1e12


@dataclass(frozen=True)
class YoungFunction:
    """A Young function with its derivative and submultiplicativity constant.

    ``func`` and ``deriv`` must accept numpy arrays.  When ``deriv`` is
    omitted a centred finite difference with step ``fd_step`` (relative to
    ``t``) is used.  ``analytic_bounds`` holds the exact ``([phi]_1,
    [phi]_2)`` pair when it is known in closed form.
    """

    name: str
    func: Callable
    deriv: Optional[Callable] = None
    submult_c: float = 1.0
    inverse: Optional[Callable] = None
    analytic_bounds: Optional[tuple] = None
    fd_step: float = 1e-6
    validate: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        if self.submult_c < 1:
            raise MalformedYoungError("submultiplicativity constant must be "
                                      ">= 1")
        if self.validate:
            _validate(self)

    def __call__(self, t):
        return self.func(np.asarray(t, dtype=float))

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        if self.deriv is not None:
            return self.deriv(t)
        h = self.fd_step * np.maximum(t, 1.0)
        lo = np.maximum(t - h, 0.0)
        return (self.func(t + h) - self.func(lo)) / (t + h - lo)

    @property
    def has_analytic_deriv(self):
        return self.deriv is not None


def _validate(phi):
    with np.errstate(over='ignore', invalid='ignore'):
        at = phi(np.array([0.0, 1.0]))
    if abs(at[0]) > 1e-12 or abs(at[1] - 1.0) > 1e-12:
        raise MalformedYoungError(
            f"{phi.name}: need phi(0)=0 and phi(1)=1, got {at[0]!r}, {at[1]!r}")
    for hi in (2.0, 50.0):
        t = np.linspace(0.0, hi, 801)
        with np.errstate(over='ignore'):
            v = phi(t)
        v = v[np.isfinite(v)]
        if np.any(np.diff(v) <= 0):
            raise MalformedYoungError(f"{phi.name}: not strictly increasing")
        d2 = v[2:] - 2 * v[1:-1] + v[:-2]
        scale = np.maximum(1.0, np.abs(v[1:-1]))
        if np.any(d2 < -1e-9 * scale):
            raise MalformedYoungError(f"{phi.name}: not convex")
    s = np.logspace(-3, 3, 25)
    ss, tt = np.meshgrid(s, s)
    with np.errstate(over='ignore', invalid='ignore'):
        ratio = phi(ss * tt) / (phi(ss) * phi(tt))
    ratio = ratio[np.isfinite(ratio)]
    if ratio.size and ratio.max() > phi.submult_c * (1 + 1e-9):
        raise MalformedYoungError(
            f"{phi.name}: phi(st) <= c phi(s) phi(t) fails with c="
            f"{phi.submult_c}; worst ratio {ratio.max():.6g}")


def power(p):
    """``phi_p(t) = t**p``."""
    p = float(p)
    if p < 1:
        raise ParameterError("power Young function needs p >= 1")
    return YoungFunction(
        name=f"power:{p:g}",
        func=lambda t: t ** p,
        deriv=lambda t: p * t ** (p - 1),
        submult_c=1.0,
        inverse=lambda y: np.asarray(y, dtype=float) ** (1.0 / p),
        analytic_bounds=(p, p),
    )


def _log_plus(t):
    with np.errstate(divide='ignore'):
        return np.where(t > 1, np.log(np.maximum(t, 1.0)), 0.0)


def plog(p, alpha):
    """``phi_{p,alpha}(t) = t**p (1 + log+ t)**alpha``; submultiplicative."""
    p, alpha = float(p), float(alpha)
    if p < 1 or alpha < 0:
        raise ParameterError("plog needs p >= 1 and alpha >= 0")

    def func(t):
        return t ** p * (1.0 + _log_plus(t)) ** alpha

    def deriv(t):
        lg = 1.0 + _log_plus(t)
        tp1 = t ** (p - 1)
        upper = p * tp1 * lg ** alpha + alpha * tp1 * lg ** (alpha - 1)
        return np.where(t > 1, upper, p * tp1)

    return YoungFunction(
        name=f"plog:{p:g}:{alpha:g}",
        func=func,
        deriv=deriv,
        submult_c=1.0,
        analytic_bounds=(p, p + alpha),
    )


def plog_alt(p, alpha):
    """``t**p * (log(e+t)/log(e+1))**alpha``; quasi-submultiplicative."""
    p, alpha = float(p), float(alpha)
    if p < 1 or alpha < 0:
        raise ParameterError("plog-alt needs p >= 1 and alpha >= 0")
    norm = math.log(math.e + 1.0)

    def func(t):
        return t ** p * (np.log(math.e + t) / norm) ** alpha

    def deriv(t):
        lg = np.log(math.e + t)
        return (t ** (p - 1) * (lg / norm) ** alpha
                * (p + alpha * t / ((math.e + t) * lg)))

    return YoungFunction(
        name=f"plog-alt:{p:g}:{alpha:g}",
        func=func,
        deriv=deriv,
        submult_c=norm ** alpha,
    )


def from_name(text):
    """Build a family from ``power:p``, ``plog:p:alpha`` or
    ``plog-alt:p:alpha``."""
    parts = text.split(':')
    try:
        args = [float(x) for x in parts[1:]]
        if parts[0] == 'power' and len(args) == 1:
            return power(*args)
        if parts[0] == 'plog' and len(args) == 2:
            return plog(*args)
        if parts[0] == 'plog-alt' and len(args) == 2:
            return plog_alt(*args)
    except ValueError:
        pass
    raise ParameterError(f"unknown Young function {text!r}")


def young_inverse(phi, y):
    """Solve ``phi(t) = y`` for ``t >= 0`` by bracketing and bisection.

    The bisection runs on a multiplicative scale until the bracket is
    relatively tight to about 1e-15, which leaves
    ``|phi(t) - y| <= 1e-10 * max(1, y)`` for every family here.
    """
    y = float(y)
    if y < 0 or not math.isfinite(y):
        raise ParameterError(f"young_inverse needs finite y >= 0, got {y}")
    if y == 0:
        return 0.0
    if phi.inverse is not None:
        return float(phi.inverse(y))

    def f(t):
        with np.errstate(over='ignore'):
            return float(phi(t))

    lo, hi = 1.0, 1.0
    if f(1.0) < y:
        while f(hi) < y:
            hi *= 2.0
            if hi > INVERSE_CAP:
                if f(INVERSE_CAP) < y:
                    raise OverflowRangeError(
                        f"{phi.name}: y={y:g} above phi at the cap "
                        f"{INVERSE_CAP:g}")
                hi = INVERSE_CAP
                break
        lo = hi / 2.0
    else:
        while f(lo) >= y:
            lo /= 2.0
            if lo < 1e-300:
                return 0.0
        hi = lo * 2.0
    for _ in range(400):
        if hi - lo <= 1e-15 * hi:
            break
        mid = math.sqrt(lo * hi)
        if not lo < mid < hi:
            break
        if f(mid) < y:
            lo = mid
        else:
            hi = mid
    return lo if abs(f(lo) - y) < abs(f(hi) - y) else hi


def growth_bounds(phi, t_max=1e9, samples=20001):
    """Sampled ``(inf, sup)`` of ``t phi'(t) / phi(t)`` over ``(1, t_max]``.

    Points are log-spaced in ``t - 1`` from 1e-10 so both ends of the range
    are resolved.  The values only bracket the exact best constants from
    the inside.
    """
    if not t_max > 1:
        raise ParameterError("t_max must exceed 1")
    if samples < 100:
        raise ParameterError("need at least 100 samples")
    t = 1.0 + np.geomspace(1e-10, t_max - 1.0, samples)
    with np.errstate(over='ignore', invalid='ignore'):
        val = phi(t)
        ratio = t * phi.derivative(t) / val
    if np.any(val[np.isfinite(val)] <= 0):
        raise MalformedYoungError(f"{phi.name}: phi(t)=0 for some t > 1")
    ratio = ratio[np.isfinite(ratio)]
    if ratio.size == 0:
        raise MalformedYoungError(f"{phi.name}: no finite growth samples")
    return float(ratio.min()), float(ratio.max())


def check_submultiplicative(phi, trials=10000, seed=0):
    """Sample ``phi(st) / (phi(s) phi(t))`` with ``s, t`` log-uniform in
    ``[1e-3, 1e6]``.

    Returns ``(holds, worst_ratio)``; ``holds`` compares the worst ratio
    with ``phi.submult_c``.
    """
    if trials < 1:
        raise ParameterError("trials must be positive")
    rng = np.random.default_rng(seed)
    s = 10.0 ** rng.uniform(-3, 6, trials)
    t = 10.0 ** rng.uniform(-3, 6, trials)
    with np.errstate(over='ignore', invalid='ignore'):
        ratio = phi(s * t) / (phi(s) * phi(t))
    ratio = ratio[np.isfinite(ratio)]
    worst = float(ratio.max()) if ratio.size else float('nan')
    return bool(worst <= phi.submult_c * (1 + 1e-12)), worst
