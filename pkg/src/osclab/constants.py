"""Explicit constants of the quantitative John-Nirenberg estimates.

``theorem_constant`` minimises

    c_mu 2**n_mu L / (1 - C_Y K Psi^{-1}(1/L))

over the feasible ``L``; ``laplace_bound`` inverts the Laplace transform of
``phi'``; the remaining functions are closed-form evaluations.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import integrate

from .errors import GrowthTooFastError, InfeasibleError, ParameterError
from .young import young_inverse

__all__ = ['JNParams', 'Bijection', 'theorem_constant', 'laplace_transform',
           'laplace_bound', 'orlicz_constant', 'plog_closed_form_cap',
           'alt_young_constant', 'variable_c_n', 'variable_jn_constant',
           'chebyshev_chain']

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class JNParams:
    """Constants ``c1, c2 > 1`` of the exponential tail
    ``mu(|f - f_Q| > t) <= c1 exp(-t / (c2 ||f||)) mu(Q)``."""

    c1: float = 2.0
    c2: float = 2.0

    def __post_init__(self):
        if not (self.c1 > 1 and self.c2 > 1):
            raise ParameterError("c1 and c2 must exceed 1")


class Bijection:
    """Increasing bijection of ``[0, 1]`` given with its inverse."""

    def __init__(self, name, forward, inverse, check=True):
        self.name = name
        self.forward = forward
        self.inverse = inverse
        if check:
            self._check()

    def _check(self):
        t = np.linspace(0.0, 1.0, 201)
        fwd = np.array([self.forward(x) for x in t])
        if abs(fwd[0]) > 1e-12 or abs(fwd[-1] - 1.0) > 1e-12:
            raise ParameterError(f"{self.name}: need Psi(0)=0, Psi(1)=1")
        # large powers underflow to 0 near the origin
        step = np.diff(fwd)
        if np.any(step < 0) or np.any(step[fwd[1:] > 0] <= 0):
            raise ParameterError(f"{self.name}: Psi is not increasing")
        back = np.array([self.forward(self.inverse(x)) for x in t])
        if np.max(np.abs(back - t)) > 1e-10:
            raise ParameterError(f"{self.name}: inverse mismatch")

    def __repr__(self):
        return f"Bijection({self.name})"

    @classmethod
    def identity(cls):
        return cls('identity', lambda t: t, lambda t: t)

    @classmethod
    def power(cls, s):
        """``Psi(t) = t**s`` so ``Psi^{-1}(t) = t**(1/s)``."""
        s = float(s)
        if not s > 0:
            raise ParameterError("power bijection needs s > 0")
        return cls(f"power:{s:g}", lambda t: t ** s,
                   lambda t: t ** (1.0 / s))

    @classmethod
    def orlicz(cls, phi):
        """``Psi(t) = 1/phi(1/t)``, ``Psi^{-1}(t) = 1/phi^{-1}(1/t)``."""
        def fwd(t):
            return 0.0 if t <= 0 else 1.0 / float(phi(1.0 / t))

        def inv(t):
            return 0.0 if t <= 0 else 1.0 / young_inverse(phi, 1.0 / t)
        return cls(f"orlicz:{phi.name}", fwd, inv)


def _log_objective(psi, ck, log_c):
    def obj(u):
        d = 1.0 - ck * psi.inverse(math.exp(-u))
        if not d > 0:
            return math.inf
        return log_c + u - math.log(d)
    return obj


def theorem_constant(psi, C_Y=1.0, K=1.0, c_mu=1.0, n_mu=1.0, scan=1600,
                     span=1e4):
    """Minimise ``c_mu 2**n_mu L / (1 - C_Y K Psi^{-1}(1/L))``.

    Works on ``u = log L`` starting at ``u0 = log max(1, 1/Psi(1/(C_Y K)))``:
    a geometric scan of offsets in ``[1e-12, span]`` brackets the minimum,
    then golden-section search refines it.  Returns ``(C, L)``.
    """
    ck = float(C_Y) * float(K)
    if not ck >= 1:
        raise ParameterError("need C_Y K >= 1")
    if not c_mu >= 1:
        raise ParameterError("c_mu must be at least 1")
    log_c = math.log(c_mu) + n_mu * math.log(2.0)
    edge = psi.forward(1.0 / ck)
    u0 = max(0.0, -math.log(edge)) if edge > 0 else None
    if u0 is None:
        raise InfeasibleError("Psi(1/(C_Y K)) vanishes")
    obj = _log_objective(psi, ck, log_c)
    us = u0 + np.geomspace(1e-12, span, scan)
    vals = np.full(us.size, math.inf)
    best = math.inf
    for j, u in enumerate(us):
        # obj(u) >= log_c + u, so nothing beyond this point can win
        if log_c + u > best:
            us, vals = us[:j + 1], vals[:j + 1]
            vals[j] = obj(u)
            break
        vals[j] = obj(u)
        best = min(best, vals[j])
    if not np.any(np.isfinite(vals)):
        raise InfeasibleError("the denominator is never positive in range")
    i = int(np.argmin(vals))
    a = us[i - 1] if i > 0 else u0
    b = us[i + 1] if i + 1 < us.size else us[-1]
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = obj(c), obj(d)
    for _ in range(300):
        if b - a <= 1e-13 * max(1.0, abs(b)):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = obj(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = obj(d)
    u, best = min([(c, fc), (d, fd), (us[i], vals[i])], key=lambda x: x[1])
    return math.exp(best), math.exp(u)


def laplace_transform(phi, s, tol=1e-16, max_pieces=2000):
    """``int_0^inf phi'(t) exp(-s t) dt`` by piecewise adaptive quadrature.

    Substituting ``u = s t`` the integrand is ``phi'(u/s) exp(-u) / s``;
    pieces double in length from ``u = 1`` (with a break at ``t = 1``)
    until a piece adds less than ``tol`` relative to the running total.
    Returns ``inf`` when the pieces stop shrinking.
    """
    if not s > 0:
        raise ParameterError("s must be positive")

    def g(u):
        with np.errstate(over='ignore', invalid='ignore'):
            v = float(phi.derivative(u / s)) * math.exp(-u)
        return v if math.isfinite(v) else math.inf

    edges = [0.0, 1.0]
    total = 0.0
    prev = math.inf
    growing = 0
    while len(edges) < max_pieces:
        a, b = edges[-2], edges[-1]
        pts = [s] if a < s < b else None
        piece, _ = integrate.quad(g, a, b, points=pts, epsabs=0.0,
                                  epsrel=1e-12, limit=200)
        if not math.isfinite(piece):
            return math.inf
        total += piece
        if b > 4.0 * max(1.0, s) and piece <= tol * total:
            return total / s
        growing = growing + 1 if piece > prev and b > 64 * max(1, s) else 0
        if growing > 20:
            return math.inf
        prev = piece
        edges.append(2.0 * b)
    return math.inf


def laplace_bound(phi, jn=JNParams(), s_cap=1e8):
    """``c2 * s`` where ``s`` solves ``Laplace{phi'}(s) = 1/c1``.

    The transform is decreasing in ``s``, so the root is bracketed
    geometrically and bisected to 1e-12 relative.
    """
    target = 1.0 / jn.c1
    lo = hi = 1.0
    val = laplace_transform(phi, hi)
    while not val <= target:
        lo, hi = hi, hi * 2.0
        if hi > s_cap:
            raise GrowthTooFastError(
                f"{phi.name}: transform above 1/c1 up to s={s_cap:g}")
        val = laplace_transform(phi, hi)
    if lo == hi:
        while laplace_transform(phi, lo) <= target:
            lo /= 2.0
            if lo < 1e-12:
                raise ParameterError("transform stays below 1/c1")
    for _ in range(200):
        if hi - lo <= 1e-12 * hi:
            break
        mid = math.sqrt(lo * hi)
        if laplace_transform(phi, mid) <= target:
            hi = mid
        else:
            lo = mid
    return jn.c2 * hi


def orlicz_constant(phi, c=1.0, c_mu=1.0, n_mu=1.0, bounds=None):
    """``c_mu 2**n_mu phi(c (1 + 1/[phi]_1)) ([phi]_2 + 1)``.

    ``bounds`` overrides the analytic growth bounds carried by ``phi``.
    """
    if bounds is None:
        bounds = phi.analytic_bounds
    if bounds is None:
        raise ParameterError(f"{phi.name}: no growth bounds available")
    b1, b2 = bounds
    if not b1 > 0:
        raise ParameterError("[phi]_1 must be positive")
    return float(c_mu * 2.0 ** n_mu * phi(c * (1.0 + 1.0 / b1)) * (b2 + 1.0))


def plog_closed_form_cap(p, alpha, c_mu=1.0, n_mu=1.0):
    """``c_mu 2**n_mu e 2**alpha (p + alpha + 1)``, the closed-form cap of
    :func:`orlicz_constant` for ``plog(p, alpha)``."""
    return c_mu * 2.0 ** n_mu * math.e * 2.0 ** alpha * (p + alpha + 1.0)


def alt_young_constant(p, alpha, c_mu=1.0, n_mu=1.0):
    """Constant for ``plog_alt(p, alpha)``:
    ``c_mu 2**n_mu e L**(alpha (p-1)) log(e + 2 L**alpha)**alpha
    (p + alpha + 1)`` with ``L = log(e + 1)``."""
    lg = math.log(math.e + 1.0)
    return (c_mu * 2.0 ** n_mu * math.e * lg ** (alpha * (p - 1.0))
            * math.log(math.e + 2.0 * lg ** alpha) ** alpha
            * (p + alpha + 1.0))


def variable_c_n(p_plus, n=1):
    """``C(n)`` with ``C(n) q`` bounding the Lebesgue-measure constant for
    every exponent bounded by ``q >= p_plus``.

    Uses the optimiser with ``Psi^{-1}(t) = t**(1/p_plus)``, ``C_Y = K = 1``
    and ``c_mu 2**n_mu = 2**n``; since that constant divided by ``q``
    decreases in ``q``, dividing by ``p_plus`` gives a valid ``C(n)``.
    """
    c, _ = theorem_constant(Bijection.power(p_plus), 1.0, 1.0, 1.0, n)
    return c / p_plus


def variable_jn_constant(c_n, p_plus):
    """``log 2 / (2 C(n) p_plus)``."""
    if not c_n > 0 or not p_plus >= 1:
        raise ParameterError("need C(n) > 0 and p_plus >= 1")
    return math.log(2.0) / (2.0 * c_n * p_plus)


def chebyshev_chain(f, exponent, cube, t, r, measure=None):
    """Both sides of the Chebyshev bound in a variable Lebesgue space.

    ``lhs = ||chi_{|f - f_Q| >= t}||`` in ``L^{p(.)}(Q)`` and
    ``rhs = t**-r ||f - f_Q||**r`` in ``L^{r p(.)}(Q)``, both normalised by
    ``measure`` (Lebesgue cells by default).  Returns ``(lhs, rhs)``.
    """
    from .grid import CellMeasure, cube_average
    from .norms import LocalNormSpec, variable_norm

    if not t > 0:
        raise ParameterError("t must be positive")
    if not r >= 1:
        raise ParameterError("r must be at least 1")
    grid = exponent.grid
    if measure is None:
        measure = CellMeasure.lebesgue(grid)
    dev = f - cube_average(f, cube, measure)
    level_set = dev.with_values((np.abs(dev.values) >= t).astype(float))
    inside = level_set.nd[grid.slices(cube)]
    lhs = 0.0
    if np.any(inside > 0):
        lhs = variable_norm(level_set, cube,
                            LocalNormSpec.variable(measure, exponent))
    big = variable_norm(dev, cube,
                        LocalNormSpec.variable(measure, exponent.scaled(r)))
    return float(lhs), float(t ** (-r) * big ** r)
