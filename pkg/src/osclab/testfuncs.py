"""Built-in test functions, weights and measures."""

import numpy as np

from .errors import ParameterError
from .grid import CellFunction, CellMeasure, upsample

__all__ = ['log_reciprocal', 'indicator', 'random_step', 'power_weight',
           'recursive_split_measure', 'builtin']


def log_reciprocal(grid, x0=None):
    """``log(1 / |x - x0|)`` at cell midpoints (``x0`` defaults to the
    origin corner)."""
    x0 = np.zeros(grid.dimension) if x0 is None else np.asarray(x0, float)
    r = np.linalg.norm(grid.cell_centers() - x0, axis=1)
    if np.any(r == 0):
        raise ParameterError("x0 sits on a cell midpoint")
    return CellFunction(grid, -np.log(r))


def indicator(grid, theta=0.5):
    """Indicator of ``{x_0 < origin + theta * side}`` on the first axis."""
    if not 0 <= theta <= 1:
        raise ParameterError("theta must lie in [0, 1]")
    x = grid.cell_centers()[:, 0]
    return CellFunction(grid, (x < grid.origin[0] + theta * grid.side)
                        .astype(float))


def random_step(grid, seed=0, levels=3, spread=1.0):
    """Sum of random piecewise-constant layers on random dyadic levels.

    Each layer is constant on the cubes of a random level and has
    log-normal amplitudes, so the result mixes smooth and spiky parts.
    """
    rng = np.random.default_rng(seed)
    out = np.zeros(grid.shape)
    for _ in range(levels):
        k = int(rng.integers(1, grid.depth + 1))
        layer = rng.standard_normal((1 << k,) * grid.dimension)
        layer *= np.exp(spread * rng.standard_normal(layer.shape))
        out += upsample(layer, 1 << (grid.depth - k))
    return CellFunction(grid, out.ravel())


def power_weight(grid, delta):
    """Exact cell averages of ``x_0**delta`` on ``[0, 1]`` along the first
    axis; needs ``delta > -1``."""
    if not delta > -1:
        raise ParameterError("power weight needs delta > -1")
    edges = np.linspace(0.0, 1.0, (1 << grid.depth) + 1)
    e = delta + 1.0
    avg = (edges[1:] ** e - edges[:-1] ** e) / (e * np.diff(edges))
    shape = [1] * grid.dimension
    shape[0] = avg.size
    vals = np.broadcast_to(avg.reshape(shape), grid.shape)
    return CellFunction(grid, np.ascontiguousarray(vals).ravel())


def recursive_split_measure(grid, seed=0, max_ratio=4.0, doubling_dim=None):
    """Multiplicative cascade: every cube splits its mass among its children
    in proportions drawn from ``[1, max_ratio]``."""
    if not max_ratio >= 1:
        raise ParameterError("max_ratio must be at least 1")
    rng = np.random.default_rng(seed)
    mass = np.ones((1,) * grid.dimension)
    for _ in range(grid.depth):
        mass = upsample(mass, 2)
        w = rng.uniform(1.0, max_ratio, mass.shape)
        blocks = w.reshape(sum(((s // 2, 2) for s in w.shape), ()))
        axes = tuple(range(1, 2 * grid.dimension, 2))
        norm = blocks.sum(axis=axes, keepdims=True)
        mass = mass * (blocks / norm).reshape(w.shape)
    return CellMeasure(grid, mass.ravel(), doubling_dim)


def builtin(grid, text):
    """Resolve ``log-reciprocal[:x0]``, ``indicator[:theta]`` or
    ``random-step[:seed]``."""
    name, _, arg = text.partition(':')
    try:
        if name == 'log-reciprocal':
            x0 = None if not arg else [float(v) for v in arg.split(',')]
            return log_reciprocal(grid, x0)
        if name == 'indicator':
            return indicator(grid, float(arg) if arg else 0.5)
        if name == 'random-step':
            return random_step(grid, int(arg) if arg else 0)
    except ValueError as exc:
        raise ParameterError(f"bad built-in {text!r}: {exc}") from None
    raise ParameterError(f"unknown built-in function {text!r}")
