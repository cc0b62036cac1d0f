"""Reading and writing cell arrays.

Two formats are supported:

* CSV: one value per line in row-major cell order.  Blank lines and lines
  starting with ``#`` are ignored.
* Binary: a 16-byte header (``b"OSCL"``, then little-endian ``u32``
  dimension, ``u32`` depth and a reserved ``u32``) followed by the cell
  values as little-endian float64.
"""

import csv
import struct
from pathlib import Path

import numpy as np

from .errors import InputParseError
from .grid import Grid

__all__ = ['MAGIC', 'read_csv', 'write_csv', 'read_binary', 'write_binary',
           'load_cells', 'save_cells']

MAGIC = b"OSCL"
_HEADER = struct.Struct('<4sIII')


def read_csv(path):
    """Values of a one-column CSV file as a float array."""
    path = Path(path)
    out = []
    try:
        with open(path, newline='') as fh:
            for lineno, row in enumerate(csv.reader(fh), start=1):
                if not row or not row[0].strip() or \
                        row[0].lstrip().startswith('#'):
                    continue
                if len(row) != 1:
                    raise InputParseError(
                        f"expected one value, got {len(row)}", path, lineno)
                try:
                    out.append(float(row[0]))
                except ValueError:
                    raise InputParseError(
                        f"not a number: {row[0]!r}", path, lineno) from None
    except OSError as exc:
        raise InputParseError(f"cannot read: {exc.strerror}", path) from None
    if not out:
        raise InputParseError("no values", path)
    return np.array(out)


def write_csv(path, values):
    with open(path, 'w', newline='') as fh:
        for v in np.asarray(values, dtype=float).ravel():
            fh.write(f"{float(v)!r}\n")


def read_binary(path):
    """Return ``(dimension, depth, values)``."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise InputParseError(f"cannot read: {exc.strerror}", path) from None
    if len(raw) < _HEADER.size:
        raise InputParseError("truncated header", path)
    magic, dim, depth, _ = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise InputParseError(f"bad magic {magic!r}", path)
    if dim < 1 or depth < 1 or dim * depth > 40:
        raise InputParseError(f"bad grid shape dim={dim} depth={depth}",
                              path)
    n = 1 << (dim * depth)
    body = raw[_HEADER.size:]
    if len(body) != 8 * n:
        raise InputParseError(
            f"expected {n} float64 values, got {len(body) / 8:g}", path)
    return dim, depth, np.frombuffer(body, dtype='<f8').astype(float)


def write_binary(path, grid, values):
    vals = np.asarray(values, dtype='<f8').ravel()
    if vals.size != grid.n_cells:
        raise ValueError("value count does not match the grid")
    with open(path, 'wb') as fh:
        fh.write(_HEADER.pack(MAGIC, grid.dimension, grid.depth, 0))
        fh.write(vals.tobytes())


def _is_binary(path):
    try:
        with open(path, 'rb') as fh:
            return fh.read(4) == MAGIC
    except OSError as exc:
        raise InputParseError(f"cannot read: {exc.strerror}", path) from None


def load_cells(path, dimension=1):
    """Load a cell array and the grid it implies.

    The format is detected from the magic bytes.  For CSV the depth follows
    from the value count and ``dimension``.
    """
    if _is_binary(path):
        dim, depth, vals = read_binary(path)
        return Grid(dim, depth), vals
    vals = read_csv(path)
    n = vals.size
    depth = 0
    while (1 << (dimension * depth)) < n:
        depth += 1
    if (1 << (dimension * depth)) != n or depth < 1:
        raise InputParseError(
            f"{n} values is not 2**({dimension}*depth) for any depth >= 1",
            path)
    return Grid(dimension, depth), vals


def save_cells(path, grid, values):
    """Write CSV unless ``path`` ends in ``.bin``."""
    if str(path).endswith('.bin'):
        write_binary(path, grid, values)
    else:
        write_csv(path, values)
