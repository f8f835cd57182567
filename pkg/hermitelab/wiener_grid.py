# coding: utf-8
"""Truncated two-sided Wiener process on a grid of cells.

The grid is a uniform window [-M, x_max] of ``n_window`` cells, optionally
preceded by ``n_tail`` geometrically growing far-field cells reaching back to
``x_far``. Functions of time are represented by one value per cell; the noise
lives on cells as Brownian increments of variance equal to the cell width.
"""
from __future__ import absolute_import, division, print_function

import math
from numbers import Integral

import numpy as np

from hermitelab.errors import ConfigError, DomainError, ShapeError

#: Default ratio between the lengths of consecutive far-field cells.
TAIL_RATIO = 1.25


def _read_only(values):
    values.flags.writeable = False
    return values


class TimeGrid(object):
    """Partition of [x_far, x_max] into cells, uniform on [x_min, x_max].

    Instances are immutable and compare equal when their extents and cell
    counts agree.

    Args:
        x_min (float): left end of the uniform window, -M
        x_max (float): right end
        n_window (int): number of uniform cells
        x_far (float, optional): left end of the far field, below x_min
        n_tail (int): number of far-field cells, 0 without a far field
    """
    __slots__ = ('_x_min', '_x_max', '_x_far', '_n_window', '_n_tail', '_delta', '_edges', '_widths',
                 '_midpoints')

    def __init__(self, x_min, x_max, n_window, x_far=None, n_tail=0):
        self._x_min = float(x_min)
        self._x_max = float(x_max)
        self._n_window = int(n_window)
        self._n_tail = int(n_tail) if x_far is not None else 0
        self._x_far = float(x_far) if self._n_tail else self._x_min
        self._delta = (self._x_max - self._x_min) / self._n_window

        window = self._x_min + np.arange(self._n_window + 1) * self._delta
        window[-1] = self._x_max
        tail = -np.geomspace(-self._x_far, -self._x_min, self._n_tail + 1) if self._n_tail else np.empty(1)
        self._edges = _read_only(np.concatenate([tail[:-1], window]))
        # window cells all have width delta, bit for bit
        self._widths = _read_only(np.concatenate([np.diff(tail), np.full(self._n_window, self._delta)]))
        midpoints = self._x_min + (np.arange(self._n_window) + 0.5) * self._delta
        self._midpoints = _read_only(np.concatenate([0.5 * (tail[:-1] + tail[1:]), midpoints]))

    x_min = property(lambda self: self._x_min)
    x_max = property(lambda self: self._x_max)
    x_far = property(lambda self: self._x_far)
    n_window = property(lambda self: self._n_window)
    n_tail = property(lambda self: self._n_tail)
    delta = property(lambda self: self._delta)
    edges = property(lambda self: self._edges)
    widths = property(lambda self: self._widths)
    midpoints = property(lambda self: self._midpoints)

    @property
    def n_cells(self):
        """Total number of cells, far field included."""
        return self._n_tail + self._n_window

    def key(self):
        return (self._x_min, self._x_max, self._n_window, self._x_far, self._n_tail)

    def as_dict(self):
        return {'x_min': self._x_min, 'x_max': self._x_max, 'n_cells': self._n_window,
                'x_far': self._x_far, 'n_tail': self._n_tail}

    def __eq__(self, other):
        return isinstance(other, TimeGrid) and self.key() == other.key()

    def __ne__(self, other):
        return not self == other

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        if self._n_tail:
            return '<TimeGrid [{}, {}] n_cells={} tail=[{}, {}] n_tail={}>'.format(
                self._x_min, self._x_max, self._n_window, self._x_far, self._x_min, self._n_tail)
        return '<TimeGrid [{}, {}] n_cells={}>'.format(self._x_min, self._x_max, self._n_window)

    def contains(self, x):
        """Whether x lies strictly inside the uniform window."""
        return self._x_min < x < self._x_max


class WienerSample(object):
    """One reproducible path of Brownian increments on a grid."""
    __slots__ = ('increments', 'seed', 'stream_id', 'grid')

    def __init__(self, increments, seed, stream_id, grid):
        increments = np.asarray(increments, dtype=float)
        if increments.shape != (grid.n_cells,):
            raise ShapeError('expected %d increments, got shape %s' % (grid.n_cells, increments.shape))
        self.increments = increments
        self.seed = seed
        self.stream_id = stream_id
        self.grid = grid

    def __repr__(self):
        return '<WienerSample seed={} stream={} n_cells={}>'.format(
            self.seed, self.stream_id, self.grid.n_cells)


def build_grid(M, x_max, n_cells, far=None, tail_ratio=TAIL_RATIO):
    """Builds the grid covering [-M, x_max], with far-field cells back to -far.

    The far field is split into the fewest cells whose consecutive length
    ratio is at most ``tail_ratio``; its edges are geometrically spaced.

    Args:
        M (float): left end of the uniform window is -M, M > 0
        x_max (float): right end, x_max > 0
        n_cells (int): number of uniform cells, at least 2
        far (float, optional): truncation point of the negative half-line;
            no far field when None or not beyond M
        tail_ratio (float): largest ratio of consecutive far-field edges, > 1

    Returns:
        TimeGrid

    Raises:
        ConfigError: on non-positive extents, fewer than two cells or a
            tail ratio not above 1.

    Examples:
        >>> build_grid(1, 1, 4).midpoints
        array([-0.75, -0.25,  0.25,  0.75])
    """
    if not M > 0:
        raise ConfigError('truncation M must be positive, got %r' % (M,), key='grid.M')
    if not x_max > 0:
        raise ConfigError('x_max must be positive, got %r' % (x_max,), key='grid.x_max')
    if isinstance(n_cells, bool) or not isinstance(n_cells, Integral) or n_cells < 2:
        raise ConfigError('n_cells must be an integer >= 2, got %r' % (n_cells,), key='grid.n_cells')
    if not tail_ratio > 1:
        raise ConfigError('tail ratio must exceed 1, got %r' % (tail_ratio,), key='grid.tail_ratio')
    if far is None or not far > M:
        return TimeGrid(-float(M), float(x_max), int(n_cells))
    n_tail = max(1, int(math.ceil(math.log(far / M) / math.log(tail_ratio) - 1e-9)))
    return TimeGrid(-float(M), float(x_max), int(n_cells), x_far=-float(far), n_tail=n_tail)


def _generator(seed, stream_id):
    # Philox is counter based: stream k is the same whatever else is drawn
    sequence = np.random.SeedSequence(int(seed), spawn_key=(int(stream_id),))
    return np.random.Generator(np.random.Philox(sequence))


def sample_increments(grid, seed, stream_id):
    """Draws the increments of stream ``stream_id`` under ``seed``.

    The result depends on (seed, stream_id, grid) only, bit for bit.
    """
    normals = _generator(seed, stream_id).standard_normal(grid.n_cells)
    return WienerSample(normals * np.sqrt(grid.widths), seed, stream_id, grid)


def sample_batch(grid, seed, stream_ids):
    """Increments of several streams stacked row by row.

    Row k equals ``sample_increments(grid, seed, stream_ids[k]).increments``.
    """
    stream_ids = list(stream_ids)
    out = np.empty((len(stream_ids), grid.n_cells))
    scale = np.sqrt(grid.widths)
    for row, stream_id in enumerate(stream_ids):
        out[row] = _generator(seed, stream_id).standard_normal(grid.n_cells) * scale
    return out


def wiener_integral(h, sample):
    """The first-chaos integral B(h) of a step function.

    Args:
        h (array-like): one value per cell
        sample (WienerSample): the noise

    Returns:
        float: sum of h[i] * dB[i]

    Raises:
        ShapeError: if h does not have one entry per cell.
    """
    h = np.asarray(h, dtype=float)
    if h.shape != sample.increments.shape:
        raise ShapeError('h has shape %s, grid has %d cells' % (h.shape, sample.grid.n_cells))
    return float(np.dot(h, sample.increments))


def cell_index(grid, x):
    """Index of the cell containing x; the right end belongs to the last cell."""
    if not grid.x_far <= x <= grid.x_max:
        raise DomainError('%r lies outside the grid [%r, %r]' % (x, grid.x_far, grid.x_max))
    return min(int(np.searchsorted(grid.edges, x, side='right')) - 1, grid.n_cells - 1)


def indicator(grid, a, b):
    """Per-cell indicator of the cells whose midpoint lies in [a, b]."""
    m = grid.midpoints
    return ((m >= a) & (m <= b)).astype(float)
