# coding: utf-8
"""Discretized multiple Wiener-Ito integrals.

A kernel of order q is a function of q cell indices, constant on products of
cells. Its multiple integral against a path of cell increments x is the exact
Ito integral of that step function, the Wick-ordered polynomial

    sum over r of (-1)^r q! / (r! 2^r (q-2r)!) <Tr^r f, x x ... x>

where Tr contracts two arguments along the diagonal, weighting cell i by its
width. The r = 0 term alone is the full Riemann sum; when f vanishes on
repeated indices every other term is zero and the integral is the
off-diagonal sum over distinct index tuples. Either way the integral has mean
zero, and isometry, product formula and Hermite identity hold exactly at
every grid size.
"""
from __future__ import absolute_import, division, print_function

import itertools
import math

import numpy as np
from scipy import special

from hermitelab.errors import DomainError, ResourceError, ShapeError
from hermitelab.results import TestReport
from hermitelab.wiener_grid import sample_batch

#: Highest order multiple_integral accepts unless told otherwise.
Q_MAX = 3

#: Largest dense array (in entries) a kernel may materialize.
MAX_DENSE_ENTRIES = 2 ** 21

#: Rows of increments processed per matrix product.
BATCH_ROWS = 512

#: Relative rms gap accepted by checks of identities that hold exactly on a grid.
EXACT_RTOL = 1e-8


def hermite_poly(q, x):
    """The probabilists' Hermite polynomial H_q.

    H_0 = 1, H_1 = x and H_{q+1} = x H_q - q H_{q-1}.

    Examples:
        >>> hermite_poly(3, 2.0)
        2.0
    """
    if q < 0:
        raise DomainError('Hermite polynomials are indexed by q >= 0, got %r' % q)
    value = special.eval_hermitenorm(int(q), x)
    return float(value) if np.ndim(value) == 0 else value


def wick_coefficient(order, r):
    """(-1)^r order! / (r! 2^r (order - 2r)!), the weight of the r-fold trace."""
    count = math.factorial(order) // (math.factorial(r) * 2 ** r * math.factorial(order - 2 * r))
    return -count if r % 2 else count


def _trace(values, widths):
    # last two arguments set equal, cell i weighted by its width
    return np.einsum('...ii,i->...', values, widths)


def _weighted(values, widths, r):
    """``values`` times the widths of each of its first r arguments."""
    for k in range(r):
        shape = [1] * values.ndim
        shape[k] = -1
        values = values * widths.reshape(shape)
    return values


class DiscretizedKernel(object):
    """A function of ``order`` cell indices on a grid.

    Values come either from a dense array or from ``evaluate``, a callable
    taking ``order`` integer index arrays of equal shape and returning the
    values at those tuples. Order 0 kernels are constants held in ``value``.

    Args:
        order (int): number of arguments
        grid (TimeGrid): the grid whose cells index the arguments
        evaluate (callable, optional): lazy evaluator
        dense (ndarray, optional): all values, shape (n_cells,) * order
        symmetric (bool): whether values are invariant under argument swaps
        value (float): the constant of an order 0 kernel
    """

    def __init__(self, order, grid, evaluate=None, dense=None, symmetric=False, value=0.0):
        if order < 0:
            raise DomainError('kernel order must be >= 0, got %r' % order)
        self.order = int(order)
        self.grid = grid
        self.symmetric = bool(symmetric) or order <= 1
        self.value = float(value)
        self._evaluate = evaluate
        self._dense = None
        self._traces = None
        if dense is not None:
            dense = np.asarray(dense, dtype=float)
            if dense.shape != (grid.n_cells,) * order:
                raise ShapeError('dense kernel has shape %s, expected %s'
                                 % (dense.shape, (grid.n_cells,) * order))
            self._dense = dense
        elif evaluate is None and order > 0:
            raise DomainError('a kernel needs an evaluator or dense values')

    def __repr__(self):
        return '<DiscretizedKernel order={} n_cells={} symmetric={} dense={}>'.format(
            self.order, self.grid.n_cells, self.symmetric, self._dense is not None)

    # ------------------------------------------------------------------
    # Construction helpers
    # ------------------------------------------------------------------

    @classmethod
    def from_array(cls, values, grid, symmetric=None):
        """Wraps dense values; symmetry is detected when not given."""
        values = np.asarray(values, dtype=float)
        if symmetric is None:
            symmetric = all(np.array_equal(values, np.transpose(values, perm))
                            for perm in itertools.permutations(range(values.ndim)))
        return cls(values.ndim, grid, dense=values, symmetric=symmetric)

    @classmethod
    def constant(cls, value, grid):
        return cls(0, grid, value=value)

    @classmethod
    def zero(cls, order, grid):
        if order == 0:
            return cls.constant(0.0, grid)
        return cls(order, grid, dense=np.zeros((grid.n_cells,) * order), symmetric=True)

    # ------------------------------------------------------------------
    # Evaluation
    # ------------------------------------------------------------------

    def __call__(self, *indices):
        if len(indices) != self.order:
            raise ShapeError('kernel of order %d called with %d indices' % (self.order, len(indices)))
        if self.order == 0:
            return self.value
        indices = tuple(np.asarray(i, dtype=np.intp) for i in indices)
        if self._dense is not None:
            return self._dense[indices]
        return np.asarray(self._evaluate(*indices), dtype=float)

    @property
    def is_dense(self):
        return self._dense is not None

    def dense(self):
        """All values as an array, materialized on first use.

        Raises:
            ResourceError: above MAX_DENSE_ENTRIES entries.
        """
        if self._dense is None:
            n = self.grid.n_cells
            if n ** self.order > MAX_DENSE_ENTRIES:
                raise ResourceError('dense order-%d kernel on %d cells needs %d entries (limit %d)'
                                    % (self.order, n, n ** self.order, MAX_DENSE_ENTRIES))
            indices = np.indices((n,) * self.order)
            self._dense = np.asarray(self._evaluate(*indices), dtype=float)
        return self._dense

    def traces(self):
        """The symmetrized values and their repeated diagonal traces.

        Entry r has order ``order - 2r``, for r = 0 .. order // 2.
        """
        if self._traces is None:
            if self.order == 0:
                values = np.float64(self.value)
            else:
                values = (self if self.symmetric else symmetrize(self)).dense()
            traces = [values]
            for _ in range(self.order // 2):
                traces.append(_trace(traces[-1], self.grid.widths))
            self._traces = traces
        return self._traces

    # ------------------------------------------------------------------
    # Algebra
    # ------------------------------------------------------------------

    def _check_compatible(self, other):
        if self.order != other.order:
            raise ShapeError('cannot combine kernels of order %d and %d' % (self.order, other.order))
        if self.grid != other.grid:
            raise ShapeError('kernels live on different grids')

    def __add__(self, other):
        self._check_compatible(other)
        if self.order == 0:
            return DiscretizedKernel.constant(self.value + other.value, self.grid)
        return DiscretizedKernel(self.order, self.grid, dense=self.dense() + other.dense(),
                                 symmetric=self.symmetric and other.symmetric)

    def __mul__(self, scalar):
        if self.order == 0:
            return DiscretizedKernel.constant(scalar * self.value, self.grid)
        return DiscretizedKernel(self.order, self.grid, dense=scalar * self.dense(),
                                 symmetric=self.symmetric)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    # ------------------------------------------------------------------
    # Norms and checks
    # ------------------------------------------------------------------

    def inner(self, other):
        """The L^2 inner product, sum of f g times the cell widths of every argument."""
        self._check_compatible(other)
        if self.order == 0:
            return self.value * other.value
        values = self.dense() * other.dense()
        for _ in range(self.order):
            values = values.dot(self.grid.widths)
        return float(values)

    def norm_sq(self):
        return self.inner(self)

    def norm_sq_estimate(self, n_tuples=4096, rng=None):
        """Estimates the squared norm from uniformly drawn index tuples."""
        if self.order == 0:
            return self.value ** 2
        n = self.grid.n_cells
        rng = rng if rng is not None else np.random.default_rng(0)
        tuples = rng.integers(0, n, size=(n_tuples, self.order))
        weights = np.prod(self.grid.widths[tuples], axis=1)
        return float(np.mean(self(*tuples.T) ** 2 * weights) * n ** self.order)

    def check_symmetry(self, n_tuples=256, rng=None, rtol=0.0):
        """Spot-checks permutation invariance on random index tuples."""
        if self.order <= 1:
            return True
        rng = rng if rng is not None else np.random.default_rng(0)
        tuples = rng.integers(0, self.grid.n_cells, size=(n_tuples, self.order))
        reference = self(*tuples.T)
        for perm in itertools.permutations(range(self.order)):
            permuted = self(*tuples[:, perm].T)
            if not np.allclose(permuted, reference, rtol=rtol, atol=0.0, equal_nan=True):
                return False
        return True


def tensor(grid, *factors):
    """The elementary tensor h_1 x ... x h_k of per-cell vectors."""
    factors = [np.asarray(h, dtype=float) for h in factors]
    for h in factors:
        if h.shape != (grid.n_cells,):
            raise ShapeError('tensor factor has shape %s, grid has %d cells' % (h.shape, grid.n_cells))

    def evaluate(*indices):
        out = np.ones(np.shape(indices[0]))
        for h, idx in zip(factors, indices):
            out = out * h[idx]
        return out

    symmetric = all(np.array_equal(factors[0], h) for h in factors[1:])
    return DiscretizedKernel(len(factors), grid, evaluate=evaluate, symmetric=symmetric)


def _check_order(f, q_max):
    if f.order > q_max:
        raise ResourceError('multiple integrals of order %d exceed q_max = %d' % (f.order, q_max))


def _row_sums(values, rows, keep=0):
    """For each row x, sum of values[a, j_1..j_m] x[j_1] ... x[j_m].

    The first ``keep`` (0 or 1) arguments are left free: the result has shape
    (n_rows,) or (n_cells, n_rows).
    """
    n_rows, n = rows.shape
    if values.ndim == keep:
        if keep == 0:
            return np.full(n_rows, float(values))
        return np.repeat(values[:, np.newaxis], n_rows, axis=1)
    # first contraction for every row at once: (n^(ndim-1), n_rows)
    partial = values.reshape(-1, n).dot(rows.T)
    for _ in range(values.ndim - keep - 1):
        partial = np.einsum('ajr,rj->ar', partial.reshape(-1, n, n_rows), rows)
    return partial.reshape((n_rows,) if keep == 0 else (n, n_rows))


def multiple_integral_batch(f, increments, q_max=Q_MAX):
    """Ito integrals of ``f`` for each row of an increments matrix.

    Args:
        f (DiscretizedKernel): the kernel
        increments (ndarray): shape (n_samples, n_cells)
        q_max (int): largest accepted order

    Returns:
        ndarray: one value per row
    """
    increments = np.atleast_2d(np.asarray(increments, dtype=float))
    _check_order(f, q_max)
    if increments.shape[1] != f.grid.n_cells:
        raise ShapeError('increments have %d cells, kernel grid has %d'
                         % (increments.shape[1], f.grid.n_cells))
    if f.order == 0:
        return np.full(increments.shape[0], f.value)
    terms = [(wick_coefficient(f.order, r), values) for r, values in enumerate(f.traces())]
    out = np.empty(increments.shape[0])
    for start in range(0, increments.shape[0], BATCH_ROWS):
        rows = increments[start:start + BATCH_ROWS]
        total = np.zeros(rows.shape[0])
        for coefficient, values in terms:
            total += coefficient * _row_sums(values, rows)
        out[start:start + rows.shape[0]] = total
    return out


def section_integral_batch(f, increments):
    """For each row, the order q-1 integrals of the sections f(i, .) for every cell i.

    Entry [k, i] is I_{q-1}(f(i, .)) on row k, which is the partial
    derivative of I_q(f) with respect to the increment of cell i, divided
    by q.

    Returns:
        ndarray: shape (n_samples, n_cells)
    """
    increments = np.atleast_2d(np.asarray(increments, dtype=float))
    n_rows, n = increments.shape
    if n != f.grid.n_cells:
        raise ShapeError('increments have %d cells, kernel grid has %d' % (n, f.grid.n_cells))
    if f.order < 1:
        raise DomainError('sections need a kernel of order >= 1')
    traces = f.traces()
    terms = [(wick_coefficient(f.order - 1, r), traces[r]) for r in range((f.order - 1) // 2 + 1)]
    out = np.empty((n_rows, n))
    for start in range(0, n_rows, BATCH_ROWS):
        rows = increments[start:start + BATCH_ROWS]
        total = np.zeros((n, rows.shape[0]))
        for coefficient, values in terms:
            total += coefficient * _row_sums(values, rows, keep=1)
        out[start:start + rows.shape[0]] = total.T
    return out


def multiple_integral(f, sample, q_max=Q_MAX):
    """The discretized multiple integral I_q(f) on one Wiener sample.

    Raises:
        ResourceError: if the order exceeds ``q_max``.
        ShapeError: if the kernel and sample grids differ.
    """
    _check_order(f, q_max)
    if f.grid != sample.grid:
        raise ShapeError('kernel grid %r differs from sample grid %r' % (f.grid, sample.grid))
    return float(multiple_integral_batch(f, sample.increments[np.newaxis, :], q_max)[0])


def contraction(f, g, r):
    """The r-contraction of f and g over their first r arguments.

    Returns:
        DiscretizedKernel: order p + q - 2r; a constant when p = q = r.

    Raises:
        DomainError: if r is outside [0, min(p, q)].
    """
    if not 0 <= r <= min(f.order, g.order):
        raise DomainError('contraction index %r outside [0, %d]' % (r, min(f.order, g.order)))
    if f.grid != g.grid:
        raise ShapeError('kernels live on different grids')
    fd = f.dense() if f.order else np.float64(f.value)
    gd = g.dense() if g.order else np.float64(g.value)
    axes = list(range(r))
    values = np.tensordot(_weighted(fd, f.grid.widths, r), gd, axes=(axes, axes))
    order = f.order + g.order - 2 * r
    if order == 0:
        return DiscretizedKernel.constant(float(values), f.grid)
    return DiscretizedKernel(order, f.grid, dense=values)


def symmetrize(f):
    """Averages f over all permutations of its arguments.

    Raises:
        ResourceError: above order 4.
    """
    if f.order > 4:
        raise ResourceError('symmetrizing order %d costs %d evaluations per point'
                            % (f.order, math.factorial(f.order)))
    if f.symmetric:
        return f
    perms = list(itertools.permutations(range(f.order)))
    if f.is_dense:
        dense = f.dense()
        values = sum(np.transpose(dense, perm) for perm in perms) / len(perms)
        return DiscretizedKernel(f.order, f.grid, dense=values, symmetric=True)

    def evaluate(*indices):
        return sum(f(*[indices[k] for k in perm]) for perm in perms) / len(perms)

    return DiscretizedKernel(f.order, f.grid, evaluate=evaluate, symmetric=True)


def _paired_values(f, g, n_samples, seed, first_stream, q_max):
    stream_ids = range(first_stream, first_stream + n_samples)
    x = sample_batch(f.grid, seed, stream_ids)
    return multiple_integral_batch(f, x, q_max), multiple_integral_batch(g, x, q_max)


def isometry_check(f, g, n_samples, seed=0, first_stream=0, n_sigma=3.0, q_max=Q_MAX):
    """Monte Carlo check of E[I_p(f) I_q(g)] = p! <f, g> (or 0 when p != q).

    The inner product is taken between symmetrizations.

    Returns:
        TestReport: ``statistic`` is |estimate - target| / stderr.
    """
    _check_order(f, q_max)
    _check_order(g, q_max)
    fi, gi = _paired_values(f, g, n_samples, seed, first_stream, q_max)
    products = fi * gi
    estimate = float(np.mean(products))
    stderr = float(np.std(products, ddof=1) / np.sqrt(n_samples))
    if f.order == g.order:
        target = math.factorial(f.order) * symmetrize(f).inner(symmetrize(g))
    else:
        target = 0.0
    gap = abs(estimate - target)
    statistic = gap / stderr if stderr > 0 else (0.0 if gap == 0 else float('inf'))
    return TestReport('isometry', statistic <= n_sigma, statistic, n_sigma, n_samples,
                      manifest={'seed': seed, 'streams': [first_stream, first_stream + n_samples]},
                      p=f.order, q=g.order, estimate=estimate, stderr=stderr, target=target)


def product_terms(f, g):
    """The kernels r! C(p,r) C(q,r) (f x~_r g) of the product formula, r = 0..min(p,q)."""
    terms = []
    for r in range(min(f.order, g.order) + 1):
        weight = math.factorial(r) * special.comb(f.order, r, exact=True) * special.comb(g.order, r, exact=True)
        terms.append(weight * symmetrize(contraction(f, g, r)))
    return terms


def product_formula_check(f, g, n_samples, seed=0, first_stream=0, threshold=None):
    """Compares I_p(f) I_q(g) with the product formula on the same samples.

    For step kernels both sides agree up to rounding, so the default
    threshold is EXACT_RTOL^2 times the mean square of the product.

    Returns:
        TestReport: ``statistic`` is the mean-square discrepancy.

    Raises:
        ResourceError: when p + q > 4.
    """
    if f.order + g.order > 4:
        raise ResourceError('product formula check supports p + q <= 4, got %d' % (f.order + g.order))
    q_max = f.order + g.order
    x = sample_batch(f.grid, seed, range(first_stream, first_stream + n_samples))
    lhs = multiple_integral_batch(f, x, q_max) * multiple_integral_batch(g, x, q_max)
    rhs = np.zeros(n_samples)
    for term in product_terms(f, g):
        rhs += multiple_integral_batch(term, x, q_max)
    discrepancy = float(np.mean((lhs - rhs) ** 2))
    mean_square = float(np.mean(lhs ** 2))
    if threshold is None:
        threshold = EXACT_RTOL ** 2 * mean_square
    return TestReport('product_formula', discrepancy <= threshold, discrepancy, threshold, n_samples,
                      manifest={'seed': seed, 'streams': [first_stream, first_stream + n_samples]},
                      p=f.order, q=g.order, lhs_mean_square=mean_square)


def hermite_identity_gap(h, q, grid, n_samples, seed=0, first_stream=0, threshold=None):
    """Mean-square gap between I_q(h x ... x h) and |h|^q H_q(B(h)/|h|).

    The identity is exact for step functions; the default threshold is
    EXACT_RTOL^2 times E[H_q^2] = q! |h|^(2q).
    """
    h = np.asarray(h, dtype=float)
    norm = float(np.sqrt(np.dot(h * h, grid.widths)))
    if norm == 0.0:
        raise DomainError('h must not vanish identically')
    x = sample_batch(grid, seed, range(first_stream, first_stream + n_samples))
    chaos = multiple_integral_batch(tensor(grid, *([h] * q)), x, q_max=max(q, Q_MAX))
    polynomial = norm ** q * special.eval_hermitenorm(q, x.dot(h) / norm)
    gap = float(np.mean((chaos - polynomial) ** 2))
    if threshold is None:
        threshold = EXACT_RTOL ** 2 * math.factorial(q) * norm ** (2 * q)
    return TestReport('hermite_identity', gap <= threshold, gap, threshold, n_samples,
                      manifest={'seed': seed, 'streams': [first_stream, first_stream + n_samples]},
                      q=q, n_cells=grid.n_cells)
