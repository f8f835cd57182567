# coding: utf-8
"""The Hermite-process kernel, process values and Malliavin derivatives.

The kernel of order q at time t is

    L_t(xi_1, ..., xi_q) = c(H, q) * int_0^t prod_j (s - xi_j)_+^(H0 - 3/2) ds

with the integral taken as -int_t^0 for negative t. The process is the
multiple integral of the kernel and its Malliavin derivative at r is q times
the order q-1 integral of the kernel section at r.
"""
from __future__ import absolute_import, division, print_function

import math
from collections import namedtuple

import numpy as np
from scipy import integrate, special

from hermitelab.chaos_core import (MAX_DENSE_ENTRIES, Q_MAX, DiscretizedKernel, multiple_integral_batch,
                                   section_integral_batch)
from hermitelab.errors import DomainError, NumericError, ResourceError, ShapeError
from hermitelab.special_params import a_constant, power_law_double_integral

#: Panels beyond this many are never added to the graded mesh.
MAX_PANELS = 60

#: Kernel tuples evaluated per vectorized quadrature pass.
CHUNK_ROWS = 4096


class QuadSettings(namedtuple('QuadSettings', 'nodes ratio tol split')):
    """Quadrature settings of the s-integral.

    Attributes:
        nodes (int): Gauss nodes per panel.
        ratio (float): geometric grading ratio of the panels, in (0, 1).
        tol (float): relative error accepted before falling back to adaptive quadrature.
        split (bool): grade the mesh toward the singular endpoint. When off, a
            single Gauss-Legendre panel is used and the fallback does the work.
    """
    __slots__ = ()

    def as_dict(self):
        return dict(self._asdict())


DEFAULT_QUAD = QuadSettings(nodes=12, ratio=0.35, tol=1e-9, split=True)


class KernelSpec(namedtuple('KernelSpec', 'params t quad')):
    """The kernel L_t for given parameters and quadrature settings."""
    __slots__ = ()

    def __new__(cls, params, t, quad=DEFAULT_QUAD):
        return super(KernelSpec, cls).__new__(cls, params, float(t), quad)


class DerivativeVector(object):
    """One realization of r -> D_r Z_t, one value per cell.

    Entries at cells whose midpoint lies beyond max(0, t) are exactly zero.
    """
    __slots__ = ('values', 't', 'sample_id', 'grid')

    def __init__(self, values, t, sample_id, grid):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.n_cells,):
            raise ShapeError('expected %d values, got shape %s' % (grid.n_cells, values.shape))
        self.values = values
        self.t = t
        self.sample_id = sample_id
        self.grid = grid

    def __repr__(self):
        return '<DerivativeVector t={} sample={} n_cells={}>'.format(self.t, self.sample_id, self.grid.n_cells)

    def __sub__(self, other):
        if self.grid != other.grid:
            raise ShapeError('derivative vectors live on different grids')
        return DerivativeVector(self.values - other.values, (other.t, self.t), self.sample_id, self.grid)

    def norm_sq(self):
        return float(np.dot(self.values ** 2, self.grid.widths))


# ----------------------------------------------------------------------
# Quadrature of the s-integral
# ----------------------------------------------------------------------

def _rules(n, alpha):
    legendre = special.roots_legendre(n)
    jacobi = special.roots_jacobi(n, 0.0, alpha)
    return legendre, jacobi


def _panel_sum(nodes, weights, left, right, xs, alpha, skip_first):
    """Gauss sum over panels [left, right] of prod_k (s - xs_k)^alpha.

    ``left``/``right`` have shape (rows, panels); ``xs`` (rows, q).
    With ``skip_first`` the factor k = 0 is left out (it is the Jacobi weight).
    """
    half = 0.5 * (right - left)
    s = left[..., None] + half[..., None] * (1.0 + nodes)
    product = np.ones_like(s)
    for k in range(1 if skip_first else 0, xs.shape[1]):
        product *= (s - xs[:, k, None, None]) ** alpha
    return product.dot(weights), half


def _graded_integrals(xs, lo, hi, singular, alpha, quad, n):
    rows, q = xs.shape
    length = hi - lo
    if q >= 2:
        gap = np.where(singular, lo - xs[:, 1], lo - xs[:, 0])
    else:
        gap = np.where(singular, np.inf, lo - xs[:, 0])
    if quad.split:
        rel = np.min(gap / length)
        if np.isfinite(rel) and rel > 0:
            panels = int(math.ceil(math.log(rel) / math.log(quad.ratio))) + 2
        else:
            panels = 2
        panels = min(max(panels, 1), MAX_PANELS)
    else:
        panels = 0

    # breakpoints lo, lo + L r^K, ..., lo + L r, hi
    powers = quad.ratio ** np.arange(panels, -1, -1, dtype=float)
    breaks = np.concatenate([lo[:, None], lo[:, None] + length[:, None] * powers[None, :]], axis=1)
    breaks[:, -1] = hi
    left, right = breaks[:, :-1], breaks[:, 1:]

    (leg_x, leg_w), (jac_x, jac_w) = _rules(n, alpha)
    sums, half = _panel_sum(leg_x, leg_w, left, right, xs, alpha, skip_first=False)
    panel_values = sums * half

    if np.any(singular) and quad.split:
        first = slice(0, 1)
        jac_sums, jac_half = _panel_sum(jac_x, jac_w, left[:, first], right[:, first], xs, alpha,
                                        skip_first=True)
        jacobi_first = jac_sums[:, 0] * jac_half[:, 0] ** (alpha + 1.0)
        panel_values[:, 0] = np.where(singular, jacobi_first, panel_values[:, 0])
    return panel_values.sum(axis=1)


def _adaptive_row(xs, lo, hi, a_end, alpha, tol):
    """scipy.integrate.quad with the endpoint singularity as an algebraic weight."""
    multiplicity = int(np.sum(xs == xs[0])) if xs[0] >= a_end else 0
    exponent = multiplicity * alpha
    if exponent <= -1.0:
        return float('inf'), 0.0
    rest = xs[multiplicity:]

    def smooth(s):
        return float(np.prod((s - rest) ** alpha)) if rest.size else 1.0

    if multiplicity:
        value, err = integrate.quad(smooth, lo, hi, weight='alg', wvar=(exponent, 0.0),
                                    epsabs=0.0, epsrel=tol, limit=500)
    else:
        value, err = integrate.quad(smooth, lo, hi, epsabs=0.0, epsrel=tol, limit=500)
    return value, err


def kernel_values(spec, xi):
    """Vectorized kernel evaluation.

    Args:
        spec (KernelSpec): parameters, time and quadrature settings
        xi (array-like): shape (rows, q), one argument tuple per row

    Returns:
        ndarray: kernel values, ``inf`` where a repeated argument makes the
        integral diverge.

    Raises:
        NumericError: when neither the graded rule nor the adaptive fallback
            reaches ``spec.quad.tol``.
    """
    params, t, quad = spec.params, spec.t, spec.quad
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    if xi.shape[1] != params.q:
        raise ShapeError('kernel of order %d needs %d arguments per row, got %d'
                         % (params.q, params.q, xi.shape[1]))
    out = np.zeros(xi.shape[0])
    if t == 0.0:
        return out
    a_end, b_end, sign = (0.0, t, 1.0) if t > 0 else (t, 0.0, -1.0)
    alpha = params.kernel_exponent

    xs = -np.sort(-xi, axis=1)
    lo = np.maximum(a_end, xs[:, 0])
    active = lo < b_end
    singular = xs[:, 0] >= a_end
    repeated = singular & (xs[:, 1] == xs[:, 0]) if params.q >= 2 else np.zeros_like(singular)

    direct = np.flatnonzero(active & ~repeated)
    fallback = list(np.flatnonzero(active & repeated))
    for start in range(0, direct.size, CHUNK_ROWS):
        idx = direct[start:start + CHUNK_ROWS]
        coarse = _graded_integrals(xs[idx], lo[idx], np.full(idx.size, b_end), singular[idx],
                                   alpha, quad, quad.nodes)
        fine = _graded_integrals(xs[idx], lo[idx], np.full(idx.size, b_end), singular[idx],
                                 alpha, quad, quad.nodes + 4)
        err = np.abs(fine - coarse) / np.maximum(np.abs(fine), np.finfo(float).tiny)
        out[idx] = fine
        fallback.extend(idx[~(err <= quad.tol)])

    for row in fallback:
        value, err = _adaptive_row(xs[row], lo[row], b_end, a_end, alpha, quad.tol)
        if np.isfinite(value) and err > max(quad.tol * abs(value), 1e-300):
            raise NumericError('kernel quadrature did not converge',
                               key={'q': params.q, 'H': params.H, 't': t, 'quad': quad.as_dict()},
                               xi=xi[row].tolist(), estimated_error=err, value=value, tol=quad.tol)
        out[row] = value
    return sign * params.c * out


def kernel_value(spec, xi):
    """The kernel L_t at one argument tuple."""
    xi = np.asarray(xi, dtype=float).reshape(1, -1)
    return float(kernel_values(spec, xi)[0])


def fbm_kernel(params, t, xi):
    """Closed form of the order-1 kernel.

    c(H,1) ((t - xi)_+^(H-1/2) - (-xi)_+^(H-1/2)) / (H - 1/2), valid for
    either sign of t.
    """
    if params.q != 1:
        raise DomainError('closed form only exists for q = 1')
    xi = np.asarray(xi, dtype=float)
    p = params.H - 0.5
    value = (np.maximum(t - xi, 0.0) ** p - np.maximum(-xi, 0.0) ** p) / p
    return params.c * value


# ----------------------------------------------------------------------
# Kernels on a grid
# ----------------------------------------------------------------------

#: Grading power of the substitution s = e + (r - e) u^GRADING inside each panel.
GRADING = 5


def check_time(grid, t):
    if not grid.x_min < t < grid.x_max:
        raise DomainError('time %r lies outside the grid (%r, %r)' % (t, grid.x_min, grid.x_max))


def cell_profiles(grid, s, p):
    """Cell averages of xi -> (s - xi)_+^(p - 1) for every cell, at every s.

    Entry [i, k] is ((s_k - a_i)_+^p - (s_k - b_i)_+^p) / (p w_i) for cell
    i = [a_i, b_i] of width w_i.
    """
    a = grid.edges[:-1, np.newaxis]
    w = grid.widths[:, np.newaxis]
    s = np.asarray(s, dtype=float)[np.newaxis, :]
    with np.errstate(divide='ignore', invalid='ignore'):
        past = s - a - w
        beyond = past ** p * np.expm1(p * np.log1p(w / past))
        inside = np.maximum(s - a, 0.0) ** p
        values = np.where(past > 0, beyond, np.where(s > a, inside, 0.0))
    return values / (p * w)


def _panel_nodes(edges, lo, hi, n):
    """Quadrature nodes and weights for int_lo^hi, graded toward grid edges.

    Panels break at the edges inside (lo, hi). Each panel [l, r] is mapped
    from its anchor e, the largest edge <= l, by s = e + (r - e) u^GRADING,
    so the algebraic behaviour at e is smoothed out.
    """
    inner = edges[(edges > lo) & (edges < hi)]
    breaks = np.concatenate([[lo], inner, [hi]])
    left, right = breaks[:-1], breaks[1:]
    anchor = edges[np.searchsorted(edges, left, side='right') - 1]
    x, w = special.roots_legendre(n)
    span = right - anchor
    u0 = ((left - anchor) / span) ** (1.0 / GRADING)
    u = u0[:, None] + (1.0 - u0)[:, None] * 0.5 * (x[None, :] + 1.0)
    s = anchor[:, None] + span[:, None] * u ** GRADING
    weights = w[None, :] * 0.5 * (1.0 - u0)[:, None] * GRADING * span[:, None] * u ** (GRADING - 1)
    return s.ravel(), weights.ravel()


def _assemble(profiles, weights, q):
    weighted = profiles * weights
    if q == 1:
        return weighted.sum(axis=1)
    if q == 2:
        return weighted.dot(profiles.T)
    return np.einsum('is,js,ks->ijk', weighted, profiles, profiles, optimize=True)


def cell_kernel(params, t, grid, quad=DEFAULT_QUAD, q_max=Q_MAX):
    """The kernel averaged over every product of cells, as a dense symmetric DiscretizedKernel.

    Entry (i_1, ..., i_q) is the mean of L_t over the cell product, which is
    c int prod_j g_{i_j}(s) ds with g_i the cell average of (s - .)_+^(H0 - 3/2).
    Diagonal entries are finite. Entries with a cell midpoint beyond max(0, t)
    are set to zero.

    Raises:
        ResourceError: if q exceeds ``q_max`` or the dense array would be too large.
        DomainError: if t lies outside the grid.
        NumericError: when the s-quadrature misses ``quad.tol``.
    """
    if params.q > q_max:
        raise ResourceError('order %d exceeds q_max = %d' % (params.q, q_max))
    check_time(grid, t)
    n, q = grid.n_cells, params.q
    if n ** q > MAX_DENSE_ENTRIES:
        raise ResourceError('dense order-%d kernel on %d cells is too large' % (q, n))
    if t == 0.0:
        return DiscretizedKernel(q, grid, dense=np.zeros((n,) * q), symmetric=True)
    lo, hi, sign = (0.0, t, 1.0) if t > 0 else (t, 0.0, -1.0)
    p = params.kernel_exponent + 1.0

    estimates = []
    for nodes in (quad.nodes, quad.nodes + 4):
        s, weights = _panel_nodes(grid.edges, lo, hi, nodes)
        estimates.append(_assemble(cell_profiles(grid, s, p), weights, q))
    coarse, fine = estimates
    scale = np.max(np.abs(fine))
    error = np.max(np.abs(fine - coarse))
    if error > quad.tol * scale:
        raise NumericError('cell kernel quadrature did not converge',
                           key={'q': q, 'H': params.H, 't': t, 'quad': quad.as_dict()},
                           n_cells=n, estimated_error=float(error), scale=float(scale), tol=quad.tol)

    dense = sign * params.c * fine
    beyond = grid.midpoints > max(0.0, t)
    for axis in range(q):
        index = [slice(None)] * q
        index[axis] = beyond
        dense[tuple(index)] = 0.0
    return DiscretizedKernel(q, grid, dense=dense, symmetric=True)


def _kernel(params, t, grid, quad, q_max, cache):
    if cache is not None:
        return cache.get(params, t, grid, quad, q_max)
    return cell_kernel(params, t, grid, quad, q_max)


def process_batch(params, times, increments, grid, quad=DEFAULT_QUAD, q_max=Q_MAX, cache=None):
    """Process values Z_t for every row of an increments matrix.

    Returns:
        ndarray: shape (n_samples, len(times))
    """
    increments = np.atleast_2d(increments)
    out = np.empty((increments.shape[0], len(times)))
    for k, t in enumerate(times):
        check_time(grid, t)
        out[:, k] = multiple_integral_batch(_kernel(params, t, grid, quad, q_max, cache), increments, q_max)
    return out


def hermite_process_sample(params, times, sample, quad=DEFAULT_QUAD, q_max=Q_MAX, cache=None):
    """Z_t at each of ``times`` on one Wiener sample.

    Raises:
        DomainError: if a time lies outside the grid.
    """
    values = process_batch(params, times, sample.increments[np.newaxis, :], sample.grid,
                           quad, q_max, cache)
    return [float(v) for v in values[0]]


def derivative_batch(params, t, increments, grid, quad=DEFAULT_QUAD, q_max=Q_MAX, cache=None):
    """D_r Z_t on every cell for every row of an increments matrix.

    Returns:
        ndarray: shape (n_samples, n_cells)
    """
    check_time(grid, t)
    kernel = _kernel(params, t, grid, quad, q_max, cache)
    return params.q * section_integral_batch(kernel, increments)


def malliavin_derivative(params, t, sample, quad=DEFAULT_QUAD, q_max=Q_MAX, cache=None):
    """The pathwise Malliavin derivative r -> D_r Z_t on one sample.

    Entry i is the partial derivative of the discretized Z_t with respect to
    the increment of cell i.
    """
    values = derivative_batch(params, t, sample.increments[np.newaxis, :], sample.grid,
                              quad, q_max, cache)
    return DerivativeVector(values[0], t, sample.stream_id, sample.grid)


def derivative_increment(params, s, t, sample, quad=DEFAULT_QUAD, q_max=Q_MAX, cache=None):
    """D(Z_t - Z_s) on one sample."""
    return (malliavin_derivative(params, t, sample, quad, q_max, cache)
            - malliavin_derivative(params, s, sample, quad, q_max, cache))


# ----------------------------------------------------------------------
# Expectations
# ----------------------------------------------------------------------

def expected_derivative_inner(params, s, t):
    """E<DZ_s, DZ_t>, the scalar term of the product formula for the derivatives."""
    if not s > 0 or not t > 0:
        raise DomainError('s and t must be positive, got (%r, %r)' % (s, t))
    q = params.q
    return (q ** 2 * math.factorial(q - 1) * a_constant(params, q - 1)
            * power_law_double_integral(s, t, 2.0 * (params.H - 1.0)))


def discrete_covariance(params, s, t, grid, quad=DEFAULT_QUAD, q_max=Q_MAX, cache=None):
    """Exact E[Z_s Z_t] of the discretized process, q! <L_s, L_t>."""
    ks = _kernel(params, s, grid, quad, q_max, cache)
    kt = _kernel(params, t, grid, quad, q_max, cache)
    return math.factorial(params.q) * ks.inner(kt)


def expected_unit_interval_norm(params, grid, quad=DEFAULT_QUAD, q_max=Q_MAX, cache=None):
    """Exact E of the squared L^2([0,1]) norm of DZ_1 on the grid.

    For every cell i with midpoint in [0, 1], E[(D_i Z_1)^2] = q^2 (q-1)! |L_1(i, .)|^2.
    """
    kernel = _kernel(params, 1.0, grid, quad, q_max, cache)
    q = params.q
    per_cell = kernel.dense() ** 2
    for _ in range(q - 1):
        per_cell = per_cell.dot(grid.widths)
    mask = (grid.midpoints >= 0.0) & (grid.midpoints <= 1.0)
    return float(q ** 2 * math.factorial(q - 1) * np.dot(per_cell[mask], grid.widths[mask]))
