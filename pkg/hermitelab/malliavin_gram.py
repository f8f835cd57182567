# coding: utf-8
"""Malliavin matrices of derivative vectors and their projection factorization.

For vectors v_1..v_n the Gram determinant equals |v_1|^2 times the squared
distances of each v_j to the span of v_1..v_{j-1}. ``factorize`` computes
those distances by orthogonal projection; ``pivoted_determinant`` is the
independent route through the assembled matrix.
"""
from __future__ import absolute_import, division, print_function

import numpy as np
from scipy import linalg

from hermitelab.errors import DomainError, ShapeError

#: A residual enters the projection basis only above this fraction of |v|^2.
BASIS_RTOL = (64 * np.finfo(float).eps) ** 2


class GramMatrix(object):
    """Symmetric matrix of width-weighted inner products."""
    __slots__ = ('entries',)

    def __init__(self, entries):
        entries = np.asarray(entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ShapeError('a Gram matrix is square, got shape %s' % (entries.shape,))
        self.entries = entries

    @property
    def n(self):
        return self.entries.shape[0]

    def __repr__(self):
        return '<GramMatrix n={}>'.format(self.n)

    def trace(self):
        return float(np.trace(self.entries))

    def is_symmetric(self, tol=1e-12):
        scale = max(np.max(np.abs(self.entries)), np.finfo(float).tiny) if self.n else 1.0
        return bool(np.all(np.abs(self.entries - self.entries.T) <= tol * scale))

    def is_psd(self, rtol=1e-10):
        """Eigenvalues no lower than -rtol * trace."""
        if not self.n:
            return True
        return bool(np.min(np.linalg.eigvalsh(self.entries)) >= -rtol * self.trace())

    def det(self):
        return pivoted_determinant(self.entries)


class FactorizationResult(object):
    """Determinant and squared projection residuals of a vector family.

    Attributes:
        det (float): product of ``residual_sq``
        residual_sq (ndarray): |v_1|^2, then |v_j - proj v_j|^2 for j >= 2
    """
    __slots__ = ('det', 'residual_sq')

    def __init__(self, det, residual_sq):
        self.det = float(det)
        self.residual_sq = np.asarray(residual_sq, dtype=float)

    def __repr__(self):
        return '<FactorizationResult det={!r} n={}>'.format(self.det, self.residual_sq.size)


def _common_grid(vectors):
    grid = vectors[0].grid
    for v in vectors[1:]:
        if v.grid != grid:
            raise ShapeError('derivative vectors live on different grids: %r and %r' % (grid, v.grid))
    return grid


class _Projector(object):
    """Orthonormal basis (under the width-weighted product) grown one vector at a time."""

    def __init__(self, widths):
        self.widths = widths
        self.basis = []

    def residual(self, values):
        # modified Gram-Schmidt, then one reorthogonalization pass
        w = np.array(values, dtype=float, copy=True)
        for _ in range(2):
            for u in self.basis:
                w -= np.dot(u * self.widths, w) * u
        return w

    def add(self, values):
        """Projects ``values`` off the basis, extends the basis and returns the squared residual."""
        w = self.residual(values)
        residual_sq = float(np.dot(w * w, self.widths))
        norm_sq = float(np.dot(values * values, self.widths))
        if residual_sq > BASIS_RTOL * norm_sq:
            self.basis.append(w / np.sqrt(residual_sq))
        return residual_sq


def gram_matrix(vectors):
    """Assembles (<v_i, v_j>) with entries sum_k v_i[k] v_j[k] w_k.

    Raises:
        ShapeError: if the vectors live on different grids.
    """
    vectors = list(vectors)
    if not vectors:
        return GramMatrix(np.zeros((0, 0)))
    grid = _common_grid(vectors)
    n = len(vectors)
    entries = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            entries[i, j] = np.dot(vectors[i].values * vectors[j].values, grid.widths)
            entries[j, i] = entries[i, j]
    return GramMatrix(entries)


def factorize(vectors):
    """Gram determinant as a product of projection residuals.

    Zero residuals are returned as computed; nothing is floored.

    Raises:
        DomainError: on an empty family.
        ShapeError: if the vectors live on different grids.
    """
    vectors = list(vectors)
    if not vectors:
        raise DomainError('factorize needs at least one vector')
    grid = _common_grid(vectors)
    projector = _Projector(grid.widths)
    residual_sq = [projector.add(v.values) for v in vectors]
    return FactorizationResult(np.prod(residual_sq), residual_sq)


def residual_norm_sq(vectors, target):
    """Squared distance of ``target`` to the span of ``vectors``.

    An empty span gives |target|^2; the result never exceeds it beyond rounding.
    """
    vectors = list(vectors)
    grid = _common_grid(vectors + [target])
    projector = _Projector(grid.widths)
    for v in vectors:
        projector.add(v.values)
    w = projector.residual(target.values)
    return float(np.dot(w * w, grid.widths))


def restricted_norm_sq(v, a, b):
    """Squared L^2 norm of v over the cells whose midpoint lies in [a, b].

    Raises:
        DomainError: if no midpoint lies in [a, b].
    """
    m = v.grid.midpoints
    mask = (m >= a) & (m <= b)
    if not np.any(mask):
        raise DomainError('no cell midpoint lies in [%r, %r]' % (a, b))
    return float(np.dot(v.values[mask] ** 2, v.grid.widths[mask]))


def pivoted_determinant(matrix):
    """Determinant through LU with partial pivoting."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.size == 0:
        return 1.0
    lu, piv = linalg.lu_factor(matrix, check_finite=True)
    sign = -1.0 if np.count_nonzero(piv != np.arange(piv.size)) % 2 else 1.0
    return float(sign * np.prod(np.diag(lu)))
