# coding: utf-8
"""Scalar constants and closed-form integrals of Hermite processes.

All functions here are pure; they take and return plain floats.
"""
from __future__ import absolute_import, division, print_function

import math
from collections import namedtuple
from numbers import Integral

import numpy as np
from scipy import special

from hermitelab.errors import DomainError


class HermiteParams(namedtuple('HermiteParams', 'q H H0 kernel_exponent c')):
    """Order, self-similarity index and derived constants of a Hermite process.

    Build instances with :func:`make_params`; the derived fields are not
    checked when the tuple is created by hand.

    Attributes:
        q (int): order of the Wiener chaos the process lives in.
        H (float): self-similarity index, 1/2 < H < 1.
        H0 (float): 1 + (H - 1)/q.
        kernel_exponent (float): H0 - 3/2, the power in the moving-average kernel.
        c (float): normalizing constant c(H, q), chosen so that E[Z_1^2] = 1.
    """
    __slots__ = ()

    def as_dict(self):
        return dict(self._asdict())

    def key(self):
        """Hashable identity used by kernel caches and manifests."""
        return (int(self.q), float(self.H))


def beta(a, b):
    """The Beta function, computed through log-gamma.

    Args:
        a (float): first argument, > 0
        b (float): second argument, > 0

    Returns:
        float: Gamma(a)Gamma(b)/Gamma(a+b)

    Raises:
        DomainError: if either argument is not positive.

    Examples:
        >>> beta(2, 3)
        0.0833...
    """
    if not a > 0 or not b > 0:
        raise DomainError('beta is defined for positive arguments, got (%r, %r)' % (a, b))
    return float(np.exp(special.betaln(a, b)))


def make_params(q, H):
    """Validates (q, H) and computes H0 and c(H, q).

    Args:
        q (int): order, q >= 1
        H (float): self-similarity index in (1/2, 1)

    Returns:
        HermiteParams

    Raises:
        DomainError: on q < 1, non-integer q, or H outside (1/2, 1).
    """
    if isinstance(q, bool) or not isinstance(q, Integral) or q < 1:
        raise DomainError('order q must be an integer >= 1, got %r' % (q,))
    H = float(H)
    if not 0.5 < H < 1.0:
        raise DomainError('self-similarity index H must lie in (1/2, 1), got %r' % H)

    q = int(q)
    H0 = 1.0 + (H - 1.0) / q
    log_radicand = (math.log(H * (2.0 * H - 1.0))
                    - special.gammaln(q + 1)
                    - q * special.betaln(H0 - 0.5, 2.0 - 2.0 * H0))
    c = math.exp(0.5 * log_radicand)
    return HermiteParams(q=q, H=H, H0=H0, kernel_exponent=H0 - 1.5, c=c)


def _beta_pair(params):
    # (2 - 2H)/q and 1/2 - (1 - H)/q are 2 - 2H0 and H0 - 1/2
    return (2.0 - 2.0 * params.H) / params.q, 0.5 - (1.0 - params.H) / params.q


def a_constant(params, r):
    """The constant a(H, q, r) of the (r+1)-contraction of two kernels.

    Args:
        params (HermiteParams): process parameters
        r (int): 0 <= r <= q - 1

    Returns:
        float: c(H,q)^2 * beta((2-2H)/q, 1/2-(1-H)/q)^(r+1)

    Raises:
        DomainError: if r is out of range.
    """
    if isinstance(r, bool) or not isinstance(r, Integral) or not 0 <= r <= params.q - 1:
        raise DomainError('r must be an integer in [0, %d], got %r' % (params.q - 1, r))
    a, b = _beta_pair(params)
    return params.c ** 2 * math.exp((r + 1) * special.betaln(a, b))


def contraction_exponent(params, r):
    """Power of |u1 - u2| left after contracting two kernels on r + 1 variables."""
    if not 0 <= r <= params.q - 1:
        raise DomainError('r must lie in [0, %d], got %r' % (params.q - 1, r))
    return 2.0 * (params.H - 1.0) * (r + 1) / params.q


def beta_identity_rhs(u, v, a):
    """Closed form of the integral over y of (u - y)_+^a (v - y)_+^a.

    Args:
        u (float): first shift
        v (float): second shift, different from u
        a (float): exponent in (-1, -1/2)

    Returns:
        float: beta(-1 - 2a, a + 1) * |u - v|^(2a + 1), or ``inf`` when u == v.

    Raises:
        DomainError: if a is outside the open interval (-1, -1/2).
    """
    if not -1.0 < a < -0.5:
        raise DomainError('exponent a must lie in (-1, -1/2), got %r' % a)
    gap = abs(u - v)
    if gap == 0.0:
        return float('inf')
    return beta(-1.0 - 2.0 * a, a + 1.0) * gap ** (2.0 * a + 1.0)


def power_law_double_integral(s, t, lam):
    """The integral of |u - v|^lam over [0, s] x [0, t].

    Integrating |u - v|^lam twice gives the antiderivative
    |u - v|^(lam+2) / ((lam+1)(lam+2)); inclusion-exclusion over the corners
    of the rectangle leaves s^(lam+2) + t^(lam+2) - |t - s|^(lam+2).

    Raises:
        DomainError: on non-positive s or t, or lam outside (-1, 0].
    """
    if not s > 0 or not t > 0:
        raise DomainError('s and t must be positive, got (%r, %r)' % (s, t))
    if not -1.0 < lam <= 0.0:
        raise DomainError('exponent must lie in (-1, 0], got %r' % lam)
    p = lam + 2.0
    return (s ** p + t ** p - abs(t - s) ** p) / ((lam + 1.0) * p)


def fbm_covariance(H, s, t):
    """Covariance of fractional Brownian motion, shared by every Hermite process."""
    two_h = 2.0 * H
    return 0.5 * (abs(s) ** two_h + abs(t) ** two_h - abs(t - s) ** two_h)


def truncation_tail(params, M):
    """L^2 mass of one kernel coordinate beyond -M: M^(2H0-2)/(2-2H0)."""
    if not M > 0:
        raise DomainError('truncation point M must be positive, got %r' % M)
    return M ** (2.0 * params.H0 - 2.0) / (2.0 - 2.0 * params.H0)


def truncation_for(params, rel_tol, norm_sq=1.0):
    """Smallest M whose truncation tail is at most rel_tol * norm_sq."""
    if not rel_tol > 0 or not norm_sq > 0:
        raise DomainError('tolerance and norm must be positive')
    budget = rel_tol * norm_sq * (2.0 - 2.0 * params.H0)
    return budget ** (1.0 / (2.0 * params.H0 - 2.0))
