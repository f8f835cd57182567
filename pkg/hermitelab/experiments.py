# coding: utf-8
"""Statistical and exact verification suites.

Every suite takes a :class:`~hermitelab.simulator.Laboratory` (the Gaussian
oracle and the constant identity need none), draws its samples from explicit
stream ranges and returns a :class:`~hermitelab.results.TestReport` whose
``manifest`` names those ranges. Per-row data goes into the report's
``table`` (a :class:`~hermitelab.results.ResultTable`).

When two sides of a comparison are sampled, they come from disjoint stream
ranges: laws are compared, not couplings.
"""
from __future__ import absolute_import, division, print_function

import itertools
import math

import numpy as np
from scipy import linalg, stats

from hermitelab.chaos_core import (hermite_identity_gap, isometry_check, product_formula_check,
                                   symmetrize, tensor)
from hermitelab.errors import DomainError
from hermitelab.hermite_kernels import (DerivativeVector, discrete_covariance, expected_derivative_inner,
                                        expected_unit_interval_norm)
from hermitelab.malliavin_gram import (factorize, gram_matrix, pivoted_determinant, residual_norm_sq,
                                       restricted_norm_sq)
from hermitelab.results import ResultTable, TestReport
from hermitelab.special_params import a_constant, fbm_covariance, make_params, power_law_double_integral
from hermitelab.wiener_grid import build_grid, indicator

__all__ = [
    'EmpiricalDistribution', 'TestReport', 'stochastic_dominance', 'covariance_validation',
    'self_similarity_test', 'stationary_increments_test', 'malliavin_selfsim_test',
    'pathwise_residual_inequality', 'slnd_dominance_test', 'det_positivity_experiment',
    'gram_determinant_check', 'gaussian_oracle', 'expected_inner_test', 'unit_interval_positivity',
    'adapted_residual_bound', 'pair_proportionality_check', 'refinement_study', 'normalization_test',
    'chaos_suite', 'constant_identity', 'simulate',
]

#: Two-sided allowance for the bias of the truncated, discretized process.
DISCRETIZATION_ALLOWANCE = 0.05

#: Relative allowance when both sides of a comparison are deterministic (q = 1).
DETERMINISTIC_RTOL = 0.01

KS_COLUMNS = ['check', 'statistic', 'p_value', 'threshold', 'passed']


class EmpiricalDistribution(object):
    """Sorted samples with a right-continuous step CDF.

    Raises:
        DomainError: on an empty sample.
    """
    __slots__ = ('samples',)

    def __init__(self, samples):
        samples = np.sort(np.asarray(samples, dtype=float).ravel())
        if samples.size == 0:
            raise DomainError('an empirical distribution needs at least one sample')
        self.samples = samples

    @property
    def n(self):
        return self.samples.size

    def __len__(self):
        return self.samples.size

    def __repr__(self):
        return '<EmpiricalDistribution n={}>'.format(self.n)

    def cdf(self, x):
        """Fraction of samples <= x."""
        counts = np.searchsorted(self.samples, x, side='right')
        return counts / self.n


# ----------------------------------------------------------------------
# Helpers
# ----------------------------------------------------------------------

def _streams(first, n, block=0):
    start = first + block * n
    return range(start, start + n)


def _manifest(lab, **streams):
    manifest = {'seed': lab.seed, 'n_cells': lab.grid.n_cells,
                'streams': dict((name, [r.start, r.stop]) for name, r in streams.items())}
    if len(streams) > 1:
        manifest['joint'] = 'independent'
    return manifest


def _mean_stderr(values):
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return float(np.mean(values)), float('inf')
    return float(np.mean(values)), float(np.std(values, ddof=1) / np.sqrt(values.size))


def _ratio(gap, tolerance):
    if tolerance > 0:
        return gap / tolerance
    return 0.0 if gap == 0 else float('inf')


def _ks_rows(comparisons, alpha, table):
    """Two-sample KS per comparison at the Bonferroni level alpha / m."""
    level = alpha / max(len(comparisons), 1)
    p_values = []
    for label, x, y in comparisons:
        result = stats.ks_2samp(x, y)
        p_values.append(result.pvalue)
        table.append([label, result.statistic, result.pvalue, level, result.pvalue > level])
    return p_values, level


def _ks_report(name, table, p_values, n_samples, manifest, **details):
    failed = sum(1 for row in table if not row['passed'])
    return TestReport(name, failed == 0, failed, 0, n_samples, manifest, table=table,
                      min_p_value=min(p_values) if p_values else None, **details)


def _check_time_grid(time_grid):
    time_grid = [float(t) for t in time_grid]
    if not time_grid or time_grid[0] != 0.0:
        raise DomainError('a time grid starts at 0, got %r' % (time_grid,))
    if any(b <= a for a, b in zip(time_grid, time_grid[1:])):
        raise DomainError('time grid must be strictly increasing, got %r' % (time_grid,))
    return time_grid


def _check_increasing_times(times):
    times = [float(t) for t in times]
    if not times:
        raise DomainError('at least one time is needed')
    if len(set(times)) != len(times):
        raise DomainError('times must be distinct, got %r' % (times,))
    if times[0] <= 0 or any(b <= a for a, b in zip(times, times[1:])):
        raise DomainError('times must be positive and strictly increasing, got %r' % (times,))
    return times


def _inner_products(lab, pairs, stream_ids, base=None):
    """<DZ_s, DZ_t> per sample and pair, or <D(Z_s - Z_base), D(Z_t - Z_base)>."""
    times = sorted(set(itertools.chain.from_iterable(pairs)) | ({base} if base is not None else set()))
    index = dict((t, k) for k, t in enumerate(times))
    widths = lab.grid.widths

    def fn(stack, _):
        if base is not None:
            stack = stack - stack[:, index[base], None, :]
        out = np.empty((stack.shape[0], len(pairs)))
        for m, (s, t) in enumerate(pairs):
            out[:, m] = (stack[:, index[s]] * stack[:, index[t]]).dot(widths)
        return out

    return lab.reduce_derivatives(times, fn, stream_ids)


# ----------------------------------------------------------------------
# Dominance
# ----------------------------------------------------------------------

def stochastic_dominance(X, Y, alpha=0.01):
    """First-order dominance of X over Y, F_X <= F_Y + eps everywhere.

    ``eps`` is the sum of the one-sample DKW band half-widths
    sqrt(ln(2/alpha) / (2n)), so a pass is conservative at finite n.

    Returns:
        TestReport: ``statistic`` is max over x of F_X(x) - F_Y(x),
        ``threshold`` is eps; ``margin`` = eps - statistic.
    """
    if not 0 < alpha < 1:
        raise DomainError('alpha must lie in (0, 1), got %r' % alpha)
    band = math.log(2.0 / alpha) / 2.0
    eps = math.sqrt(band / X.n) + math.sqrt(band / Y.n)
    points = np.concatenate([X.samples, Y.samples])
    violation = float(np.max(X.cdf(points) - Y.cdf(points)))
    return TestReport('stochastic_dominance', violation <= eps, violation, eps, X.n + Y.n,
                      margin=eps - violation, n_x=X.n, n_y=Y.n, alpha=alpha)


# ----------------------------------------------------------------------
# Second-order structure
# ----------------------------------------------------------------------

def covariance_validation(lab, times, n_samples, first_stream=0, n_sigma=4.0,
                          allowance=DISCRETIZATION_ALLOWANCE):
    """Monte Carlo E[Z_s Z_t] against the fractional Brownian covariance.

    Each entry passes when it lies within n_sigma standard errors plus
    ``allowance`` times (|s| |t|)^H of the target. The exact covariance of the
    discretized process is reported alongside.
    """
    times = [float(t) for t in times]
    H = lab.params.H
    streams = _streams(first_stream, n_samples)
    z = lab.process(times, streams)
    table = ResultTable(['s', 't', 'target', 'discrete_target', 'estimate', 'stderr', 'tolerance', 'passed'])
    worst = 0.0
    for i, j in itertools.combinations_with_replacement(range(len(times)), 2):
        s, t = times[i], times[j]
        estimate, stderr = _mean_stderr(z[:, i] * z[:, j])
        target = fbm_covariance(H, s, t)
        tolerance = n_sigma * stderr + allowance * (abs(s) * abs(t)) ** H
        discrete = discrete_covariance(lab.params, s, t, lab.grid, lab.quad, lab.q_max, lab.cache)
        ratio = _ratio(abs(estimate - target), tolerance)
        worst = max(worst, ratio)
        table.append([s, t, target, discrete, estimate, stderr, tolerance, ratio <= 1.0])
    return TestReport('covariance', worst <= 1.0, worst, 1.0, n_samples, _manifest(lab, samples=streams),
                      table=table, n_sigma=n_sigma, allowance=allowance)


def normalization_test(lab, n_samples, first_stream=0, n_sigma=3.0, allowance=DISCRETIZATION_ALLOWANCE):
    """E[Z_1^2] = 1 within n_sigma standard errors plus ``allowance``."""
    streams = _streams(first_stream, n_samples)
    z = lab.process([1.0], streams)[:, 0]
    estimate, stderr = _mean_stderr(z ** 2)
    tolerance = n_sigma * stderr + allowance
    gap = abs(estimate - 1.0)
    discrete = discrete_covariance(lab.params, 1.0, 1.0, lab.grid, lab.quad, lab.q_max, lab.cache)
    table = ResultTable(['target', 'discrete_target', 'estimate', 'stderr', 'tolerance'])
    table.append([1.0, discrete, estimate, stderr, tolerance])
    return TestReport('normalization', gap <= tolerance, gap, tolerance, n_samples,
                      _manifest(lab, samples=streams), table=table)


def expected_inner_test(lab, pairs, n_samples, first_stream=0, n_sigma=4.0,
                        allowance=DISCRETIZATION_ALLOWANCE):
    """Monte Carlo mean of <DZ_s, DZ_t> against its closed form.

    The closed form is q^2 (q-1)! a(H,q,q-1) times the double integral of
    |u - v|^(2H-2) over [0,s] x [0,t].
    """
    pairs = [(float(s), float(t)) for s, t in pairs]
    q = lab.params.q
    streams = _streams(first_stream, n_samples)
    inner = _inner_products(lab, pairs, streams)
    table = ResultTable(['s', 't', 'target', 'discrete_target', 'estimate', 'stderr', 'tolerance', 'passed'])
    worst = 0.0
    for m, (s, t) in enumerate(pairs):
        target = expected_derivative_inner(lab.params, s, t)
        discrete = q * discrete_covariance(lab.params, s, t, lab.grid, lab.quad, lab.q_max, lab.cache)
        estimate, stderr = _mean_stderr(inner[:, m])
        if q == 1:
            stderr = 0.0
        tolerance = n_sigma * stderr + allowance * q * (s * t) ** lab.params.H
        ratio = _ratio(abs(estimate - target), tolerance)
        worst = max(worst, ratio)
        table.append([s, t, target, discrete, estimate, stderr, tolerance, ratio <= 1.0])
    return TestReport('expected_inner', worst <= 1.0, worst, 1.0, n_samples, _manifest(lab, samples=streams),
                      table=table)


# ----------------------------------------------------------------------
# Laws: self-similarity and stationarity
# ----------------------------------------------------------------------

def self_similarity_test(lab, c, times, n_samples, alpha=0.01, first_stream=0):
    """KS between c^-H Z_ct and Z_t per time, Bonferroni over times."""
    if not c > 0:
        raise DomainError('scale c must be positive, got %r' % c)
    times = [float(t) for t in times]
    scaled_streams = _streams(first_stream, n_samples, 0)
    plain_streams = _streams(first_stream, n_samples, 1)
    scaled = lab.process([c * t for t in times], scaled_streams) * c ** (-lab.params.H)
    plain = lab.process(times, plain_streams)
    comparisons = [('t=%r' % t, scaled[:, k], plain[:, k]) for k, t in enumerate(times)]
    table = ResultTable(KS_COLUMNS)
    p_values, _ = _ks_rows(comparisons, alpha, table)
    return _ks_report('self_similarity', table, p_values, n_samples,
                      _manifest(lab, scaled=scaled_streams, plain=plain_streams), c=c, alpha=alpha)


def stationary_increments_test(lab, h, times, n_samples, alpha=0.01, first_stream=0):
    """KS between Z_(t+h) - Z_h and Z_t per time.

    When the grid reaches -t, the sign symmetry Z_t = -Z_(-t) in law is
    checked too, and counts towards the Bonferroni correction.
    """
    times = [float(t) for t in times]
    mirrored = [t for t in times if lab.grid.contains(-t)]
    shifted_streams = _streams(first_stream, n_samples, 0)
    plain_streams = _streams(first_stream, n_samples, 1)
    shifted = lab.process([h] + [t + h for t in times] + [-t for t in mirrored], shifted_streams)
    plain = lab.process(times, plain_streams)

    comparisons = [('Z(t+h)-Z(h), t=%r' % t, shifted[:, 1 + k] - shifted[:, 0], plain[:, k])
                   for k, t in enumerate(times)]
    offset = 1 + len(times)
    comparisons += [('-Z(-t), t=%r' % t, -shifted[:, offset + m], plain[:, times.index(t)])
                    for m, t in enumerate(mirrored)]
    table = ResultTable(KS_COLUMNS)
    p_values, _ = _ks_rows(comparisons, alpha, table)
    return _ks_report('stationary_increments', table, p_values, n_samples,
                      _manifest(lab, shifted=shifted_streams, plain=plain_streams),
                      h=h, alpha=alpha, sign_checks=len(mirrored))


def malliavin_selfsim_test(lab, c, pairs, n_samples, alpha=0.01, shift=0.5, first_stream=0,
                           allowance=DETERMINISTIC_RTOL):
    """Scaling and shift invariance of the law of <DZ_s, DZ_t>.

    Compares <DZ_cs, DZ_ct> with c^2H <DZ_s, DZ_t>, and
    <D(Z_(s+a) - Z_a), D(Z_(t+a) - Z_a)> with <DZ_s, DZ_t>. For q = 1 the
    derivatives are deterministic and the sides are compared as numbers,
    up to ``allowance`` relative error.
    """
    if not c > 0:
        raise DomainError('scale c must be positive, got %r' % c)
    pairs = [(float(s), float(t)) for s, t in pairs]
    a = float(shift)
    two_h = 2.0 * lab.params.H
    scaled_streams = _streams(first_stream, n_samples, 0)
    plain_streams = _streams(first_stream, n_samples, 1)
    shifted_streams = _streams(first_stream, n_samples, 2)
    scaled = _inner_products(lab, [(c * s, c * t) for s, t in pairs], scaled_streams)
    plain = _inner_products(lab, pairs, plain_streams)
    shifted = _inner_products(lab, [(s + a, t + a) for s, t in pairs], shifted_streams, base=a)

    comparisons = []
    for m, (s, t) in enumerate(pairs):
        comparisons.append(('scale, (s,t)=(%r,%r)' % (s, t), scaled[:, m], c ** two_h * plain[:, m]))
        comparisons.append(('shift, (s,t)=(%r,%r)' % (s, t), shifted[:, m], plain[:, m]))

    table = ResultTable(KS_COLUMNS)
    if lab.params.q == 1:
        for label, x, y in comparisons:
            gap = abs(x[0] - y[0]) / max(abs(y[0]), np.finfo(float).tiny)
            table.append([label, gap, None, allowance, gap <= allowance])
        p_values = []
    else:
        p_values, _ = _ks_rows(comparisons, alpha, table)
    return _ks_report('malliavin_self_similarity', table, p_values, n_samples,
                      _manifest(lab, scaled=scaled_streams, plain=plain_streams, shifted=shifted_streams),
                      c=c, shift=a, alpha=alpha, deterministic=lab.params.q == 1)


# ----------------------------------------------------------------------
# Projection residuals and nondeterminism
# ----------------------------------------------------------------------

def _zero_vector(lab, stream_id):
    return DerivativeVector(np.zeros(lab.grid.n_cells), 0.0, stream_id, lab.grid)


def pathwise_residual_inequality(lab, time_grid, n_samples, first_stream=0, slack=1e-8):
    """Per sample and level k, the residual of DZ_(t_k) off span{DZ_(t_1..t_(k-1))}
    is at least the residual of D(Z_(t_k) - Z_(t_(k-1))) off the span of the
    past differences.

    ``time_grid`` starts at 0. A level is violated when the left side falls
    below the right by more than ``slack`` times the larger of the right side
    and |DZ_(t_k)|^2.
    """
    time_grid = _check_time_grid(time_grid)
    positive = time_grid[1:]
    if not positive:
        raise DomainError('the time grid needs at least one positive time')
    streams = _streams(first_stream, n_samples)

    def fn(stack, stream_ids):
        out = np.empty((len(stream_ids), len(positive), 3))
        for row, stream_id in enumerate(stream_ids):
            full = [_zero_vector(lab, stream_id)] + lab.vectors(stack[row], positive, stream_id)
            for k in range(1, len(full)):
                lhs = residual_norm_sq(full[1:k], full[k])
                differences = [full[u] - full[v] for u, v in itertools.combinations(range(k), 2)]
                rhs = residual_norm_sq(differences, full[k] - full[k - 1])
                out[row, k - 1] = (lhs, rhs, full[k].norm_sq())
        return out

    values = lab.reduce_derivatives(positive, fn, streams)
    lhs, rhs, norm = values[..., 0], values[..., 1], values[..., 2]
    violated = lhs < rhs - slack * np.maximum(rhs, norm)
    table = ResultTable(['stream_id', 'level', 't', 'lhs', 'rhs', 'violated'])
    for row, stream_id in enumerate(streams):
        for k, t in enumerate(positive):
            table.append([stream_id, k + 1, t, lhs[row, k], rhs[row, k], violated[row, k]])
    violations = int(np.count_nonzero(violated))
    return TestReport('pathwise_residual', violations == 0, violations, 0, n_samples,
                      _manifest(lab, samples=streams), table=table, time_grid=time_grid, slack=slack,
                      min_margin=float(np.min(lhs - rhs)))


def slnd_dominance_test(lab, time_grid, j, n_samples, alpha=0.01, first_stream=0):
    """Stochastic dominance of the projection residual over the scaled unit-interval norm.

    X samples |DZ_(t_j) - proj DZ_(t_j)|^2 with the projection onto
    span{DZ_(t_1..t_(j-1))}; Y independently samples
    (t_j - t_(j-1))^2H |DZ_1|^2 over [0, 1].
    """
    time_grid = _check_time_grid(time_grid)
    if not 1 <= j < len(time_grid):
        raise DomainError('level j must lie in [1, %d], got %r' % (len(time_grid) - 1, j))
    t_j, t_prev = time_grid[j], time_grid[j - 1]
    past = time_grid[1:j]
    x_streams = _streams(first_stream, n_samples, 0)
    y_streams = _streams(first_stream, n_samples, 1)

    def residuals(stack, stream_ids):
        out = np.empty(len(stream_ids))
        for row, stream_id in enumerate(stream_ids):
            vectors = lab.vectors(stack[row], past + [t_j], stream_id)
            out[row] = residual_norm_sq(vectors[:-1], vectors[-1])
        return out

    def unit_norms(stack, stream_ids):
        out = np.empty(len(stream_ids))
        for row, stream_id in enumerate(stream_ids):
            out[row] = restricted_norm_sq(lab.vectors(stack[row], [1.0], stream_id)[0], 0.0, 1.0)
        return out

    X = lab.reduce_derivatives(past + [t_j], residuals, x_streams)
    Y = (t_j - t_prev) ** (2.0 * lab.params.H) * lab.reduce_derivatives([1.0], unit_norms, y_streams)
    dominance = stochastic_dominance(EmpiricalDistribution(X), EmpiricalDistribution(Y), alpha)

    deterministic_margin = float(np.min(X) - np.max(Y))
    passed = dominance.passed and (lab.params.q > 1 or deterministic_margin >= 0.0)
    table = ResultTable(['stream_id_x', 'x', 'stream_id_y', 'y'])
    for row in range(n_samples):
        table.append([x_streams[row], X[row], y_streams[row], Y[row]])
    return TestReport('slnd_dominance', passed, dominance.statistic, dominance.threshold, n_samples,
                      _manifest(lab, x=x_streams, y=y_streams), table=table, time_grid=time_grid, j=j,
                      alpha=alpha, margin=dominance.margin, deterministic_margin=deterministic_margin,
                      x_median=float(np.median(X)), y_median=float(np.median(Y)))


def adapted_residual_bound(lab, time_grid, j, n_samples, first_stream=0, slack=1e-8):
    """The residual of DZ_1 off span{D(Z_u - Z_v)} over rescaled past times is
    at least |DZ_1|^2 over [0, 1].

    The past times t_0..t_(j-1) are mapped by t -> (t - t_(j-1)) / (t_j - t_(j-1))
    to non-positive times, whose derivatives vanish on (0, 1].

    Raises:
        DomainError: if a rescaled time falls outside the grid.
    """
    time_grid = _check_time_grid(time_grid)
    if not 1 <= j < len(time_grid):
        raise DomainError('level j must lie in [1, %d], got %r' % (len(time_grid) - 1, j))
    t_j, t_prev = time_grid[j], time_grid[j - 1]
    rescaled = [(t - t_prev) / (t_j - t_prev) for t in time_grid[:j]]
    for u in rescaled:
        if not lab.grid.contains(u):
            raise DomainError('rescaled time %r lies outside the grid' % u)
    times = rescaled + [1.0]
    streams = _streams(first_stream, n_samples)

    def fn(stack, stream_ids):
        out = np.empty((len(stream_ids), 3))
        for row, stream_id in enumerate(stream_ids):
            vectors = lab.vectors(stack[row], times, stream_id)
            target = vectors[-1]
            differences = [vectors[u] - vectors[v] for u, v in itertools.combinations(range(len(rescaled)), 2)]
            out[row] = (residual_norm_sq(differences, target), restricted_norm_sq(target, 0.0, 1.0),
                        target.norm_sq())
        return out

    values = lab.reduce_derivatives(times, fn, streams)
    lhs, rhs, norm = values[:, 0], values[:, 1], values[:, 2]
    violated = lhs < rhs - slack * np.maximum(rhs, norm)
    table = ResultTable(['stream_id', 'residual', 'unit_interval_norm', 'violated'])
    for row, stream_id in enumerate(streams):
        table.append([stream_id, lhs[row], rhs[row], violated[row]])
    violations = int(np.count_nonzero(violated))
    return TestReport('adapted_residual', violations == 0, violations, 0, n_samples,
                      _manifest(lab, samples=streams), table=table, rescaled_times=rescaled, slack=slack)


def unit_interval_positivity(lab, n_samples, floor=1e-12, first_stream=0, n_sigma=4.0):
    """|DZ_1|^2 over [0, 1] never falls to ``floor`` times its mean.

    The sample mean is also compared with the exact expectation of the
    discretized process.
    """
    streams = _streams(first_stream, n_samples)

    def fn(stack, stream_ids):
        out = np.empty(len(stream_ids))
        for row, stream_id in enumerate(stream_ids):
            out[row] = restricted_norm_sq(lab.vectors(stack[row], [1.0], stream_id)[0], 0.0, 1.0)
        return out

    norms = lab.reduce_derivatives([1.0], fn, streams)
    expected = expected_unit_interval_norm(lab.params, lab.grid, lab.quad, lab.q_max, lab.cache)
    threshold = floor * expected
    fraction = float(np.mean(norms <= threshold))
    estimate, stderr = _mean_stderr(norms)
    if lab.params.q == 1:
        tolerance = 1e-9 * expected
    else:
        tolerance = n_sigma * stderr
    mean_ok = abs(estimate - expected) <= tolerance
    table = ResultTable(['stream_id', 'unit_interval_norm', 'at_floor'])
    for row, stream_id in enumerate(streams):
        table.append([stream_id, norms[row], norms[row] <= threshold])
    return TestReport('unit_interval_positivity', fraction == 0.0 and mean_ok, fraction, 0.0, n_samples,
                      _manifest(lab, samples=streams), table=table, expected=expected, estimate=estimate,
                      stderr=stderr, floor=threshold, minimum=float(np.min(norms)))


def pair_proportionality_check(lab, s, t, n_samples, scale=2.0, first_stream=0, tol=1e-10):
    """The pair (Z_t, scale Z_t) has a singular Malliavin matrix on every
    sample; the pair (Z_s, Z_t) on none.

    Singular means det <= tol * trace^2.
    """
    s, t = float(s), float(t)
    if s == t or s == 0.0 or t == 0.0:
        raise DomainError('need two distinct non-zero times, got (%r, %r)' % (s, t))
    streams = _streams(first_stream, n_samples)

    def fn(stack, stream_ids):
        out = np.empty((len(stream_ids), 2))
        for row, stream_id in enumerate(stream_ids):
            vs, vt = lab.vectors(stack[row], [s, t], stream_id)
            scaled = DerivativeVector(scale * vt.values, t, stream_id, lab.grid)
            for col, family in enumerate(([vt, scaled], [vs, vt])):
                gram = gram_matrix(family)
                out[row, col] = gram.det() / gram.trace() ** 2
        return out

    ratios = lab.reduce_derivatives([s, t], fn, streams)
    proportional_singular = bool(np.all(ratios[:, 0] <= tol))
    distinct_singular = float(np.mean(ratios[:, 1] <= tol))
    table = ResultTable(['stream_id', 'proportional_ratio', 'distinct_ratio'])
    for row, stream_id in enumerate(streams):
        table.append([stream_id, ratios[row, 0], ratios[row, 1]])
    return TestReport('pair_proportionality', proportional_singular and distinct_singular == 0.0,
                      distinct_singular, 0.0, n_samples, _manifest(lab, samples=streams), table=table,
                      proportional_singular=proportional_singular, max_proportional_ratio=float(np.max(ratios[:, 0])),
                      min_distinct_ratio=float(np.min(ratios[:, 1])), tol=tol)


# ----------------------------------------------------------------------
# Determinants
# ----------------------------------------------------------------------

def gram_determinant_check(lab, times, n_samples, first_stream=0, rtol=1e-8):
    """Per sample, the projection determinant against LU elimination of the Gram matrix."""
    times = _check_increasing_times(times)
    streams = _streams(first_stream, n_samples)
    n = len(times)
    tiny = np.finfo(float).eps

    def fn(stack, stream_ids):
        out = np.empty((len(stream_ids), 4 + n))
        for row, stream_id in enumerate(stream_ids):
            vectors = lab.vectors(stack[row], times, stream_id)
            result = factorize(vectors)
            gram = gram_matrix(vectors)
            elimination = gram.det()
            scale = max(abs(result.det), abs(elimination), tiny * gram.trace() ** n)
            gap = abs(result.det - elimination) / scale if scale > 0 else 0.0
            well_formed = gram.is_symmetric() and gram.is_psd()
            out[row, :4] = (result.det, elimination, gap, well_formed)
            out[row, 4:] = result.residual_sq
        return out

    values = lab.reduce_derivatives(times, fn, streams)
    gaps = values[:, 2]
    well_formed = bool(np.all(values[:, 3] == 1.0))
    headers = ['stream_id', 'det_projection', 'det_elimination', 'relative_gap']
    headers += ['residual_sq_%d' % (k + 1) for k in range(n)]
    table = ResultTable(headers)
    for row, stream_id in enumerate(streams):
        table.append([stream_id] + values[row, :3].tolist() + values[row, 4:].tolist())
    worst = float(np.max(gaps))
    return TestReport('gram_determinant', worst <= rtol and well_formed, worst, rtol, n_samples,
                      _manifest(lab, samples=streams), table=table, times=times, well_formed=well_formed,
                      det_spread=float(np.ptp(values[:, 0])))


def det_positivity_experiment(lab, times, n_samples, floor=1e-12, first_stream=0):
    """Fraction of samples whose Malliavin determinant is at or below the floor.

    The floor of a sample is ``floor`` times the product of |DZ_(t_j)|^2,
    since the determinant scales like that product.

    Raises:
        DomainError: on duplicate, non-positive or unordered times.
    """
    times = _check_increasing_times(times)
    streams = _streams(first_stream, n_samples)
    n = len(times)

    def fn(stack, stream_ids):
        out = np.empty((len(stream_ids), 2 + n))
        for row, stream_id in enumerate(stream_ids):
            vectors = lab.vectors(stack[row], times, stream_id)
            result = factorize(vectors)
            out[row, 0] = result.det
            out[row, 1] = floor * np.prod([v.norm_sq() for v in vectors])
            out[row, 2:] = result.residual_sq
        return out

    values = lab.reduce_derivatives(times, fn, streams)
    dets, floors, residuals = values[:, 0], values[:, 1], values[:, 2:]
    at_floor = dets <= floors
    fraction = float(np.mean(at_floor))
    levels = [{'level': k + 1, 'min': float(np.min(residuals[:, k])),
               'median': float(np.median(residuals[:, k])), 'max': float(np.max(residuals[:, k]))}
              for k in range(n)]
    headers = ['stream_id', 'det', 'floor', 'at_floor'] + ['residual_sq_%d' % (k + 1) for k in range(n)]
    table = ResultTable(headers)
    for row, stream_id in enumerate(streams):
        table.append([stream_id, dets[row], floors[row], at_floor[row]] + residuals[row].tolist())
    return TestReport('det_positivity', fraction == 0.0, fraction, 0.0, n_samples,
                      _manifest(lab, samples=streams), table=table, times=times, floor=floor,
                      min_det=float(np.min(dets)), median_det=float(np.median(dets)), levels=levels)


def gaussian_oracle(H, times, rtol=1e-10):
    """Exact analysis of fractional Brownian motion at ``times``.

    The covariance determinant is computed by LU elimination and as the
    product of the conditional variances Var(Z_k | Z_1..Z_(k-1)) (Schur
    complements). The smallest ratio of conditional variance to
    (t_k - t_(k-1))^2H is reported as the empirical nondeterminism constant.

    Raises:
        DomainError: on H outside (0, 1) or non-distinct or non-positive times.
    """
    if not 0.0 < H < 1.0:
        raise DomainError('H must lie in (0, 1), got %r' % H)
    times = [float(t) for t in times]
    if not times or any(t <= 0 for t in times) or len(set(times)) != len(times):
        raise DomainError('times must be distinct and positive, got %r' % (times,))
    times = np.array(sorted(times))
    two_h = 2.0 * H
    cov = 0.5 * (times[:, None] ** two_h + times[None, :] ** two_h
                 - np.abs(times[:, None] - times[None, :]) ** two_h)

    n = times.size
    conditional = np.empty(n)
    last_only = np.empty(n)
    for k in range(n):
        if k == 0:
            conditional[k] = last_only[k] = cov[0, 0]
            continue
        b = cov[:k, k]
        conditional[k] = cov[k, k] - np.dot(b, linalg.solve(cov[:k, :k], b, assume_a='pos'))
        last_only[k] = cov[k, k] - cov[k - 1, k] ** 2 / cov[k - 1, k - 1]

    det_elimination = pivoted_determinant(cov)
    det_conditional = float(np.prod(conditional))
    gap = abs(det_elimination - det_conditional) / max(abs(det_elimination), np.finfo(float).tiny)
    spacing = np.diff(np.concatenate([[0.0], times])) ** two_h
    ratios = conditional / spacing
    monotone = bool(np.all(conditional <= last_only * (1.0 + 1e-12) + 1e-300))

    table = ResultTable(['k', 't', 'conditional_variance', 'last_only_variance', 'spacing_power', 'ratio'])
    for k in range(n):
        table.append([k + 1, times[k], conditional[k], last_only[k], spacing[k], ratios[k]])
    passed = gap <= rtol and monotone and bool(np.all(conditional > 0))
    return TestReport('gaussian_oracle', passed, gap, rtol, 0, {'H': H, 'times': times.tolist()}, table=table,
                      det_elimination=det_elimination, det_conditional=det_conditional,
                      conditional_variances=conditional, c_H=float(np.min(ratios)), monotone=monotone)


# ----------------------------------------------------------------------
# Chaos calculus and grid refinement
# ----------------------------------------------------------------------

def _indicator_kernels(grid):
    first = indicator(grid, 0.0, 1.0)
    second = indicator(grid, 0.5, 1.5)
    return {1: tensor(grid, first), 2: symmetrize(tensor(grid, first, second))}


def chaos_suite(lab, n_samples, first_stream=0, n_sigma=4.0, product_cells=30, hermite_cells=120):
    """Isometry, product-formula and Hermite-identity checks on indicator kernels.

    Isometry runs on the laboratory grid for orders (1,1), (1,2), (2,2).
    Product formulas of total order above 2 run on a ``product_cells`` grid
    over [-1, 2], since their contractions are dense of order p + q; the
    third-order Hermite identity runs on ``hermite_cells`` cells. Both
    identities hold exactly for step kernels, so their gaps are held to
    rounding level.

    Returns:
        list of TestReport
    """
    fine = _indicator_kernels(lab.grid)
    coarse = _indicator_kernels(build_grid(1.0, 2.0, product_cells))
    reports = []
    for p, q in ((1, 1), (1, 2), (2, 2)):
        reports.append(isometry_check(fine[p], fine[q], n_samples, lab.seed, first_stream, n_sigma))
    reports.append(product_formula_check(fine[1], fine[1], n_samples, lab.seed, first_stream))
    for p, q in ((1, 2), (2, 2)):
        reports.append(product_formula_check(coarse[p], coarse[q], n_samples, lab.seed, first_stream))
    for q, grid in ((2, lab.grid), (3, build_grid(1.0, 2.0, hermite_cells))):
        h = indicator(grid, 0.0, 1.0)
        reports.append(hermite_identity_gap(h, q, grid, n_samples, lab.seed, first_stream))
    return reports


def refinement_study(lab, n_cells_list, n_samples, first_stream=0):
    """Variance of Z_1, the product-formula gap and the second-order Hermite gap as the grid is refined.

    On nested grids the discretized Z_1 is the conditional expectation of
    the finer one, so |E[Z_1^2] - 1| (computed exactly) may not grow by more
    than the quadrature tolerance. The product formula I_1(f)^2 = I_2(f x f) + |f|^2
    and the Hermite identity must hold to rounding on every grid.
    """
    n_cells_list = sorted(int(n) for n in n_cells_list)
    streams = _streams(first_stream, n_samples)
    table = ResultTable(['n_cells', 'delta', 'exact_variance', 'variance_gap', 'mc_variance', 'mc_stderr',
                         'product_gap', 'hermite_gap'])
    gaps = []
    exact_ok = True
    for n in n_cells_list:
        sub = lab.with_grid(n)
        exact = discrete_covariance(sub.params, 1.0, 1.0, sub.grid, sub.quad, sub.q_max, sub.cache)
        z = sub.process([1.0], streams)[:, 0]
        estimate, stderr = _mean_stderr(z ** 2)
        first = _indicator_kernels(sub.grid)[1]
        product = product_formula_check(first, first, n_samples, sub.seed, first_stream)
        hermite = hermite_identity_gap(indicator(sub.grid, 0.0, 1.0), 2, sub.grid, n_samples, sub.seed,
                                       first_stream)
        exact_ok = exact_ok and product.passed and hermite.passed
        gaps.append(abs(exact - 1.0))
        table.append([sub.grid.n_window, sub.grid.delta, exact, gaps[-1], estimate, stderr,
                      product.statistic, hermite.statistic])
    growth = max([b - a for a, b in zip(gaps, gaps[1:])] or [0.0])
    tolerance = lab.quad.tol
    return TestReport('refinement', growth <= tolerance and exact_ok, growth, tolerance, n_samples,
                      _manifest(lab, samples=streams), table=table, n_cells=n_cells_list, variance_gaps=gaps,
                      identities_exact=exact_ok)


def constant_identity(q_values=(1, 2, 3), H_values=(0.55, 0.7, 0.9), rtol=1e-8):
    """q^2 (q-1)! a(H,q,q-1) times the double integral of |u-v|^(2H-2) over [0,1]^2 equals q."""
    table = ResultTable(['q', 'H', 'value', 'relative_error'])
    worst = 0.0
    for q in q_values:
        for H in H_values:
            params = make_params(q, H)
            value = (q ** 2 * math.factorial(q - 1) * a_constant(params, q - 1)
                     * power_law_double_integral(1.0, 1.0, 2.0 * (H - 1.0)))
            error = abs(value - q) / q
            worst = max(worst, error)
            table.append([q, H, value, error])
    return TestReport('constant_identity', worst <= rtol, worst, rtol, 0,
                      {'q': list(q_values), 'H': list(H_values)}, table=table)


def simulate(lab, times, n_samples, first_stream=0):
    """Raw Z_t samples, one row per stream."""
    times = [float(t) for t in times]
    streams = _streams(first_stream, n_samples)
    z = lab.process(times, streams)
    table = ResultTable(['stream_id'] + ['Z(%r)' % t for t in times])
    for row, stream_id in enumerate(streams):
        table.append([stream_id] + z[row].tolist())
    return TestReport('simulate', True, 0, 0, n_samples, _manifest(lab, samples=streams), table=table,
                      times=times, sample_mean=z.mean(axis=0), sample_second_moment=(z ** 2).mean(axis=0))
