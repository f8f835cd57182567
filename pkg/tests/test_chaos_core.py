# coding: utf-8
from __future__ import absolute_import, division, print_function

import itertools
import math
import unittest

import numpy as np

from hermitelab.chaos_core import (DiscretizedKernel, contraction, hermite_identity_gap, hermite_poly,
                                   isometry_check, multiple_integral, multiple_integral_batch,
                                   product_formula_check, product_terms, section_integral_batch,
                                   symmetrize, tensor, wick_coefficient)
from hermitelab.errors import DomainError, ResourceError, ShapeError
from hermitelab.wiener_grid import build_grid, indicator, sample_batch, sample_increments, wiener_integral


def brute_force_integral(values, x):
    """Sum over distinct index tuples, one loop per argument."""
    n = x.size
    total = 0.0
    for idx in itertools.product(range(n), repeat=values.ndim):
        if len(set(idx)) == len(idx):
            total += values[idx] * np.prod(x[list(idx)])
    return total


def wick_brute_force(values, x, widths):
    """Ito integral of a symmetric kernel of order 2 or 3, written out term by term."""
    n = x.size
    cells = range(n)
    if values.ndim == 2:
        full = sum(values[i, j] * x[i] * x[j] for i, j in itertools.product(cells, repeat=2))
        return full - sum(values[i, i] * widths[i] for i in cells)
    full = sum(values[i, j, k] * x[i] * x[j] * x[k] for i, j, k in itertools.product(cells, repeat=3))
    trace = sum(values[k, i, i] * widths[i] * x[k] for k, i in itertools.product(cells, repeat=2))
    return full - 3 * trace


def zero_repeated(values):
    for idx in itertools.product(range(values.shape[0]), repeat=values.ndim):
        if len(set(idx)) < len(idx):
            values[idx] = 0.0
    return values


class HermitePolyTests(unittest.TestCase):

    def test_known_values(self):
        self.assertEqual(2.0, hermite_poly(3, 2.0))
        self.assertEqual(1.0, hermite_poly(0, 5.0))
        self.assertEqual(-1.0, hermite_poly(2, 0.0))

    def test_three_term_recursion(self):
        for x in (-1.3, 0.2, 2.7):
            for q in range(1, 6):
                expected = x * hermite_poly(q, x) - q * hermite_poly(q - 1, x)
                self.assertAlmostEqual(expected, hermite_poly(q + 1, x), places=9)

    def test_when_index_is_negative_then_raises(self):
        with self.assertRaises(DomainError):
            hermite_poly(-1, 0.0)


class KernelTests(unittest.TestCase):

    def setUp(self):
        self.grid = build_grid(1, 1, 6)
        self.rng = np.random.default_rng(3)

    def test_symmetry_is_detected_from_values(self):
        a = self.rng.standard_normal((6, 6))
        self.assertFalse(DiscretizedKernel.from_array(a, self.grid).symmetric)
        self.assertTrue(DiscretizedKernel.from_array(a + a.T, self.grid).symmetric)
        self.assertTrue(DiscretizedKernel.from_array(a + a.T, self.grid).check_symmetry())
        self.assertFalse(DiscretizedKernel(2, self.grid, dense=a).check_symmetry())

    def test_symmetrize_averages_permutations(self):
        a = self.rng.standard_normal((6, 6))
        sym = symmetrize(DiscretizedKernel.from_array(a, self.grid))
        np.testing.assert_allclose((a + a.T) / 2, sym.dense())
        self.assertTrue(sym.symmetric)

    def test_norm_weights_every_argument_by_its_cell_width(self):
        f = DiscretizedKernel(2, self.grid, dense=np.ones((6, 6)))
        self.assertAlmostEqual(36 * self.grid.delta ** 2, f.norm_sq(), places=12)
        self.assertAlmostEqual(f.norm_sq(), f.norm_sq_estimate(n_tuples=64), places=12)
        grid = build_grid(1, 1, 6, far=8.0)
        f = DiscretizedKernel(2, grid, dense=np.ones((grid.n_cells,) * 2))
        self.assertAlmostEqual(np.sum(grid.widths) ** 2, f.norm_sq(), places=9)

    def test_traces_contract_the_diagonal_with_the_widths(self):
        grid = build_grid(1, 1, 3, far=4.0)
        n = grid.n_cells
        a = self.rng.standard_normal((n, n, n))
        f = symmetrize(DiscretizedKernel(3, grid, dense=a))
        dense, trace = f.traces()
        expected = [sum(dense[k, i, i] * grid.widths[i] for i in range(n)) for k in range(n)]
        np.testing.assert_allclose(expected, trace, rtol=1e-12)

    def test_wick_coefficients(self):
        self.assertEqual([1, -1], [wick_coefficient(2, r) for r in (0, 1)])
        self.assertEqual([1, -3], [wick_coefficient(3, r) for r in (0, 1)])
        self.assertEqual([1, -6, 3], [wick_coefficient(4, r) for r in (0, 1, 2)])

    def test_tensor_evaluates_lazily_and_densifies_on_demand(self):
        h = np.arange(6.0)
        f = tensor(self.grid, h, h)
        self.assertFalse(f.is_dense)
        self.assertEqual(12.0, f(3, 4))
        np.testing.assert_array_equal(np.outer(h, h), f.dense())

    def test_when_dense_array_would_be_too_large_then_raises(self):
        grid = build_grid(1, 1, 200)
        h = np.ones(200)
        with self.assertRaises(ResourceError):
            tensor(grid, h, h, h).dense()

    def test_algebra_and_shape_checks(self):
        a = DiscretizedKernel.from_array(np.eye(6), self.grid)
        b = DiscretizedKernel.from_array(np.ones((6, 6)), self.grid)
        np.testing.assert_array_equal(2 * np.eye(6) - np.ones((6, 6)), (2 * a - b).dense())
        with self.assertRaises(ShapeError):
            a + tensor(self.grid, np.ones(6))
        with self.assertRaises(ShapeError):
            a + DiscretizedKernel.from_array(np.eye(4), build_grid(1, 1, 4))
        with self.assertRaises(ShapeError):
            a(1)


class MultipleIntegralTests(unittest.TestCase):

    def setUp(self):
        self.grid = build_grid(1, 1, 5)
        self.rng = np.random.default_rng(17)

    def test_first_order_is_the_wiener_integral(self):
        h = self.rng.standard_normal(5)
        sample = sample_increments(self.grid, 1, 0)
        self.assertAlmostEqual(wiener_integral(h, sample), multiple_integral(tensor(self.grid, h), sample),
                               places=12)

    def test_kernels_vanishing_on_repeated_indices_give_sums_over_distinct_indices(self):
        x = sample_batch(self.grid, 4, range(3))
        for order in (2, 3):
            values = zero_repeated(self.rng.standard_normal((5,) * order))
            f = DiscretizedKernel(order, self.grid, dense=values)
            batch = multiple_integral_batch(f, x)
            for row in range(3):
                self.assertAlmostEqual(brute_force_integral(values, x[row]), batch[row], places=10)

    def test_matches_the_wick_polynomial_on_a_grid_with_far_field(self):
        grid = build_grid(1, 1, 4, far=6.0)
        n = grid.n_cells
        x = sample_batch(grid, 4, range(2))
        for order in (2, 3):
            f = symmetrize(DiscretizedKernel(order, grid, dense=self.rng.standard_normal((n,) * order)))
            batch = multiple_integral_batch(f, x)
            for row in range(2):
                self.assertAlmostEqual(wick_brute_force(f.dense(), x[row], grid.widths), batch[row], places=9)

    def test_sections_are_partial_derivatives_over_the_order(self):
        x = sample_batch(self.grid, 4, range(2))
        values = self.rng.standard_normal((5, 5, 5))
        f = symmetrize(DiscretizedKernel(3, self.grid, dense=values))
        sections = section_integral_batch(f, x)
        step = 1e-4
        for i in range(5):
            up, down = x.copy(), x.copy()
            up[:, i] += step
            down[:, i] -= step
            derivative = (multiple_integral_batch(f, up) - multiple_integral_batch(f, down)) / (2 * step)
            np.testing.assert_allclose(derivative / 3, sections[:, i], rtol=1e-6, atol=1e-9)

    def test_integral_is_linear(self):
        x = sample_batch(self.grid, 9, range(4))
        f = DiscretizedKernel(2, self.grid, dense=self.rng.standard_normal((5, 5)))
        g = DiscretizedKernel(2, self.grid, dense=self.rng.standard_normal((5, 5)))
        combined = multiple_integral_batch(2.5 * f - g, x)
        np.testing.assert_allclose(2.5 * multiple_integral_batch(f, x) - multiple_integral_batch(g, x), combined,
                                   rtol=1e-12, atol=1e-12)

    def test_order_zero_is_the_constant(self):
        x = sample_batch(self.grid, 9, range(3))
        np.testing.assert_array_equal([1.5] * 3, multiple_integral_batch(DiscretizedKernel.constant(1.5, self.grid), x))

    def test_integrals_have_zero_mean(self):
        grid = build_grid(1, 1, 8)
        values = self.rng.standard_normal((8, 8))
        f = DiscretizedKernel(2, grid, dense=values + values.T)
        z = multiple_integral_batch(f, sample_batch(grid, 21, range(20000)))
        self.assertLess(abs(np.mean(z)), 5 * np.std(z) / np.sqrt(z.size))

    def test_when_order_exceeds_the_limit_then_raises(self):
        sample = sample_increments(self.grid, 1, 0)
        with self.assertRaises(ResourceError):
            multiple_integral(DiscretizedKernel.zero(4, self.grid), sample)
        with self.assertRaises(ResourceError):
            multiple_integral(DiscretizedKernel.zero(3, self.grid), sample, q_max=2)

    def test_when_grids_differ_then_raises(self):
        sample = sample_increments(build_grid(1, 1, 6), 1, 0)
        with self.assertRaises(ShapeError):
            multiple_integral(tensor(self.grid, np.ones(5)), sample)


class ContractionTests(unittest.TestCase):

    def setUp(self):
        self.grid = build_grid(1, 1, 8)
        rng = np.random.default_rng(5)
        self.h1 = rng.standard_normal(8)
        self.h2 = rng.standard_normal(8)

    def test_elementary_tensors_contract_to_inner_products(self):
        f = tensor(self.grid, self.h1, self.h1)
        g = tensor(self.grid, self.h2, self.h2)
        inner = np.dot(self.h1, self.h2) * self.grid.delta
        np.testing.assert_allclose(inner * np.outer(self.h1, self.h2), contraction(f, g, 1).dense(), rtol=1e-12)
        full = contraction(f, g, 2)
        self.assertEqual(0, full.order)
        self.assertAlmostEqual(inner ** 2, full.value, places=12)

    def test_zero_contraction_is_the_tensor_product(self):
        f = tensor(self.grid, self.h1)
        g = tensor(self.grid, self.h2)
        np.testing.assert_allclose(np.outer(self.h1, self.h2), contraction(f, g, 0).dense())

    def test_when_index_is_out_of_range_then_raises(self):
        f = tensor(self.grid, self.h1, self.h1)
        with self.assertRaises(DomainError):
            contraction(f, f, 3)

    def test_contraction_weights_the_contracted_cells_by_width(self):
        grid = build_grid(1, 1, 4, far=5.0)
        h1, h2 = np.linspace(1.0, 2.0, grid.n_cells), np.linspace(-1.0, 0.5, grid.n_cells)
        inner = np.dot(h1 * h2, grid.widths)
        result = contraction(tensor(grid, h1, h1), tensor(grid, h2), 1)
        np.testing.assert_allclose(inner * h1, result.dense(), rtol=1e-12)

    def test_product_terms_weights(self):
        f = tensor(self.grid, self.h1)
        g = tensor(self.grid, self.h2)
        terms = product_terms(f, g)
        self.assertEqual([2, 0], [t.order for t in terms])
        self.assertAlmostEqual(np.dot(self.h1, self.h2) * self.grid.delta, terms[1].value, places=12)


class MonteCarloChecksTests(unittest.TestCase):

    def setUp(self):
        self.grid = build_grid(1, 1, 16)
        self.first = tensor(self.grid, indicator(self.grid, 0.0, 1.0))
        self.second = symmetrize(tensor(self.grid, indicator(self.grid, -0.5, 0.5), indicator(self.grid, 0.0, 1.0)))

    def test_isometry_of_equal_orders(self):
        report = isometry_check(self.first, self.first, 4000, seed=3, n_sigma=5.0)
        self.assertTrue(report.passed, report)
        self.assertAlmostEqual(1.0, report.target, places=12)
        report = isometry_check(self.second, self.second, 4000, seed=3, n_sigma=5.0)
        self.assertTrue(report.passed, report)

    def test_different_orders_are_orthogonal(self):
        report = isometry_check(self.first, self.second, 4000, seed=3, n_sigma=5.0)
        self.assertEqual(0.0, report.target)
        self.assertTrue(report.passed, report)
        self.assertEqual({'seed': 3, 'streams': [0, 4000]}, report.manifest)

    def test_product_formula_holds_to_rounding(self):
        for p, q in ((1, 1), (1, 2), (2, 2)):
            f = self.first if p == 1 else self.second
            g = self.first if q == 1 else self.second
            report = product_formula_check(f, g, 500, seed=8)
            self.assertTrue(report.passed, report)
            self.assertLess(report.statistic, 1e-20 * report.lhs_mean_square)

    def test_product_formula_on_a_grid_with_far_field(self):
        grid = build_grid(1, 1, 8, far=5.0)
        f = tensor(grid, np.linspace(-1.0, 1.0, grid.n_cells))
        report = product_formula_check(f, f, 500, seed=8)
        self.assertTrue(report.passed, report)

    def test_when_total_order_is_too_large_then_raises(self):
        with self.assertRaises(ResourceError):
            product_formula_check(DiscretizedKernel.zero(2, self.grid), DiscretizedKernel.zero(3, self.grid), 10)

    def test_hermite_identity_holds_to_rounding(self):
        grid = build_grid(1, 1, 24, far=6.0)
        h = np.linspace(0.5, 2.0, grid.n_cells)
        for q in (2, 3):
            report = hermite_identity_gap(h, q, grid, 1000, seed=5)
            self.assertTrue(report.passed, report)
            self.assertLess(report.threshold, 1e-10)

    def test_when_h_vanishes_then_raises(self):
        with self.assertRaises(DomainError):
            hermite_identity_gap(np.zeros(16), 2, self.grid, 10)
