# coding: utf-8
from __future__ import absolute_import, division, print_function

import math
import unittest

from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from hermitelab.errors import DomainError
from hermitelab.special_params import (a_constant, beta, beta_identity_rhs, contraction_exponent, fbm_covariance,
                                       make_params, power_law_double_integral, truncation_for, truncation_tail)


def gamma_beta(a, b):
    return math.gamma(a) * math.gamma(b) / math.gamma(a + b)


class BetaTests(unittest.TestCase):

    def test_known_values(self):
        self.assertTrue(math.isclose(1.0, beta(1, 1), rel_tol=1e-12))
        self.assertTrue(math.isclose(math.pi, beta(0.5, 0.5), rel_tol=1e-12))
        self.assertTrue(math.isclose(1.0 / 12.0, beta(2, 3), rel_tol=1e-12))

    @settings(max_examples=100, deadline=None)
    @given(st.floats(min_value=0.05, max_value=40.0), st.floats(min_value=0.05, max_value=40.0))
    def test_beta_is_symmetric_and_matches_gamma_ratio(self, a, b):
        self.assertTrue(math.isclose(beta(a, b), beta(b, a), rel_tol=1e-12))
        self.assertTrue(math.isclose(beta(a, b), gamma_beta(a, b), rel_tol=1e-10))

    def test_when_argument_is_not_positive_then_raises(self):
        with self.assertRaises(DomainError):
            beta(0, 1)
        with self.assertRaises(DomainError):
            beta(1, -0.5)


class MakeParamsTests(unittest.TestCase):

    def test_derived_index(self):
        self.assertAlmostEqual(0.8, make_params(2, 0.6).H0, places=14)
        self.assertAlmostEqual(0.75, make_params(1, 0.75).H0, places=14)

    def test_first_order_constant(self):
        params = make_params(1, 0.75)
        expected = math.sqrt(0.75 * 0.5 / gamma_beta(0.25, 0.5))
        self.assertTrue(math.isclose(expected, params.c, rel_tol=1e-12))
        self.assertAlmostEqual(-0.75, params.kernel_exponent, places=14)

    def test_derived_fields_stay_in_range(self):
        for q in (1, 2, 3, 5):
            for H in (0.51, 0.7, 0.99):
                params = make_params(q, H)
                self.assertTrue(params.c > 0 and math.isfinite(params.c))
                self.assertTrue(1 - 1 / (2 * q) < params.H0 < 1)
                self.assertTrue(-0.5 - 1 / (2 * q) < params.kernel_exponent < -0.5)

    def test_when_order_or_index_is_invalid_then_raises(self):
        for q, H in ((0, 0.7), (1, 0.5), (1, 1.0), (2, 0.3), (1.5, 0.7), (True, 0.7)):
            with self.assertRaises(DomainError):
                make_params(q, H)

    def test_key_identifies_order_and_index(self):
        self.assertEqual((2, 0.7), make_params(2, 0.7).key())
        self.assertEqual(make_params(2, 0.7).as_dict()['q'], 2)


class ConstantsTests(unittest.TestCase):

    def test_a_constant_grows_by_one_beta_factor_per_step(self):
        params = make_params(3, 0.7)
        factor = beta((2 - 2 * 0.7) / 3, 0.5 - (1 - 0.7) / 3)
        for r in (0, 1):
            ratio = a_constant(params, r + 1) / a_constant(params, r)
            self.assertTrue(math.isclose(factor, ratio, rel_tol=1e-12))

    def test_a_constant_first_order(self):
        params = make_params(1, 0.75)
        self.assertTrue(math.isclose(params.c ** 2 * gamma_beta(0.5, 0.25), a_constant(params, 0), rel_tol=1e-12))

    def test_when_contraction_index_is_out_of_range_then_raises(self):
        params = make_params(2, 0.7)
        for r in (-1, 2):
            with self.assertRaises(DomainError):
                a_constant(params, r)
        with self.assertRaises(DomainError):
            contraction_exponent(params, 2)

    def test_derivative_norm_constant_identity_holds_for_every_order(self):
        for q in (1, 2, 3):
            for H in (0.55, 0.7, 0.9):
                params = make_params(q, H)
                value = (q ** 2 * math.factorial(q - 1) * a_constant(params, q - 1)
                         * power_law_double_integral(1.0, 1.0, 2 * (H - 1)))
                self.assertTrue(math.isclose(q, value, rel_tol=1e-8), (q, H, value))

    def test_full_contraction_exponent_is_2H_minus_2(self):
        params = make_params(3, 0.8)
        self.assertAlmostEqual(2 * (0.8 - 1), contraction_exponent(params, 2), places=14)


class BetaIdentityTests(unittest.TestCase):

    def test_matches_quadrature_of_the_product_integral(self):
        a = -0.75
        # int_{-inf}^0 (-y)^a (1 - y)^a dy, split at y = -1
        head, _ = integrate.quad(lambda y: (1 + y) ** a, 0, 1, weight='alg', wvar=(a, 0))
        tail, _ = integrate.quad(lambda y: y ** a * (1 + y) ** a, 1, math.inf, epsrel=1e-12)
        self.assertTrue(math.isclose(head + tail, beta_identity_rhs(0, 1, a), rel_tol=1e-6))
        self.assertTrue(math.isclose(gamma_beta(0.5, 0.25), beta_identity_rhs(0, 1, a), rel_tol=1e-12))

    def test_symmetry_and_homogeneity(self):
        a = -0.65
        self.assertEqual(beta_identity_rhs(0.3, 1.7, a), beta_identity_rhs(1.7, 0.3, a))
        c = 2.5
        self.assertTrue(math.isclose(beta_identity_rhs(c * 0.3, c * 1.7, a),
                                     c ** (2 * a + 1) * beta_identity_rhs(0.3, 1.7, a), rel_tol=1e-12))

    def test_when_shifts_coincide_then_infinite(self):
        self.assertEqual(math.inf, beta_identity_rhs(0.4, 0.4, -0.7))

    def test_when_exponent_is_out_of_range_then_raises(self):
        for a in (-1.0, -0.5, -0.3):
            with self.assertRaises(DomainError):
                beta_identity_rhs(0, 1, a)


class TimeIntegralTests(unittest.TestCase):

    def test_flat_exponent_gives_rectangle_area(self):
        self.assertAlmostEqual(0.6, power_law_double_integral(0.5, 1.2, 0.0), places=14)

    def test_matches_numerical_double_integral(self):
        lam = -0.6

        def inner(u):
            # |u - v|^lam as an algebraic weight on each side of the singularity
            left, _ = integrate.quad(lambda v: 1.0, 0, u, weight='alg', wvar=(0, lam)) if u > 0 else (0.0, 0)
            right, _ = integrate.quad(lambda v: 1.0, u, 2, weight='alg', wvar=(lam, 0))
            return left + right

        value, _ = integrate.quad(inner, 0, 1, epsabs=1e-12, epsrel=1e-10)
        self.assertTrue(math.isclose(value, power_law_double_integral(1.0, 2.0, lam), rel_tol=1e-5))

    def test_when_times_are_not_positive_then_raises(self):
        with self.assertRaises(DomainError):
            power_law_double_integral(0.0, 1.0, -0.5)
        with self.assertRaises(DomainError):
            power_law_double_integral(1.0, 1.0, -1.0)

    def test_brownian_covariance_is_the_minimum(self):
        self.assertAlmostEqual(0.5, fbm_covariance(0.5, 0.5, 2.0), places=14)
        self.assertAlmostEqual(1.0, fbm_covariance(0.7, 1.0, 1.0), places=14)

    def test_truncation_point_inverts_the_tail(self):
        params = make_params(2, 0.7)
        M = truncation_for(params, 1e-3)
        self.assertTrue(math.isclose(1e-3, truncation_tail(params, M), rel_tol=1e-10))
        with self.assertRaises(DomainError):
            truncation_tail(params, 0.0)
