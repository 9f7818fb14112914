"""
Unit tests for the dispersion relation service.
"""

import math

import numpy as np

from django.test import SimpleTestCase

from waves.exceptions import DispersionError
from waves.services.dispersion import (
    char_roots,
    char_value,
    characteristic_curves,
    dispersion_for,
    golden_section,
    lower_coeff,
    minimal_speed,
    select_eta,
    system_minimal_speed,
)
from waves.services.kernels import make_kernel
from waves.services.population import competition2_model, logistic_model


class MinimalSpeedTestCase(SimpleTestCase):
    """Minimal speeds and characteristic roots against closed forms."""

    def setUp(self):
        self.kernel = make_kernel('gaussian', sigma=1.0)

    def test_golden_section_quadratic(self):
        x, fx = golden_section(lambda t: (t - 0.3) ** 2 + 1.0, 0.0, 2.0, tol=1e-10)
        self.assertAlmostEqual(x, 0.3, places=8)
        self.assertAlmostEqual(fx, 1.0, places=12)

    def test_gaussian_minimal_speed(self):
        """For a Gaussian kernel cmin = sigma sqrt(2 ln growth)."""
        result = minimal_speed(3.0, self.kernel)
        self.assertAlmostEqual(result.cmin, math.sqrt(2 * math.log(3)), delta=1e-8)
        self.assertAlmostEqual(result.lambda_star, math.sqrt(2 * math.log(3)), delta=1e-4)

    def test_growth_two_speed(self):
        self.assertAlmostEqual(minimal_speed(2.0, self.kernel).cmin, 1.1774100, places=6)

    def test_no_speed_without_growth(self):
        with self.assertRaisesMessage(DispersionError, "no linear spreading speed"):
            minimal_speed(1.0, self.kernel)

    def test_roots_at_c_two(self):
        """Roots of ln 3 - 2 lam + lam^2 / 2 = 0."""
        lam1, lam2 = char_roots(3.0, self.kernel, 2.0)
        gap = math.sqrt(4 - 2 * math.log(3))
        self.assertAlmostEqual(lam1, 2 - gap, delta=1e-8)
        self.assertAlmostEqual(lam2, 2 + gap, delta=1e-8)
        self.assertAlmostEqual(char_value(3.0, self.kernel, lam1, 2.0), 1.0, places=9)

    def test_roots_below_minimal_speed(self):
        with self.assertRaisesMessage(DispersionError, "no real roots"):
            char_roots(3.0, self.kernel, 1.4)

    def test_compact_kernel_without_second_root(self):
        kernel = make_kernel('uniform', halfwidth=1.0)
        lam1, lam2 = char_roots(3.0, kernel, 10.0)
        self.assertGreater(lam1, 0)
        self.assertEqual(lam2, math.inf)

    def test_lambda1_increases_as_c_decreases(self):
        speeds = [3.0, 2.5, 2.0, 1.7, 1.55]
        lambdas = [char_roots(3.0, self.kernel, c)[0] for c in speeds]
        self.assertEqual(lambdas, sorted(lambdas))

    def test_system_speed_is_the_largest(self):
        cmin, speeds = system_minimal_speed([2.0, 3.0], [self.kernel, self.kernel])
        self.assertEqual(cmin, speeds[1].cmin)
        self.assertLess(speeds[0].cmin, speeds[1].cmin)

    def test_curves_flag_subcritical_species(self):
        curves = characteristic_curves([3.0, 1.5], self.kernel, 1.2)
        self.assertEqual(curves.above_one, (True, False))
        self.assertEqual(curves.values.shape, (2, 100))


class ConstantsTestCase(SimpleTestCase):
    """eta, Q and mu selection."""

    def setUp(self):
        self.kernel = make_kernel('gaussian', sigma=1.0)
        self.logistic = logistic_model().as_system()

    def test_eta_midpoint_of_narrow_window(self):
        """lambda2 / lambda1 = 1.2 puts eta at 1.1."""
        lam1 = math.sqrt(2 * math.log(3) / 1.2)
        c = 1.1 * lam1
        roots = char_roots(3.0, self.kernel, c)
        self.assertAlmostEqual(roots[1] / roots[0], 1.2, places=8)
        eta = select_eta([roots[0]], [roots[1]], [3.0], self.kernel, c)
        self.assertAlmostEqual(eta, 1.1, places=8)

    def test_eta_respects_coupled_pairs(self):
        """A slowly decaying coupled species caps eta at 1 + lambda_l / lambda_i."""
        fast = char_roots(3.0, self.kernel, 2.0)
        slow = char_roots(1.2, self.kernel, 2.0)
        coupling = np.array([[False, True], [True, False]])
        eta = select_eta([fast[0], slow[0]], [fast[1], slow[1]], [3.0, 1.2],
                         self.kernel, 2.0, coupling=coupling)
        self.assertGreater(eta, 1.0)
        self.assertLess(eta * fast[0], fast[0] + slow[0])
        self.assertAlmostEqual(eta, 0.5 * (2.0 + slow[0] / fast[0]), places=10)

    def test_logistic_lower_coefficient(self):
        lam1, _ = char_roots(3.0, self.kernel, 2.0)
        q = lower_coeff(self.logistic, self.kernel, [lam1], 1.5, 2.0)
        expected = 1 + 3 * char_value(3.0, self.kernel, 2 * lam1, 2.0) / (
            1 - char_value(3.0, self.kernel, 1.5 * lam1, 2.0))
        self.assertAlmostEqual(q, expected, places=12)
        self.assertAlmostEqual(q, 5.80, delta=0.01)
        self.assertAlmostEqual(char_value(3.0, self.kernel, 1.5 * lam1, 2.0), 0.679, delta=1e-3)

    def test_dispersion_for_logistic(self):
        disp = dispersion_for(self.logistic, self.kernel, 2.0)
        self.assertEqual(disp.m, 1)
        self.assertAlmostEqual(disp.eta, 1.5)
        self.assertAlmostEqual(disp.mu, disp.lambda1[0] / 2)
        self.assertAlmostEqual(disp.q, 5.80, delta=0.01)
        self.assertEqual(disp.to_dict()['q_or_N'], disp.q)

    def test_dispersion_for_competition(self):
        model = competition2_model(1.0, 1.0, 0.3, 0.3, 0.2, 0.2)
        cmin = math.sqrt(2 * math.log(2))
        disp = dispersion_for(model, self.kernel, cmin + 0.5)
        self.assertAlmostEqual(disp.cmin, cmin, delta=1e-8)
        self.assertAlmostEqual(disp.lambda1[0], disp.lambda1[1])
        self.assertLess(disp.eta, 2.0)
        self.assertGreater(disp.q, 1.0)

    def test_subcritical_dispersion_fails(self):
        with self.assertRaises(DispersionError):
            dispersion_for(self.logistic, self.kernel, 1.0)
