"""
Unit tests for the upper/lower solution service.
"""

import dataclasses

import numpy as np
from django.test import SimpleTestCase

from waves.exceptions import BoundsError
from waves.services.bounds import build_bounds, verify_bounds
from waves.services.dispersion import dispersion_for, system_minimal_speed
from waves.services.kernels import make_kernel
from waves.services.population import (
    competition2_model,
    delayed_bh_model,
    logistic_model,
    scalar_system,
)


class BoundPairTestCase(SimpleTestCase):
    """Shape of the closed-form upper and lower solutions."""

    def setUp(self):
        self.kernel = make_kernel('gaussian', sigma=1.0)
        self.model = scalar_system(logistic_model())
        self.disp = dispersion_for(self.model, self.kernel, 2.0)
        self.pair = build_bounds(self.model, self.disp)

    def test_pair_uses_dispersion_constants(self):
        self.assertEqual(self.pair.Q, self.disp.q)
        self.assertEqual(self.pair.eta, self.disp.eta)
        np.testing.assert_allclose(self.pair.caps, [0.75])

    def test_lower_below_upper(self):
        xi = np.linspace(-40.0, 40.0, 4001)
        lower, upper = self.pair.lower(xi), self.pair.upper(xi)
        self.assertTrue(np.all(lower <= upper))
        self.assertTrue(np.all(lower >= 0))
        self.assertAlmostEqual(float(upper.max()), 0.75)

    def test_lower_vanishes_from_xi0(self):
        xi0 = float(self.pair.xi0[0])
        self.assertLess(xi0, 0)
        self.assertEqual(float(self.pair.lower(np.array([xi0 + 1e-9]))[0, 0]), 0.0)
        self.assertGreater(float(self.pair.lower(np.array([xi0 - 1.0]))[0, 0]), 0.0)
        self.assertTrue(np.all(self.pair.lower(np.linspace(0.0, 50.0, 11)) == 0))

    def test_speed_at_minimum_rejected(self):
        at_cmin = dataclasses.replace(self.disp, c=self.disp.cmin)
        with self.assertRaisesMessage(BoundsError, "must exceed the minimal speed"):
            build_bounds(self.model, at_cmin)

    def test_species_count_must_match(self):
        competition = competition2_model(1.0, 1.0, 0.3, 0.3, 0.2, 0.2)
        with self.assertRaises(BoundsError):
            build_bounds(competition, self.disp)


class VerifyBoundsTestCase(SimpleTestCase):
    """Extremal verification of the bound inequalities."""

    def setUp(self):
        self.kernel = make_kernel('gaussian', sigma=1.0)
        self.logistic = scalar_system(logistic_model())

    def verify(self, model, offset, kernel=None, **kwargs):
        kernel = kernel or self.kernel
        cmin, _ = system_minimal_speed(model.growth, [kernel] * model.m)
        c = cmin + offset
        disp = dispersion_for(model, kernel, c)
        pair = build_bounds(model, disp)
        return pair, disp, verify_bounds(pair, model, kernel, c, **kwargs)

    def test_logistic_bounds_hold(self):
        for offset in (0.2, 1.0):
            _, _, report = self.verify(self.logistic, offset)
            self.assertTrue(report.passed, report.to_dict())
            self.assertTrue(report.certifying)
            self.assertEqual(report.mode, 'extremal')
            self.assertLessEqual(report.max_violation_upper, 1e-8)

    def test_delayed_bh_bounds_hold(self):
        model = delayed_bh_model(1.0, 0.25)
        for offset in (0.2, 1.0):
            _, _, report = self.verify(model, offset)
            self.assertTrue(report.passed, report.to_dict())

    def test_undelayed_beverton_holt_bounds_hold(self):
        model = delayed_bh_model(1.0, 0.0)
        for offset in (0.2, 1.0):
            _, _, report = self.verify(model, offset)
            self.assertTrue(report.passed, report.to_dict())
            self.assertTrue(report.certifying)

    def test_uniform_kernel_bounds_hold(self):
        uniform = make_kernel('uniform', halfwidth=1.0)
        for offset in (0.2, 1.0):
            _, _, report = self.verify(self.logistic, offset, kernel=uniform)
            self.assertTrue(report.passed, report.to_dict())
            self.assertLessEqual(report.max_violation_lower, 1e-8)

    def test_unit_coefficient_fails(self):
        """Q = 1 is far below the required coefficient."""
        pair, disp, _ = self.verify(self.logistic, 0.5)
        report = verify_bounds(pair.with_q(1.0), self.logistic, self.kernel, disp.c)
        self.assertFalse(report.passed)
        self.assertGreater(report.max_violation_lower, 1e-8)
        self.assertLess(report.xi_worst_lower, 0.0)

    def test_larger_coefficient_still_passes(self):
        pair, disp, _ = self.verify(self.logistic, 0.5)
        report = verify_bounds(pair.with_q(2.0 * pair.Q), self.logistic, self.kernel, disp.c)
        self.assertTrue(report.passed, report.to_dict())

    def test_sampled_mode_is_not_certifying(self):
        _, _, report = self.verify(self.logistic, 0.5, mode='sampled', n_samples=3, seed=1)
        self.assertFalse(report.certifying)
        self.assertEqual(report.mode, 'sampled')
        self.assertIn('pass', report.to_dict())

    def test_unknown_mode_rejected(self):
        with self.assertRaisesMessage(BoundsError, "unknown verification mode"):
            self.verify(self.logistic, 0.5, mode='random')

    def test_report_grid_covers_transition(self):
        pair, _, report = self.verify(self.logistic, 0.5)
        self.assertLess(report.grid_start, float(pair.xi0.min()))
        self.assertGreater(report.grid_end, 0.0)
        self.assertEqual(report.n_points,
                         int(round((report.grid_end - report.grid_start) / report.h)) + 1)
