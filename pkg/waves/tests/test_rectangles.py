"""
Unit tests for the contracting rectangle service.
"""

import numpy as np
from django.test import SimpleTestCase

from waves.exceptions import RectangleError
from waves.services.population import (
    beverton_holt_birth,
    competition2_model,
    delayed_bh_model,
    logistic_model,
    mspecies_model,
    scalar_system,
)
from waves.services.rectangles import (
    Rectangle,
    check_rectangle_shape,
    competition_rectangle,
    containing_level,
    converge_many,
    iterate_difference,
    logistic_rectangle,
    max_competition_eps,
    profile_tail_check,
    random_histories,
    rectangle_for,
    verify_rectangle,
)
from waves.services.wave_operator import WaveGrid, WaveProfile


class LogisticRectangleTestCase(SimpleTestCase):
    """The rectangle of b(v) = 3v(1 - v)."""

    def setUp(self):
        self.model = scalar_system(logistic_model())
        self.rect = logistic_rectangle(0.1)

    def test_end_points(self):
        self.assertAlmostEqual(float(self.rect.r(0.5)[0]), 59.0 / 96.0, places=15)
        r1, t1 = self.rect.bounds(1.0)
        self.assertAlmostEqual(float(r1[0]), 2.0 / 3.0, places=15)
        self.assertAlmostEqual(float(t1[0]), 2.0 / 3.0, places=14)
        self.assertAlmostEqual(float(self.rect.r(0.0)[0]), 0.5625)

    def test_large_eps_leaves_band(self):
        with self.assertRaisesMessage(RectangleError, "t(s) exits (2/3,3/4)"):
            logistic_rectangle(0.9)

    def test_eps_range(self):
        with self.assertRaisesMessage(RectangleError, "(0, 1/2)"):
            logistic_rectangle(0.0)

    def test_shape_checks(self):
        shape = check_rectangle_shape(self.rect, self.model)
        self.assertEqual(shape['c2'], True)
        self.assertIsNone(shape['box_invariant'])

    def test_strict_inclusion(self):
        report = verify_rectangle(self.model, self.rect)
        self.assertTrue(report.passed, report.to_dict())
        self.assertTrue(report.certifying)
        self.assertEqual(report.mode, 'extremal')
        self.assertGreater(report.min_margin_lower, 0)
        self.assertGreater(report.min_margin_upper, 0)

    def test_iteration_stays_in_slice(self):
        trajectory = iterate_difference(self.model, [[0.6]], 2000, rect=self.rect)
        self.assertTrue(trajectory.certified)
        self.assertGreater(trajectory.start_level, 0)
        self.assertLess(abs(float(trajectory.final[0]) - 2.0 / 3.0), 0.05)
        self.assertTrue(all(level >= trajectory.start_level - 1e-9
                            for level in trajectory.levels))

    def test_history_outside_rectangle_runs_uncertified(self):
        trajectory = iterate_difference(self.model, [[0.2]], 50, rect=self.rect)
        self.assertFalse(trajectory.certified)
        self.assertIsNone(trajectory.start_level)
        self.assertEqual(trajectory.steps, 50)

    def test_rectangle_for_scalar_models(self):
        self.assertEqual(rectangle_for(self.model).eps, 0.1)
        with self.assertRaisesMessage(RectangleError, "no contracting rectangle"):
            rectangle_for(scalar_system(beverton_holt_birth(1.0)))


class CompetitionRectangleTestCase(SimpleTestCase):
    """Rectangles r = sE, t = sE + (1 + eps)(1 - s)."""

    def setUp(self):
        self.model = competition2_model(1.0, 1.0, 0.3, 0.3, 0.2, 0.2)
        self.rect = competition_rectangle(self.model, 0.25)

    def test_default_eps(self):
        self.assertAlmostEqual(max_competition_eps(self.model), 1.0)
        self.assertAlmostEqual(competition_rectangle(self.model).eps, 0.5)

    def test_eps_above_limit_rejected(self):
        with self.assertRaisesMessage(RectangleError, "outside the admissible range"):
            competition_rectangle(self.model, 1.5)

    def test_high_pressure_has_no_rectangle(self):
        model = mspecies_model(3, 2, 1.0, 0.2, 0.25)
        self.assertFalse(model.rectangle_ready)
        with self.assertRaisesMessage(
                RectangleError, "no contracting rectangle available for these coefficients"):
            competition_rectangle(model)

    def test_top_above_caps_needs_invariant_box(self):
        shape = check_rectangle_shape(self.rect, self.model)
        self.assertTrue(shape['box_invariant'])

    def test_strict_inclusion(self):
        report = verify_rectangle(self.model, self.rect, seed=3)
        self.assertTrue(report.passed, report.to_dict())
        self.assertEqual(report.n_s, 99)
        self.assertTrue(report.certifying)
        self.assertEqual(report.n_corners, 16)

    def test_delayed_bh_strict_inclusion(self):
        model = delayed_bh_model(1.0, 0.25)
        report = verify_rectangle(model, rectangle_for(model), n_s=49, n_box=50)
        self.assertTrue(report.passed, report.to_dict())

    def test_slices_are_nested(self):
        for s, later in ((0.1, 0.3), (0.3, 0.7), (0.7, 0.95)):
            lo, hi = self.rect.bounds(s)
            inner_lo, inner_hi = self.rect.bounds(later)
            self.assertTrue(np.all(lo < inner_lo))
            self.assertTrue(np.all(inner_hi < hi))

    def test_containing_level_of_history(self):
        history = [[0.5, 0.5], [0.7, 0.7]]
        self.assertAlmostEqual(containing_level(self.rect, history), 0.75, places=6)
        self.assertIsNone(containing_level(self.rect, [[1.5, 1.5], [0.5, 0.5]]))
        self.assertEqual(containing_level(self.rect, self.model.constant_block(
            self.model.steady)), 1.0)

    def test_iteration_converges_to_steady_state(self):
        trajectory = iterate_difference(self.model, [[0.5, 0.5], [0.7, 0.7]], 10_000,
                                        rect=self.rect, tol=1e-8)
        self.assertTrue(trajectory.converged)
        self.assertTrue(trajectory.certified)
        self.assertAlmostEqual(trajectory.start_level, 0.75, places=6)
        np.testing.assert_allclose(trajectory.final, [2 / 3, 2 / 3], atol=1e-8)
        self.assertIsNotNone(trajectory.steps_to_tol)

    def test_leaving_the_slice_raises(self):
        band = Rectangle(name='band', r=lambda s: np.full(2, 0.8),
                         t=lambda s: np.full(2, 0.9), steady=self.model.steady,
                         caps=self.model.caps, tau=2)
        with self.assertRaises(RectangleError) as ctx:
            iterate_difference(self.model, [[0.8, 0.8], [0.9, 0.9]], 50, rect=band)
        self.assertEqual(ctx.exception.witness['step'], 1)

    def test_converge_many(self):
        summary = converge_many(self.model, self.rect, n_histories=50, s0=0.2, seed=5)
        self.assertTrue(summary.passed)
        self.assertTrue(summary.certified)
        self.assertLess(summary.max_distance, 1e-8)
        self.assertEqual(summary.to_dict()['n_converged'], 50)
        self.assertLessEqual(summary.max_steps_to_tol, 10_000)

    def test_random_histories_lie_in_slice(self):
        for history in random_histories(self.rect, self.model, 20, 0.4, seed=9):
            self.assertTrue(self.rect.contains(0.4, history))
        with self.assertRaises(RectangleError):
            random_histories(self.rect, self.model, 1, 1.0)


class ShapeCheckTestCase(SimpleTestCase):
    """Rectangles with a broken shape are rejected."""

    def setUp(self):
        self.model = competition2_model(1.0, 1.0, 0.3, 0.3, 0.2, 0.2)
        self.steady = self.model.steady

    def make(self, r, t):
        return Rectangle(name='broken', r=r, t=t, steady=self.steady,
                         caps=self.model.caps, tau=2)

    def test_non_monotone_r_rejected(self):
        rect = self.make(lambda s: self.steady * (s + 0.5 * np.sin(np.pi * s)),
                         lambda s: self.steady * s + 1.0 * (1 - s))
        with self.assertRaisesMessage(RectangleError, "(C2) violated"):
            check_rectangle_shape(rect, self.model)

    def test_wrong_end_point_rejected(self):
        rect = self.make(lambda s: 0.9 * s * self.steady,
                         lambda s: self.steady * s + 1.0 * (1 - s))
        with self.assertRaisesMessage(RectangleError, "(C3) violated"):
            check_rectangle_shape(rect, self.model)

    def test_jump_rejected(self):
        rect = self.make(lambda s: self.steady * (0.5 * s + 0.5 * (s >= 0.5)),
                         lambda s: self.steady * s + 1.0 * (1 - s))
        with self.assertRaisesMessage(RectangleError, "(C1) violated"):
            check_rectangle_shape(rect, self.model, n=11)


class ProfileTailTestCase(SimpleTestCase):
    """Right-end behaviour of wave profiles against the rectangle."""

    def setUp(self):
        self.model = competition2_model(1.0, 1.0, 0.3, 0.3, 0.2, 0.2)
        self.rect = competition_rectangle(self.model, 0.25)

    def profile(self, values):
        values = np.asarray(values, dtype=float)
        return WaveProfile(grid=WaveGrid(0.0, 1.0, values.shape[1]), values=values,
                           c=2.0, left_tail=np.ones(2), left_coeff=np.ones(2),
                           right_value=values[:, -1].copy())

    def test_settled_tail_passes(self):
        ramp = np.linspace(0.0, 2.0 / 3.0, 100) ** 0.2 * (2.0 / 3.0) ** 0.8
        ramp[-20:] = 2.0 / 3.0
        check = profile_tail_check(self.profile([ramp, ramp]), self.rect, self.model)
        self.assertTrue(check['applicable'])
        self.assertTrue(check['passed'])
        self.assertEqual(check['s1'], 1.0)

    def test_unsettled_tail_fails(self):
        values = np.full((2, 100), 0.5)
        check = profile_tail_check(self.profile(values), self.rect, self.model)
        self.assertTrue(check['applicable'])
        self.assertFalse(check['passed'])
