"""
Unit tests for the population model service.
"""

from fractions import Fraction

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st

from waves.exceptions import ModelError
from waves.services.population import (
    CallableSystem,
    band_refinement,
    beverton_holt_birth,
    competition2_model,
    delayed_bh_model,
    envelopes,
    has_competitive_pattern,
    lipschitz_bound,
    logistic_b,
    logistic_model,
    mspecies_model,
    persistence_floor,
    scalar_birth,
    scalar_system,
    second_iterate_gap,
    slot_signs,
    validate_model,
)


class ScalarBirthTestCase(SimpleTestCase):
    """Constants of the logistic and Beverton-Holt births."""

    def setUp(self):
        self.logistic = logistic_model()

    def test_logistic_constants(self):
        self.assertEqual(self.logistic.bprime0, 3.0)
        self.assertAlmostEqual(self.logistic.vstar, 2.0 / 3.0, places=15)
        self.assertEqual(self.logistic.v1, 0.5625)
        self.assertEqual(self.logistic.v2, 0.75)
        self.assertEqual(self.logistic.exact['v1'], Fraction(9, 16))

    def test_envelopes_recover_logistic_band(self):
        """v1 and v2 computed from the envelopes match 9/16 and 3/4."""
        birth = scalar_birth('logistic', logistic_b, 3.0, 2.0 / 3.0, 0.75,
                             critical_points=[0.5])
        self.assertAlmostEqual(birth.v1, 9.0 / 16.0, places=10)
        self.assertAlmostEqual(birth.v2, 0.75, places=10)
        self.assertGreaterEqual(birth.L1, 3.0)

    def test_envelopes_are_monotone(self):
        env = envelopes(self.logistic)
        self.assertTrue(np.all(np.diff(env.bbar) >= 0))
        self.assertTrue(np.all(np.diff(env.bunder) >= 0))

    def test_exact_band_refinement(self):
        bands = band_refinement(self.logistic, steps=1, exact=True)
        self.assertEqual(bands[0], (Fraction(9, 16), Fraction(3, 4)))
        self.assertEqual(bands[1], (Fraction(37989, 65536), Fraction(189, 256)))

    def test_float_refinement_follows_exact(self):
        exact = band_refinement(self.logistic, steps=4, exact=True)
        approx = band_refinement(self.logistic, steps=4)
        for (lo, hi), (flo, fhi) in zip(exact, approx):
            self.assertAlmostEqual(float(lo), flo, places=12)
            self.assertAlmostEqual(float(hi), fhi, places=12)

    def test_refined_bands_nest_around_steady_state(self):
        bands = band_refinement(self.logistic, steps=20, exact=True)
        for (lo, hi), (nlo, nhi) in zip(bands, bands[1:]):
            self.assertLessEqual(lo, nlo)
            self.assertLessEqual(nhi, hi)
            self.assertLess(nlo, Fraction(2, 3))
            self.assertGreater(nhi, Fraction(2, 3))

    def test_second_iterate_gap_vanishes_only_at_steady_state(self):
        v, gap = second_iterate_gap(self.logistic, 9.0 / 16.0, 2.0 / 3.0)
        self.assertTrue(np.all(gap[:-1] > 0))
        self.assertAlmostEqual(gap[-1], 0.0, places=12)

    def test_beverton_holt_is_monotone(self):
        birth = beverton_holt_birth(2.0)
        self.assertEqual((birth.v1, birth.v2, birth.vstar), (1.0, 1.0, 1.0))
        self.assertAlmostEqual(float(birth(1.0)), 1.0, places=15)
        self.assertEqual(birth.L1, 6.0)

    def test_beverton_holt_rejects_nonpositive_d(self):
        with self.assertRaises(ModelError):
            beverton_holt_birth(0.0)

    def test_birth_with_wrong_steady_state_rejected(self):
        with self.assertRaisesMessage(ModelError, "b(v*) != v*"):
            scalar_birth('bad', logistic_b, 3.0, 0.6, 0.75, critical_points=[0.5])

    def test_interval_extremes_use_critical_point(self):
        low, high = self.logistic.interval_extremes(np.array([0.4]), np.array([0.6]))
        self.assertAlmostEqual(float(high[0]), 0.75)
        self.assertAlmostEqual(float(low[0]), 0.72)


class SystemModelTestCase(SimpleTestCase):
    """The delayed competitive family and its special cases."""

    def setUp(self):
        self.competition = competition2_model(1.0, 1.0, 0.3, 0.3, 0.2, 0.2)

    def test_competition_steady_state(self):
        np.testing.assert_allclose(self.competition.steady, [2 / 3, 2 / 3], atol=1e-15)
        self.assertEqual(self.competition.tau, 2)
        np.testing.assert_allclose(self.competition.pressure, [0.5, 0.5])

    def test_mspecies_steady_state(self):
        model = mspecies_model(3, 2, 1.0, 0.0, 0.1)
        np.testing.assert_allclose(model.steady, [5 / 7] * 3, atol=1e-14)
        self.assertTrue(model.rectangle_ready)

    def test_two_species_mspecies_matches_competition(self):
        f = np.zeros((2, 2, 2))
        f[0, 1, 0] = 0.3
        f[1, 0, 0] = 0.5
        general = mspecies_model(2, 2, [1.0, 1.5], [[0.2], [0.1]], f)
        pair = competition2_model(1.0, 1.5, 0.3, 0.5, 0.2, 0.1)
        np.testing.assert_allclose(general.steady, pair.steady, atol=1e-14)
        states = np.random.default_rng(11).random((2, 2, 500))
        np.testing.assert_allclose(general(states), pair(states), rtol=1e-14)

    def test_delayed_bh_steady_state(self):
        model = delayed_bh_model(1.0, 0.25)
        self.assertAlmostEqual(float(model.steady[0]), 0.8, places=15)
        np.testing.assert_allclose(model(model.constant_block(model.steady)), [0.8])

    def test_delayed_bh_requires_small_a(self):
        with self.assertRaisesMessage(ModelError, "requires a<1"):
            delayed_bh_model(1.0, 1.0)

    def test_competition_without_coexistence_rejected(self):
        with self.assertRaisesMessage(ModelError, "coexistence state not positive"):
            competition2_model(1.0, 1.0, 1.5, 0.3, 0.2, 0.2)

    def test_mspecies_rejects_self_cross_coefficients(self):
        f = np.full((2, 2, 1), 0.1)
        with self.assertRaisesMessage(ModelError, "f[i][i] must be zero"):
            mspecies_model(2, 1, 1.0, np.zeros((2, 0)), f)

    def test_mspecies_rejects_negative_coefficients(self):
        with self.assertRaises(ModelError):
            mspecies_model(2, 2, 1.0, -0.1, 0.1)

    def test_slot_signs_match_structural_pattern(self):
        signs = slot_signs(self.competition)
        np.testing.assert_array_equal(signs, self.competition.slot_pattern)
        self.assertTrue(has_competitive_pattern(self.competition, signs))

    def test_logistic_is_not_competitive(self):
        self.assertFalse(has_competitive_pattern(scalar_system(logistic_model())))

    def test_extremes_bound_random_states(self):
        lo = np.full((2, 2), 0.2)
        hi = np.full((2, 2), 0.9)
        pmin, pmax = self.competition.extremes(lo[..., None], hi[..., None])
        rng = np.random.default_rng(7)
        states = lo[..., None] + rng.random((2, 2, 500)) * (hi - lo)[..., None]
        image = self.competition(states)
        self.assertTrue(np.all(image >= pmin - 1e-15))
        self.assertTrue(np.all(image <= pmax + 1e-15))

    def test_persistence_floor(self):
        np.testing.assert_allclose(persistence_floor(self.competition), [0.5, 0.5])
        logistic = scalar_system(logistic_model())
        np.testing.assert_allclose(persistence_floor(logistic), [0.5625])

    def test_lipschitz_bound_of_logistic(self):
        logistic = scalar_system(logistic_model())
        self.assertGreater(logistic.lipschitz, 3.0)
        self.assertLessEqual(logistic.lipschitz, 4.5 + 1e-12)
        raw = lipschitz_bound(logistic, n_pairs=1000, seed=1, inflate=1.0)
        self.assertGreater(raw, 2.5)
        self.assertLessEqual(raw, 3.0 + 1e-12)

    def test_lipschitz_bound_of_delayed_beverton_holt(self):
        model = delayed_bh_model(1.0, 0.5)
        raw = lipschitz_bound(model, n_pairs=10_000, seed=1, inflate=1.0)
        self.assertGreater(raw, 1.0)
        self.assertLessEqual(raw, 2.0 + 1e-12)
        self.assertAlmostEqual(lipschitz_bound(model, n_pairs=10_000, seed=1), 1.5 * raw)

    def test_callable_system_that_escapes_box_rejected(self):
        model = CallableSystem('double', lambda block: 2.0 * block[:, -1], 1, 1, caps=[1.0])
        with self.assertRaisesMessage(ModelError, "does not map the box"):
            validate_model(model)

    def test_coupling_follows_cross_coefficients(self):
        np.testing.assert_array_equal(self.competition.coupling,
                                      [[False, True], [True, False]])
        self.assertFalse(delayed_bh_model(1.0, 0.25).coupling.any())


class ModelPropertyTestCase(SimpleTestCase):
    """Invariants over randomly drawn competition coefficients."""

    @settings(deadline=None, max_examples=20)
    @given(d1=st.floats(0.1, 5.0), d2=st.floats(0.1, 5.0),
           a1=st.floats(0.0, 0.9), a2=st.floats(0.0, 0.9),
           b1=st.floats(0.0, 1.0), b2=st.floats(0.0, 1.0),
           seed=st.integers(0, 2 ** 31))
    def test_competition_maps_box_into_itself(self, d1, d2, a1, a2, b1, b2, seed):
        model = competition2_model(d1, d2, a1, a2, b1, b2)
        states = np.random.default_rng(seed).random((2, 2, 1000))
        image = model(states)
        self.assertTrue(np.all(image >= 0))
        self.assertTrue(np.all(image <= 1.0 + 1e-12))
        np.testing.assert_allclose(model(model.constant_block(model.steady)),
                                   model.steady, atol=1e-12)
