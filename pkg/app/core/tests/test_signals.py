import unittest

import numpy as np

from abstracts.exception import InvalidInputError, OutOfRangeError
from app.core.signals import StepSignal, render, sample_epochs


class TestStepSignal(unittest.TestCase):
    def test_flat_part_holds_the_sample(self):
        signal = render([0.2, -0.4, 0.9], delta_s=1e-5)
        self.assertEqual(signal.eval(0.5e-5), 0.2)
        self.assertEqual(signal.eval(1.5e-5), -0.4)
        self.assertEqual(signal(2.9e-5), 0.9)

    def test_ramp_interpolates_from_previous_level(self):
        signal = StepSignal([0.0, 1.0], delta_s=1.0, rise_fraction=0.1)
        self.assertAlmostEqual(signal.eval(1.05), 0.5, places=12)
        self.assertAlmostEqual(signal.eval(1.0), 0.0, places=12)
        self.assertEqual(signal.eval(1.1), 1.0)

    def test_first_interval_has_no_ramp(self):
        signal = StepSignal([0.7, 0.1], delta_s=1.0, rise_fraction=0.1)
        self.assertEqual(signal.eval(0.0), 0.7)
        self.assertFalse(signal.has_ramp(0))
        self.assertTrue(signal.has_ramp(1))

    def test_equal_neighbours_have_no_ramp(self):
        signal = StepSignal([0.3, 0.3], delta_s=1.0)
        self.assertFalse(signal.has_ramp(1))

    def test_horizon_end_is_evaluable(self):
        signal = StepSignal([0.1, 0.2, 0.3], delta_s=2.0)
        self.assertEqual(signal.horizon, 6.0)
        self.assertEqual(signal.eval(6.0), 0.3)

    def test_out_of_range(self):
        signal = StepSignal([0.1, 0.2], delta_s=1.0)
        with self.assertRaises(OutOfRangeError):
            signal.eval(-0.1)
        with self.assertRaises(OutOfRangeError):
            signal.eval(2.5)

    def test_invalid_construction(self):
        with self.assertRaises(InvalidInputError):
            StepSignal([], delta_s=1.0)
        with self.assertRaises(InvalidInputError):
            StepSignal([1.0], delta_s=0.0)
        with self.assertRaises(InvalidInputError):
            StepSignal([1.0], delta_s=1.0, rise_fraction=1.0)
        with self.assertRaises(InvalidInputError):
            StepSignal([1.0, float("nan")], delta_s=1.0)

    def test_multichannel_shares_timing(self):
        samples = np.array([[0.0, 1.0], [1.0, 3.0]])
        signal = StepSignal(samples, delta_s=1.0, rise_fraction=0.2)
        np.testing.assert_allclose(signal.eval(1.1), [0.5, 2.0])
        np.testing.assert_array_equal(signal.eval(0.5), [0.0, 1.0])

    def test_samples_are_read_only(self):
        signal = StepSignal([0.1, 0.2], delta_s=1.0)
        with self.assertRaises(ValueError):
            signal.samples[0] = 5.0

    def test_total_variation(self):
        signal = StepSignal([0.0, 1.0, -1.0], delta_s=1.0)
        self.assertEqual(signal.total_variation(), 3.0)


class TestSampleEpochs(unittest.TestCase):
    def test_points_are_epoch_boundaries(self):
        values = sample_epochs(lambda t: t, m=4, delta_s=0.5, epochs=3)
        self.assertEqual(values, [2.0, 4.0, 6.0])

    def test_beyond_horizon(self):
        class Short:
            horizon = 3.0

            def __call__(self, t):
                return t

        with self.assertRaises(OutOfRangeError):
            sample_epochs(Short(), m=2, delta_s=1.0, epochs=2)

    def test_invalid_arguments(self):
        with self.assertRaises(InvalidInputError):
            sample_epochs(lambda t: t, m=0, delta_s=1.0, epochs=1)


if __name__ == "__main__":
    unittest.main()
