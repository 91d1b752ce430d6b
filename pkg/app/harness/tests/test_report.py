import unittest

from abstracts.exception import InvalidInputError
from app.harness.report import bits_of_precision, compare
from models.hyperparams import Hyperparams
from models.trace import Tier, TrainTrace

HP = Hyperparams(alpha=1e-3, lambda_=0.1, epochs=3)


def make_trace(tier, weights, mse, bias=None, mse_test=None) -> TrainTrace:
    return TrainTrace(
        tier=tier,
        epochs=len(weights),
        weights_per_epoch=weights,
        bias_per_epoch=bias,
        mse_train=mse,
        mse_test=mse_test,
        hyperparams=HP,
    )


class TestBits(unittest.TestCase):
    def test_powers_of_two(self):
        self.assertEqual(bits_of_precision(2.0 * 2**-10), 10)
        self.assertEqual(bits_of_precision(2.0), 0)
        self.assertEqual(bits_of_precision(0.0071), 8)

    def test_out_of_range(self):
        with self.assertRaises(InvalidInputError):
            bits_of_precision(0.0)
        with self.assertRaises(InvalidInputError):
            bits_of_precision(2.5)


class TestCompare(unittest.TestCase):
    def test_identical_traces_are_exact(self):
        trace = make_trace(Tier.IDEAL, [[0.1], [0.2], [0.3]], [0.5, 0.4, 0.3])
        report = compare(trace, trace.model_copy(update={"tier": Tier.CT}))
        self.assertEqual(report.bits, "exact")
        self.assertTrue(report.is_exact)
        self.assertEqual(report.max_abs_error, 0.0)
        self.assertEqual(report.candidate, Tier.CT)

    def test_metrics(self):
        reference = make_trace(
            Tier.IDEAL, [[0.1, 0.0], [0.5, 0.0]], [0.2, 0.1], mse_test=[0.3, 0.2]
        )
        candidate = make_trace(
            Tier.CIRCUIT, [[0.1, 0.0], [0.505, 0.001]], [0.2, 0.1005], mse_test=[0.3, 0.202]
        )
        report = compare(reference, candidate)
        self.assertAlmostEqual(report.weight_abs_diff[0], 0.005, places=12)
        self.assertAlmostEqual(report.weight_rel_percent[0], 1.0, places=9)
        self.assertIsNone(report.weight_rel_percent[1])
        self.assertAlmostEqual(report.max_abs_percent, 0.5, places=9)
        self.assertAlmostEqual(report.max_rel_percent, 1.0, places=9)
        self.assertEqual(report.bits, 8)
        self.assertAlmostEqual(report.mse_train_rel_percent, 0.5, places=9)
        self.assertAlmostEqual(report.mse_test_rel_percent, 1.0, places=9)
        self.assertAlmostEqual(report.curve_max_weight_diff, 0.005, places=12)

    def test_bias_is_compared(self):
        reference = make_trace(Tier.IDEAL, [[0.1]], [0.2], bias=[0.5])
        candidate = make_trace(Tier.CT, [[0.1]], [0.2], bias=[0.25])
        self.assertAlmostEqual(compare(reference, candidate).max_abs_error, 0.25)

    def test_curves_use_the_shorter_trace(self):
        reference = make_trace(Tier.IDEAL, [[0.1], [0.2], [0.3]], [0.5, 0.4, 0.3])
        candidate = make_trace(Tier.CT, [[0.1], [0.25]], [0.5, 0.45])
        report = compare(reference, candidate)
        self.assertAlmostEqual(report.curve_max_weight_diff, 0.05, places=12)

    def test_incompatible_traces(self):
        single = make_trace(Tier.IDEAL, [[0.1]], [0.2])
        with self.assertRaises(InvalidInputError):
            compare(single, make_trace(Tier.CT, [[0.1, 0.2]], [0.2]))
        with self.assertRaises(InvalidInputError):
            compare(single, make_trace(Tier.CT, [], []))


if __name__ == "__main__":
    unittest.main()
