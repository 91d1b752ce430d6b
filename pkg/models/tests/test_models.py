import json
import unittest
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from models.circuit import CircuitBounds, CircuitParams, WeightNodeState
from models.experiment import DatasetKind, DatasetSpec, ExperimentConfig, SolverOptions
from models.hyperparams import Hyperparams, LinearModel
from models.trace import Tier, TrainTrace

SCHEMA_PATH = Path(__file__).parent.parent / "experiment_schema.json"


class TestHyperparams(unittest.TestCase):
    def test_alias_and_rate(self):
        hp = Hyperparams.model_validate({"alpha": 1e-3, "lambda": 0.1, "delta_s": 1e-5})
        self.assertEqual(hp.lambda_, 0.1)
        self.assertAlmostEqual(hp.rate, 100.0)
        self.assertEqual(hp.with_updates(epochs=3).epochs, 3)

    def test_ranges(self):
        for bad in ({"alpha": 0.0, "lambda": 0.1}, {"alpha": 1e-3, "lambda": -1.0}):
            with self.assertRaises(ValidationError):
                Hyperparams.model_validate(bad)
        with self.assertRaises(ValidationError):
            Hyperparams(alpha=1e-3, lambda_=0.1, epochs=0)

    def test_linear_model(self):
        model = LinearModel(weights=[2.0], bias=0.5)
        np.testing.assert_allclose(model.predict(np.array([[1.0], [3.0]])), [2.5, 6.5])
        with self.assertRaises(ValidationError):
            LinearModel(weights=[float("nan")])


class TestCircuitModels(unittest.TestCase):
    def test_nominal_rates(self):
        cp = CircuitParams()
        self.assertAlmostEqual(cp.decay_rate, 10.016, places=3)
        self.assertEqual(cp.stack_gain, 1.0)
        self.assertEqual(cp.stack_depth, 0)

    def test_stack_validation(self):
        with self.assertRaises(ValidationError):
            CircuitParams(stack_left=[1e-7], stack_right=[])
        with self.assertRaises(ValidationError):
            CircuitParams(stack_left=[0.0], stack_right=[1e-8])

    def test_bounds_validation(self):
        with self.assertRaises(ValidationError):
            CircuitBounds(capacitance_min=1e-8, capacitance_max=1e-9)
        with self.assertRaises(ValidationError):
            CircuitBounds(delta_s_min=1.0, delta_s_max=1e-3)

    def test_node_state_positive(self):
        with self.assertRaises(ValidationError):
            WeightNodeState(Iw_plus=0.0, Iw_minus=1e-9)


class TestExperimentConfig(unittest.TestCase):
    def test_defaults(self):
        cfg = ExperimentConfig()
        self.assertEqual(cfg.tiers, [Tier.IDEAL, Tier.CIRCUIT])
        self.assertEqual(cfg.dataset.seeds, [0, 1, 2, 3, 4])
        self.assertEqual(cfg.hyperparams.epochs, 200)

    def test_rules(self):
        with self.assertRaises(ValidationError):
            ExperimentConfig(tiers=[Tier.CT, Tier.CT], reference_tier=Tier.CT)
        with self.assertRaises(ValidationError):
            ExperimentConfig(tiers=[Tier.IDEAL, Tier.DEVICE], solver=SolverOptions(train_bias=True))
        with self.assertRaises(ValidationError):
            ExperimentConfig(name="has space")
        with self.assertRaises(ValidationError):
            DatasetSpec(kind=DatasetKind.FILE)
        self.assertIsNone(DatasetSpec(kind=DatasetKind.BOSTON).path)

    def test_schema_file_matches_model(self):
        stored = json.loads(SCHEMA_PATH.read_text())
        generated = ExperimentConfig.model_json_schema(by_alias=True)
        self.assertEqual(set(stored["properties"]), set(generated["properties"]))
        for name, definition in generated["$defs"].items():
            self.assertEqual(
                set(stored["$defs"][name].get("properties", {})),
                set(definition.get("properties", {})),
                name,
            )


class TestTrainTrace(unittest.TestCase):
    def test_lengths_must_agree(self):
        hp = Hyperparams(alpha=1e-3, lambda_=0.1)
        with self.assertRaises(ValidationError):
            TrainTrace(
                tier=Tier.IDEAL, epochs=2, weights_per_epoch=[[0.1]], mse_train=[0.1], hyperparams=hp
            )
        trace = TrainTrace(
            tier=Tier.IDEAL,
            epochs=1,
            weights_per_epoch=[[0.1, 0.2]],
            bias_per_epoch=[0.3],
            mse_train=[0.1],
            hyperparams=hp,
        )
        np.testing.assert_allclose(trace.final_parameters(), [0.1, 0.2, 0.3])
        self.assertEqual(trace.features, 2)


if __name__ == "__main__":
    unittest.main()
