import json
import tempfile
import unittest
from pathlib import Path

from abstracts.exception import ConfigError, InvalidInputError
from app.harness.trace_io import (
    gnuplot_columns,
    load_config,
    parse_config,
    read_trace_csv,
    read_trace_json,
    trace_header,
    write_snapshot,
    write_trace_csv,
    write_trace_json,
)
from models.experiment import ExperimentConfig
from models.hyperparams import Hyperparams
from models.trace import Tier, TrainTrace

HP = Hyperparams(alpha=1e-3, lambda_=0.1, epochs=2)


def biased_trace() -> TrainTrace:
    return TrainTrace(
        tier=Tier.CT,
        epochs=2,
        weights_per_epoch=[[0.1, -0.2], [0.15, -0.25]],
        bias_per_epoch=[0.01, 0.02],
        mse_train=[0.3, 0.2],
        hyperparams=HP,
        dataset="toy",
    )


class TestTraceFiles(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_header(self):
        self.assertEqual(
            trace_header(biased_trace()),
            ["epoch", "w_1", "w_2", "w_0", "mse_train", "mse_test"],
        )

    def test_csv_has_one_row_per_epoch(self):
        path = write_trace_csv(biased_trace(), self.dir / "nested" / "ct.csv")
        lines = path.read_text().splitlines()
        self.assertEqual(len(lines), 3)
        self.assertEqual(lines[1], "1,0.1,-0.2,0.01,0.3,")
        frame = read_trace_csv(path)
        self.assertEqual(list(frame["w_2"]), [-0.2, -0.25])
        self.assertTrue(frame["mse_test"].isna().all())

    def test_json_keeps_full_precision(self):
        trace = biased_trace().model_copy(update={"mse_train": [1 / 3, 2 / 7]})
        path = write_trace_json(trace, self.dir / "ct.json")
        self.assertEqual(json.loads(path.read_text())["format_version"], 1)
        loaded = read_trace_json(path)
        self.assertEqual(loaded.mse_train, [1 / 3, 2 / 7])
        self.assertEqual(loaded.bias_per_epoch, [0.01, 0.02])

    def test_json_rejects_unknown_versions(self):
        path = self.dir / "old.json"
        path.write_text(json.dumps({"format_version": 0}))
        with self.assertRaises(InvalidInputError):
            read_trace_json(path)
        path.write_text("[1, 2]")
        with self.assertRaises(InvalidInputError):
            read_trace_json(path)
        with self.assertRaises(InvalidInputError):
            read_trace_json(self.dir / "absent.json")

    def test_gnuplot_marks_missing_values(self):
        text = gnuplot_columns(biased_trace())
        lines = text.splitlines()
        self.assertTrue(lines[0].startswith("# epoch w_1"))
        self.assertTrue(lines[1].endswith(" NaN"))


class TestConfigFiles(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_yaml_document(self):
        path = self.dir / "run.yaml"
        path.write_text(
            "name: quick\n"
            "hyperparams:\n"
            "  alpha: 0.002\n"
            "  lambda: 0.05\n"
            "  epochs: 10\n"
            "tiers: [ideal, ct]\n"
            "dataset:\n"
            "  seeds: [7]\n"
        )
        cfg = load_config(path)
        self.assertEqual(cfg.name, "quick")
        self.assertEqual(cfg.hyperparams.lambda_, 0.05)
        self.assertEqual(cfg.tiers, [Tier.IDEAL, Tier.CT])
        self.assertEqual(cfg.dataset.seeds, [7])

    def test_snapshot_reloads_the_same_config(self):
        cfg = ExperimentConfig(name="snap", circuit_mode="solve")
        path = write_snapshot(cfg, self.dir / "snapshot.json", derived={"delta_s": 1e-5})
        doc = json.loads(path.read_text())
        self.assertEqual(doc["derived"]["delta_s"], 1e-5)
        self.assertEqual(load_config(path), cfg)

    def test_invalid_documents(self):
        with self.assertRaises(ConfigError):
            load_config(self.dir / "absent.yaml")
        bad = self.dir / "bad.yaml"
        bad.write_text("name: [unclosed\n")
        with self.assertRaises(ConfigError):
            load_config(bad)
        with self.assertRaises(ConfigError):
            parse_config(["not", "a", "mapping"])
        with self.assertRaises(ConfigError):
            parse_config({"tiers": ["ct"], "reference_tier": "ideal"})
        with self.assertRaises(ConfigError):
            parse_config({"unknown_key": 1})
        with self.assertRaises(ConfigError):
            parse_config({"snapshot_format_version": 99, "config": {}})


if __name__ == "__main__":
    unittest.main()
