import os
import tempfile
import unittest
from pathlib import Path

from abstracts.exception import InfeasibleMappingError
from app.core.circuit import solve_circuit_params
from app.core.data import gen_univariate
from app.harness.experiment import resolve_circuit, run_dataset, run_experiment
from app.harness.sweep import cell_name, sweep
from app.harness.trace_io import load_config
from models.circuit import CircuitBounds, CircuitParams
from models.experiment import DatasetKind, DatasetSpec, ExperimentConfig, SolverOptions, SweepSpec
from models.hyperparams import Hyperparams
from models.trace import RunStatus, Tier


def small_config(**changes) -> ExperimentConfig:
    base = dict(
        name="small",
        hyperparams=Hyperparams(alpha=1e-3, lambda_=0.1, epochs=5),
        tiers=[Tier.IDEAL, Tier.CT],
        dataset=DatasetSpec(seeds=[0], samples=20),
    )
    base.update(changes)
    return ExperimentConfig(**base)


class TestCircuitAgainstIdeal(unittest.TestCase):
    def test_five_seeds_at_nominal_parameters(self):
        result = run_experiment(ExperimentConfig(name="nominal"))
        self.assertTrue(result.ok, result.failures)
        self.assertEqual(len(result.runs), 5)
        for run in result.runs:
            report = run.reports[Tier.CIRCUIT]
            self.assertLessEqual(report.max_abs_percent, 0.71, run.dataset)
            self.assertLessEqual(report.mse_train_rel_percent, 0.87, run.dataset)
            reference = run.traces[Tier.IDEAL].final_parameters()[0]
            if abs(reference) >= 0.05:
                self.assertLessEqual(report.weight_rel_percent[0], 0.71, run.dataset)
            self.assertEqual(run.traces[Tier.CIRCUIT].monitor_excursions, 0)
            self.assertEqual(run.traces[Tier.CIRCUIT].epochs, 200)


class TestHousingRegression(unittest.TestCase):
    @unittest.skipUnless(os.getenv("BOSTON_CSV"), "BOSTON_CSV not set")
    def test_circuit_fits_like_discrete_sgd(self):
        config = ExperimentConfig(
            name="boston",
            hyperparams=Hyperparams(alpha=1e-3, lambda_=0.1, epochs=125),
            circuit_mode="solve",
            dataset=DatasetSpec(kind=DatasetKind.BOSTON, path=os.environ["BOSTON_CSV"]),
            solver=SolverOptions(train_bias=True),
        )
        result = run_experiment(config)
        self.assertTrue(result.ok, result.failures)
        report = result.runs[0].reports[Tier.CIRCUIT]
        self.assertLessEqual(report.max_abs_percent, 0.527)
        self.assertLess(report.mse_train_rel_percent, 1.0)
        self.assertNotEqual(report.bits, "exact")
        self.assertGreaterEqual(report.bits, 8)


class TestEulerLimit(unittest.TestCase):
    def test_gap_to_discrete_sgd_shrinks_with_the_rate(self):
        config = small_config(
            hyperparams=Hyperparams(alpha=1e-3, lambda_=0.1, epochs=200),
            solver=SolverOptions(rise_fraction=0.0),
        )
        for seed in range(5):
            dataset = gen_univariate(seed)
            gaps = []
            for alpha in (1e-2, 1e-3, 1e-4):
                solution = solve_circuit_params(alpha, 0.1)
                hp = config.hyperparams.with_updates(alpha=alpha, delta_s=solution.delta_s)
                run = run_dataset(config, dataset, solution.params, hp)
                gaps.append(run.reports[Tier.CT].max_abs_error)
            self.assertLessEqual(gaps[1], gaps[0], f"seed {seed}: {gaps}")
            self.assertLessEqual(gaps[2], gaps[1], f"seed {seed}: {gaps}")


class TestRunExperiment(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_output_layout(self):
        result = run_experiment(small_config(), output_dir=str(self.dir))
        run_dir = self.dir / "small"
        self.assertEqual(result.output_dir, str(run_dir))
        for name in ("ideal.csv", "ideal.json", "ct.csv", "ct.json", "report.json"):
            self.assertTrue((run_dir / "univariate-s0" / name).exists(), name)
        self.assertTrue((run_dir / "snapshot.json").exists())
        self.assertTrue((run_dir / "experiment_report.json").exists())
        lines = (run_dir / "univariate-s0" / "ct.csv").read_text().splitlines()
        self.assertEqual(len(lines), 5 + 1)

    def test_snapshot_reruns_identically(self):
        first = run_experiment(small_config(), output_dir=str(self.dir / "a"))
        config = load_config(self.dir / "a" / "small" / "snapshot.json")
        second = run_experiment(config, output_dir=str(self.dir / "b"))
        for tier in (Tier.IDEAL, Tier.CT):
            a, b = first.runs[0].traces[tier], second.runs[0].traces[tier]
            self.assertEqual(a.weights_per_epoch, b.weights_per_epoch)
            self.assertEqual(a.mse_train, b.mse_train)

    def test_workers_do_not_change_results(self):
        config = small_config(dataset=DatasetSpec(seeds=[0, 1], samples=20))
        serial = run_experiment(config, workers=1)
        parallel = run_experiment(config, workers=2)
        self.assertEqual([r.dataset for r in serial.runs], [r.dataset for r in parallel.runs])
        for a, b in zip(serial.runs, parallel.runs):
            self.assertEqual(
                a.traces[Tier.CT].weights_per_epoch, b.traces[Tier.CT].weights_per_epoch
            )

    def test_divergence_is_recorded(self):
        config = small_config(hyperparams=Hyperparams(alpha=20.0, lambda_=0.1, epochs=3))
        result = run_experiment(config)
        self.assertFalse(result.ok)
        run = result.runs[0]
        self.assertEqual(run.traces[Tier.IDEAL].status, RunStatus.DIVERGED)
        self.assertTrue(any(f.startswith("ideal") for f in run.failures))
        self.assertEqual(run.traces[Tier.CT].status, RunStatus.COMPLETED)

    def test_infeasible_solve(self):
        config = small_config(
            hyperparams=Hyperparams(alpha=1e-3, lambda_=5e-4, epochs=2),
            circuit_mode="solve",
            bounds=CircuitBounds(max_stack_depth=0),
        )
        with self.assertRaises(InfeasibleMappingError):
            run_experiment(config)

    def test_solve_mode_replaces_the_hold_time(self):
        cp, hp, solution = resolve_circuit(small_config(circuit_mode="solve"))
        self.assertEqual(solution.stack_depth, 0)
        self.assertEqual(hp.delta_s, solution.delta_s)
        self.assertEqual(cp, solution.params)

    def test_explicit_mode_warns_on_mismatch(self):
        config = small_config(
            tiers=[Tier.IDEAL, Tier.CIRCUIT],
            circuit=CircuitParams(Iq=2e-7),
        )
        with self.assertLogs("app.harness.experiment", level="WARNING") as logs:
            resolve_circuit(config)
        self.assertTrue(any("lambda" in line for line in logs.output))


class TestSweep(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_grid_converges(self):
        config = small_config(
            name="grid",
            hyperparams=Hyperparams(alpha=1e-3, lambda_=0.1, epochs=50),
            tiers=[Tier.IDEAL, Tier.CIRCUIT],
            dataset=DatasetSpec(seeds=[0], samples=50, true_weight=0.7),
            sweep=SweepSpec(),
        )
        report = sweep(config, output_dir=str(self.dir))
        self.assertEqual(len(report.cells), 9)
        for cell in report.cells:
            self.assertTrue(cell.converged, cell.failure)
            self.assertLessEqual(cell.max_rel_percent, 2.0, cell_name(cell.alpha, cell.lambda_))
        ratio = report.cell(1e-2, 0.1).delta_s / report.cell(1e-3, 0.1).delta_s
        self.assertAlmostEqual(ratio, 10.0, places=9)
        self.assertTrue((self.dir / "grid" / "sweep_report.json").exists())
        self.assertTrue((self.dir / "grid" / "sweep" / "a0.01_l0.1" / "univariate-s0").is_dir())

    def test_infeasible_cell_is_reported(self):
        config = small_config(
            name="edge",
            hyperparams=Hyperparams(alpha=1e-3, lambda_=0.1, epochs=2),
            sweep=SweepSpec(alphas=[1e-3], lambdas=[0.1, 1e-9]),
        )
        report = sweep(config)
        self.assertTrue(report.cell(1e-3, 0.1).converged)
        bad = report.cell(1e-3, 1e-9)
        self.assertFalse(bad.converged)
        self.assertIsNotNone(bad.failure)
        self.assertFalse(report.ok)

    def test_cell_names(self):
        self.assertEqual(cell_name(1e-3, 0.05), "a0.001_l0.05")


if __name__ == "__main__":
    unittest.main()
