"""Experiment orchestration: datasets x tiers, comparisons and output files."""

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from abstracts.exception import (
    DivergenceError,
    InvalidInputError,
    SubthresholdViolationError,
)
from abstracts.tier import TierSimulator
from app.core.circuit import (
    CircuitSimulator,
    SubthresholdMonitor,
    map_hyperparams,
    solve_circuit_params,
)
from app.core.ct_core import CTSolver
from app.core.data import build_datasets
from app.core.device import DeviceSimulator
from app.core.ideal import IdealTrainer
from app.harness.report import compare
from app.harness.trace_io import (
    write_report,
    write_snapshot,
    write_trace_csv,
    write_trace_json,
)
from models.circuit import CircuitParams, CircuitSolution
from models.dataset import Dataset
from models.device import DeviceParams
from models.experiment import ExperimentConfig
from models.hyperparams import Hyperparams
from models.trace import (
    ComparisonReport,
    ExperimentResult,
    RunResult,
    Tier,
    TrainTrace,
)
from utils.logging import run_context

logger = logging.getLogger(__name__)

# Relative gap between configured and realized hyperparameters worth a warning
MAPPING_TOLERANCE = 2e-3

PHYSICAL_TIERS = (Tier.CIRCUIT, Tier.DEVICE)


def make_tier(tier: Tier, config: ExperimentConfig, cp: CircuitParams) -> TierSimulator:
    """Simulator of one tier configured from the solver block."""
    s = config.solver
    if tier == Tier.IDEAL:
        return IdealTrainer(train_bias=s.train_bias, divergence_guard=s.divergence_guard)
    if tier == Tier.CT:
        return CTSolver(
            rise_fraction=s.rise_fraction,
            ramp_substeps=s.ramp_substeps,
            latch_delta=s.latch_delta,
            train_bias=s.train_bias,
            divergence_guard=s.divergence_guard,
        )
    monitor = SubthresholdMonitor(s.current_min, s.current_max, s.strict_monitor)
    if tier == Tier.CIRCUIT:
        return CircuitSimulator(
            cp,
            rise_fraction=s.rise_fraction,
            ramp_substeps=s.circuit_ramp_substeps,
            flat_substeps=s.circuit_flat_substeps,
            latch_delta=s.latch_delta,
            train_bias=s.train_bias,
            gms_current_ratio=s.gms_current_ratio,
            initial_cell_ratio=s.initial_cell_ratio,
            divergence_guard=s.divergence_guard,
            monitor=monitor,
        )
    if tier == Tier.DEVICE:
        return DeviceSimulator(
            DeviceParams(circuit=cp),
            rise_fraction=s.rise_fraction,
            substeps=s.device_substeps,
            latch_delta=s.latch_delta,
            gms_current_ratio=s.gms_current_ratio,
            initial_cell_ratio=s.initial_cell_ratio,
            divergence_guard=s.divergence_guard,
            monitor=monitor,
        )
    raise InvalidInputError(f"unknown tier: {tier}")


def resolve_circuit(
    config: ExperimentConfig,
) -> Tuple[CircuitParams, Hyperparams, Optional[CircuitSolution]]:
    """Circuit parameters and hyperparameters every tier of the run uses.

    In solve mode the hold time is replaced by the solved one. In explicit
    mode the given circuit is used as is and a warning is logged when it does
    not realize the configured (alpha, lambda).

    Raises:
        InfeasibleMappingError: If solve_circuit_params finds no parameter set
    """
    hp = config.hyperparams
    if config.circuit_mode == "solve":
        solution = solve_circuit_params(hp.alpha, hp.lambda_, config.bounds)
        return solution.params, hp.with_updates(delta_s=solution.delta_s), solution
    cp = config.circuit
    if any(t in PHYSICAL_TIERS for t in config.tiers):
        mapped = map_hyperparams(hp, cp)
        for label, want, got in (
            ("alpha", hp.alpha, mapped.alpha),
            ("lambda", hp.lambda_, mapped.lambda_),
        ):
            if want > 0 and abs(got - want) / want > MAPPING_TOLERANCE:
                logger.warning(
                    f"circuit realizes {label}={got:.6g}, configured {label}={want:.6g}",
                    extra={"experiment": config.name},
                )
    return cp, hp, None


def run_dataset(
    config: ExperimentConfig, dataset: Dataset, cp: CircuitParams, hp: Hyperparams
) -> RunResult:
    """Run every configured tier on one dataset and compare against the reference."""
    traces: Dict[Tier, TrainTrace] = {}
    failures: List[str] = []
    for tier in config.tiers:
        simulator = make_tier(tier, config, cp)
        with run_context(experiment=config.name, dataset=dataset.name, tier=tier.value):
            try:
                traces[tier] = simulator.train(dataset, hp)
            except DivergenceError as e:
                failures.append(f"{tier.value}: {e.message}")
                if e.trace is not None:
                    traces[tier] = e.trace
            except (SubthresholdViolationError, InvalidInputError) as e:
                logger.error(f"{tier.value} tier failed on {dataset.name}: {e.message}")
                failures.append(f"{tier.value}: {e.message}")

    reports: Dict[Tier, ComparisonReport] = {}
    reference = traces.get(config.reference_tier)
    if reference is not None and reference.epochs > 0:
        for tier, trace in traces.items():
            if tier == config.reference_tier or trace.epochs == 0:
                continue
            reports[tier] = compare(reference, trace)
    return RunResult(dataset=dataset.name, traces=traces, reports=reports, failures=failures)


def _run_job(args: Tuple[ExperimentConfig, Dataset, CircuitParams, Hyperparams]) -> RunResult:
    return run_dataset(*args)


def write_run(result: RunResult, directory: Path) -> None:
    for tier, trace in result.traces.items():
        write_trace_csv(trace, directory / f"{tier.value}.csv")
        write_trace_json(trace, directory / f"{tier.value}.json")
    write_report(result, directory / "report.json")


def run_experiment(
    config: ExperimentConfig,
    output_dir: Optional[str] = None,
    workers: Optional[int] = None,
    datasets: Optional[List[Dataset]] = None,
) -> ExperimentResult:
    """Run the configured tiers on every dataset of the experiment.

    Divergence of a tier is recorded as a failure of its run and the partial
    trace is kept. When an output directory is given (argument or config),
    traces, reports and a re-runnable snapshot are written below
    <output_dir>/<name>.

    Raises:
        InfeasibleMappingError: If the circuit cannot be solved
        DatasetIOError, DatasetFormatError: If the data cannot be built
    """
    started = time.perf_counter()
    cp, hp, solution = resolve_circuit(config)
    if datasets is None:
        datasets = build_datasets(config.dataset)
    workers = workers or config.workers
    logger.info(
        f"experiment {config.name}: {len(datasets)} dataset(s), tiers "
        f"{[t.value for t in config.tiers]}, {workers} worker(s)",
        extra={"experiment": config.name},
    )
    jobs = [(config, dataset, cp, hp) for dataset in datasets]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_run_job, jobs))
    else:
        runs = [_run_job(job) for job in jobs]

    out = output_dir or config.output_dir
    run_dir = None
    if out:
        run_dir = Path(out) / config.name
        for run in runs:
            write_run(run, run_dir / run.dataset)
        write_snapshot(
            config,
            run_dir / "snapshot.json",
            derived={
                "circuit": cp.model_dump(mode="json"),
                "delta_s": hp.delta_s,
                "mapped": map_hyperparams(hp, cp).model_dump(by_alias=True),
                "stack_depth": solution.stack_depth if solution else cp.stack_depth,
            },
        )

    result = ExperimentResult(
        name=config.name,
        runs=runs,
        circuit=cp,
        circuit_delta_s=hp.delta_s,
        stack_depth=solution.stack_depth if solution else cp.stack_depth,
        output_dir=str(run_dir) if run_dir else None,
    )
    if run_dir:
        write_report(result, run_dir / "experiment_report.json")
    for failure in result.failures:
        logger.error(f"experiment {config.name}: {failure}")
    logger.info(
        f"experiment {config.name} finished in {time.perf_counter() - started:.2f} s",
        extra={"experiment": config.name},
    )
    return result
