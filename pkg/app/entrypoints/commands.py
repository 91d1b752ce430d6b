"""Handlers of the CLI subcommands.

Every handler takes the parsed arguments and the resolved experiment
configuration and returns the process exit code.
"""

import json
import logging
from pathlib import Path
from typing import Optional

from app.core.circuit import map_hyperparams, solve_circuit_params
from app.core.data import build_datasets, export_dataset
from app.harness.experiment import resolve_circuit, run_experiment
from app.harness.report import compare
from app.harness.sweep import cell_name, sweep
from app.harness.trace_io import (
    gnuplot_columns,
    read_trace_json,
    write_gnuplot,
    write_report,
)
from models.experiment import ExperimentConfig
from models.trace import TrainTrace
from utils.files import write_json_atomic

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def _emit(doc: dict, output: Optional[str]) -> None:
    if output:
        write_json_atomic(output, doc)
        logger.info(f"wrote {output}")
    else:
        print(json.dumps(doc, indent=2))


def gen_data(args, cfg: ExperimentConfig) -> int:
    out = Path(args.output or cfg.output_dir or "runs") / cfg.name / "data"
    for dataset in build_datasets(cfg.dataset):
        path = out / f"{dataset.name}.json"
        export_dataset(dataset, path)
        print(f"{dataset.name}: {dataset.samples} rows, {dataset.features} feature(s) -> {path}")
    return EXIT_OK


def train(args, cfg: ExperimentConfig) -> int:
    result = run_experiment(cfg, output_dir=args.output, workers=args.workers)
    for run in result.runs:
        for tier, trace in run.traces.items():
            weights = ", ".join(f"{w:.6f}" for w in trace.final_parameters()) if trace.epochs else "-"
            mse = f"{trace.mse_train[-1]:.6g}" if trace.epochs else "-"
            print(f"{run.dataset} {tier.value:8s} epochs={trace.epochs} w=[{weights}] mse_train={mse}")
        for tier, report in run.reports.items():
            rel = "n/a" if report.max_rel_percent is None else f"{report.max_rel_percent:.4f}%"
            print(
                f"{run.dataset} {tier.value} vs {report.reference.value}: "
                f"max |dw|={report.max_abs_error:.3g} ({report.max_abs_percent:.4f}% of unit), "
                f"max rel={rel}, bits={report.bits}"
            )
    if result.output_dir:
        print(f"outputs in {result.output_dir}")
    return EXIT_OK if result.ok else EXIT_FAILED


def compare_traces(args, cfg: ExperimentConfig) -> int:
    reference = read_trace_json(args.reference)
    candidate = read_trace_json(args.candidate)
    report = compare(reference, candidate)
    if args.output:
        write_report(report, args.output)
    else:
        print(report.model_dump_json(indent=2))
    return EXIT_OK


def run_sweep(args, cfg: ExperimentConfig) -> int:
    report = sweep(cfg, output_dir=args.output, workers=args.workers)
    for cell in report.cells:
        state = "ok" if cell.converged else f"FAILED ({cell.failure})"
        rel = "n/a" if cell.max_rel_percent is None else f"{cell.max_rel_percent:.4f}%"
        print(f"{cell_name(cell.alpha, cell.lambda_)}: delta_s={cell.delta_s} max rel={rel} {state}")
    return EXIT_OK if report.ok else EXIT_FAILED


def map_params(args, cfg: ExperimentConfig) -> int:
    cp, hp, _ = resolve_circuit(cfg)
    mapped = map_hyperparams(hp, cp)
    _emit(
        {
            "delta_s": hp.delta_s,
            "circuit": cp.model_dump(mode="json"),
            **mapped.model_dump(by_alias=True),
        },
        args.output,
    )
    return EXIT_OK


def solve_params(args, cfg: ExperimentConfig) -> int:
    hp = cfg.hyperparams
    solution = solve_circuit_params(hp.alpha, hp.lambda_, cfg.bounds)
    _emit(solution.model_dump(mode="json"), args.output)
    return EXIT_OK


def plot(args, cfg: ExperimentConfig) -> int:
    trace: TrainTrace = read_trace_json(args.trace)
    if args.output:
        write_gnuplot(trace, args.output)
    else:
        print(gnuplot_columns(trace), end="")
    return EXIT_OK
