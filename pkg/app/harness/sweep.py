"""(alpha, lambda) grid sweeps; alpha is realized by the hold time."""

import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, Optional, Tuple

from abstracts.exception import InfeasibleMappingError, SimulationError
from app.core.circuit import solve_circuit_params
from app.core.data import build_datasets
from app.harness.experiment import run_experiment
from app.harness.trace_io import write_report
from models.dataset import Dataset
from models.experiment import ExperimentConfig, SweepSpec
from models.trace import SweepCell, SweepReport

logger = logging.getLogger(__name__)


def cell_name(alpha: float, lambda_: float) -> str:
    return f"a{alpha:g}_l{lambda_:g}"


def cell_config(config: ExperimentConfig, alpha: float, lambda_: float) -> Tuple[ExperimentConfig, int]:
    """Explicit-mode experiment of one grid cell and its stack depth."""
    solution = solve_circuit_params(alpha, lambda_, config.bounds)
    hp = config.hyperparams.with_updates(
        alpha=alpha, lambda_=lambda_, delta_s=solution.delta_s
    )
    cell = config.model_copy(
        update={
            "name": cell_name(alpha, lambda_),
            "hyperparams": hp,
            "circuit": solution.params,
            "circuit_mode": "explicit",
            "sweep": None,
            "output_dir": None,
            "workers": 1,
        }
    )
    return cell, solution.stack_depth


def run_cell(
    config: ExperimentConfig,
    alpha: float,
    lambda_: float,
    datasets: List[Dataset],
    output_dir: Optional[str],
) -> SweepCell:
    """One grid point; failures are kept in the cell instead of raised."""
    try:
        cell, depth = cell_config(config, alpha, lambda_)
    except InfeasibleMappingError as e:
        return SweepCell(alpha=alpha, lambda_=lambda_, failure=e.message)
    try:
        result = run_experiment(cell, output_dir=output_dir, datasets=datasets)
    except SimulationError as e:
        logger.error(f"sweep cell {cell.name} failed: {e.message}")
        return SweepCell(
            alpha=alpha,
            lambda_=lambda_,
            delta_s=cell.hyperparams.delta_s,
            stack_depth=depth,
            failure=e.message,
        )
    rel = [
        report.max_rel_percent
        for run in result.runs
        for report in run.reports.values()
        if report.max_rel_percent is not None
    ]
    errors = [report.max_abs_error for run in result.runs for report in run.reports.values()]
    failure = "; ".join(result.failures) or None
    return SweepCell(
        alpha=alpha,
        lambda_=lambda_,
        delta_s=cell.hyperparams.delta_s,
        stack_depth=depth,
        result=result,
        failure=failure,
        max_rel_percent=max(rel) if rel else None,
        max_abs_error=max(errors) if errors else None,
    )


def _run_cell_job(args) -> SweepCell:
    return run_cell(*args)


def sweep(
    config: ExperimentConfig,
    output_dir: Optional[str] = None,
    workers: Optional[int] = None,
) -> SweepReport:
    """Run every (alpha, lambda) cell of config.sweep.

    Each cell solves its own circuit, so alpha changes only the hold time.
    Cells write their traces below <output_dir>/<name>/sweep/<cell> and the
    grid summary to <output_dir>/<name>/sweep_report.json.
    """
    grid = config.sweep or SweepSpec()
    datasets = build_datasets(config.dataset)
    out = output_dir or config.output_dir
    sweep_dir = Path(out) / config.name if out else None
    cell_out = str(sweep_dir / "sweep") if sweep_dir else None
    workers = workers or config.workers

    jobs = [
        (config, alpha, lambda_, datasets, cell_out)
        for alpha in grid.alphas
        for lambda_ in grid.lambdas
    ]
    logger.info(
        f"sweep {config.name}: {len(grid.alphas)} x {len(grid.lambdas)} cells, "
        f"{workers} worker(s)"
    )
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_run_cell_job, jobs))
    else:
        cells = [_run_cell_job(job) for job in jobs]

    report = SweepReport(
        name=config.name, alphas=grid.alphas, lambdas=grid.lambdas, cells=cells
    )
    for cell in cells:
        if not cell.converged:
            logger.error(
                f"sweep cell {cell_name(cell.alpha, cell.lambda_)}: {cell.failure}"
            )
    if sweep_dir:
        write_report(report, sweep_dir / "sweep_report.json")
    return report
