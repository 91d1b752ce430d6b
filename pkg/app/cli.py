"""analogsgd command line.

    analogsgd train --config experiment.yaml --epochs 50 --tier ct
    analogsgd sweep --config sweep.yaml --workers 4
    analogsgd solve-params --alpha 1e-3 --lambda 5e-4

Exit codes: 0 success, 1 divergence or infeasible mapping, 2 bad
configuration or input.
"""

import argparse
import logging
import sys
from typing import List, Optional

import sentry_sdk

from abstracts.exception import (
    ConfigError,
    DatasetFormatError,
    DatasetIOError,
    DivergenceError,
    InfeasibleMappingError,
    InvalidInputError,
    SubthresholdViolationError,
)
from app.config.config import config
from app.entrypoints import commands
from app.harness.trace_io import load_config, parse_config
from models.experiment import ExperimentConfig
from models.trace import Tier

logger = logging.getLogger(__name__)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--config",
        default=config.default_config_path,
        help="Experiment document (YAML/JSON) or run snapshot; defaults to $SGDCT_CONFIG",
    )
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--lambda", dest="lambda_", type=float)
    parser.add_argument("--delta-s", dest="delta_s", type=float)
    parser.add_argument(
        "--seed",
        type=int,
        help="Univariate dataset seed, or the housing split seed; also recorded in hyperparams",
    )
    parser.add_argument(
        "--tier",
        action="append",
        choices=[t.value for t in Tier],
        help="Tier to run, repeatable; replaces the configured tiers",
    )
    parser.add_argument("--output", help="Output directory or file")
    parser.add_argument("--workers", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="analogsgd",
        description="Multi-fidelity simulator of continuous-time SGD on an analog learning circuit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, handler, text in (
        ("gen-data", commands.gen_data, "Generate or load datasets and export them as JSON"),
        ("train", commands.train, "Run the configured tiers and compare them"),
        ("sweep", commands.run_sweep, "Run the (alpha, lambda) grid"),
        ("map-params", commands.map_params, "Hyperparameters realized by the circuit"),
        ("solve-params", commands.solve_params, "Circuit realizing the hyperparameters"),
    ):
        p = sub.add_parser(name, help=text)
        _add_common(p)
        p.set_defaults(handler=handler)

    p = sub.add_parser("compare", help="Compare two trace JSON files")
    _add_common(p)
    p.add_argument("reference")
    p.add_argument("candidate")
    p.set_defaults(handler=commands.compare_traces)

    p = sub.add_parser("plot", help="Write a trace as gnuplot columns")
    _add_common(p)
    p.add_argument("trace")
    p.set_defaults(handler=commands.plot)
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """Config document (or defaults) with the command-line overrides applied.

    Raises:
        ConfigError: If the document or the overrides are invalid
    """
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    doc = cfg.model_dump(mode="json", by_alias=True)
    hp = doc["hyperparams"]
    for key, value in (
        ("epochs", args.epochs),
        ("alpha", args.alpha),
        ("lambda", args.lambda_),
        ("delta_s", args.delta_s),
        ("seed", args.seed),
    ):
        if value is not None:
            hp[key] = value
    if args.tier:
        doc["tiers"] = list(dict.fromkeys(args.tier))
        if doc["reference_tier"] not in doc["tiers"]:
            doc["reference_tier"] = doc["tiers"][0]
    if args.seed is not None:
        if doc["dataset"]["kind"] == "univariate":
            doc["dataset"]["seeds"] = [args.seed]
        elif doc["dataset"]["kind"] == "boston":
            doc["dataset"]["split_seed"] = args.seed
    if args.workers is not None:
        doc["workers"] = args.workers
    elif "workers" not in cfg.model_fields_set:
        doc["workers"] = config.workers
    if doc.get("output_dir") is None:
        doc["output_dir"] = config.output_dir
    if "divergence_guard" not in cfg.solver.model_fields_set:
        doc["solver"]["divergence_guard"] = config.divergence_guard
    if doc["dataset"]["kind"] == "boston" and not doc["dataset"].get("path"):
        doc["dataset"]["path"] = config.boston_csv
    return parse_config(doc, args.config or "<defaults>")


def main(argv: Optional[List[str]] = None) -> int:
    config.setup()
    if config.sentry_dsn:
        sentry_sdk.init(
            dsn=config.sentry_dsn,
            sample_rate=config.sentry_sample_rate,
            traces_sample_rate=config.sentry_traces_sample_rate,
            environment=config.env,
            release=config.release,
            server_name="analogsgd-cli",
        )
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        return args.handler(args, cfg)
    except (ConfigError, InvalidInputError, DatasetIOError, DatasetFormatError) as e:
        logger.error(e.message)
        return commands.EXIT_USAGE
    except (DivergenceError, InfeasibleMappingError, SubthresholdViolationError) as e:
        logger.error(e.message)
        return commands.EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
