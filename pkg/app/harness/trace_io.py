"""Trace, report and snapshot files.

Every document carries a format_version; every file is written atomically.
"""

import csv
import io
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd
import yaml
from pydantic import BaseModel, ValidationError

from abstracts.exception import ConfigError, InvalidInputError
from models.experiment import ExperimentConfig
from models.trace import TRACE_FORMAT_VERSION, TrainTrace
from utils.files import PathLike, read_json, write_json_atomic, write_text_atomic

logger = logging.getLogger(__name__)

SNAPSHOT_FORMAT_VERSION = 1


def trace_header(trace: TrainTrace) -> List[str]:
    columns = ["epoch"] + [f"w_{i + 1}" for i in range(trace.features)]
    if trace.bias_per_epoch is not None:
        columns.append("w_0")
    return columns + ["mse_train", "mse_test"]


def _cell(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


def trace_rows(trace: TrainTrace) -> List[List[str]]:
    rows = []
    for e in range(trace.epochs):
        row = [str(e + 1)] + [_cell(w) for w in trace.weights_per_epoch[e]]
        if trace.bias_per_epoch is not None:
            row.append(_cell(trace.bias_per_epoch[e]))
        row.append(_cell(trace.mse_train[e]))
        row.append(_cell(trace.mse_test[e] if trace.mse_test else None))
        rows.append(row)
    return rows


def write_trace_csv(trace: TrainTrace, path: PathLike) -> Path:
    """Header plus one row per epoch; values keep full precision."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(trace_header(trace))
    writer.writerows(trace_rows(trace))
    return write_text_atomic(path, buffer.getvalue())


def read_trace_csv(path: PathLike) -> pd.DataFrame:
    return pd.read_csv(path)


def write_trace_json(trace: TrainTrace, path: PathLike) -> Path:
    doc = {"format_version": TRACE_FORMAT_VERSION, **trace.model_dump(mode="json")}
    return write_json_atomic(path, doc)


def read_trace_json(path: PathLike) -> TrainTrace:
    """Load a trace written by write_trace_json.

    Raises:
        InvalidInputError: On an unknown format_version or malformed content
    """
    try:
        doc = read_json(path)
    except (OSError, ValueError) as e:
        raise InvalidInputError(f"cannot read trace {path}: {e}") from e
    if not isinstance(doc, dict):
        raise InvalidInputError(f"{path} does not hold a trace document")
    version = doc.pop("format_version", None)
    if version != TRACE_FORMAT_VERSION:
        raise InvalidInputError(f"{path}: unsupported trace format_version {version}")
    try:
        return TrainTrace.model_validate(doc)
    except ValidationError as e:
        raise InvalidInputError(f"{path}: invalid trace: {e}") from e


def write_report(model: BaseModel, path: PathLike, **extra: Any) -> Path:
    doc = {"format_version": TRACE_FORMAT_VERSION, **extra}
    doc.update(model.model_dump(mode="json", by_alias=True))
    return write_json_atomic(path, doc)


def gnuplot_columns(trace: TrainTrace) -> str:
    """Whitespace-separated columns with a commented header, one line per epoch."""
    lines = ["# " + " ".join(trace_header(trace))]
    for row in trace_rows(trace):
        lines.append(" ".join(value if value else "NaN" for value in row))
    return "\n".join(lines) + "\n"


def write_gnuplot(trace: TrainTrace, path: PathLike) -> Path:
    return write_text_atomic(path, gnuplot_columns(trace))


def write_snapshot(
    config: ExperimentConfig, path: PathLike, derived: Optional[Dict[str, Any]] = None
) -> Path:
    """Resolved configuration plus derived circuit values; load_config accepts it."""
    doc = {
        "snapshot_format_version": SNAPSHOT_FORMAT_VERSION,
        "derived": derived or {},
        "config": config.model_dump(mode="json", by_alias=True),
    }
    return write_json_atomic(path, doc)


def load_config(path: PathLike) -> ExperimentConfig:
    """Parse a YAML/JSON experiment document or a run snapshot.

    Raises:
        ConfigError: If the file is missing, unparsable or invalid
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse config {path}: {e}") from e
    return parse_config(doc, str(path))


def parse_config(doc: Any, source: str = "<config>") -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError(f"{source}: expected a mapping at the top level")
    if "snapshot_format_version" in doc:
        if doc["snapshot_format_version"] != SNAPSHOT_FORMAT_VERSION:
            raise ConfigError(
                f"{source}: unsupported snapshot_format_version "
                f"{doc['snapshot_format_version']}"
            )
        doc = doc.get("config") or {}
    try:
        return ExperimentConfig.model_validate(doc)
    except ValidationError as e:
        raise ConfigError(f"{source}: {e}") from e
