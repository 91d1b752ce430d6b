"""Dataset generation, ingestion and preprocessing."""

import logging
import math
import os
from typing import List, Optional

import numpy as np
import pandas as pd
from pydantic import ValidationError

from abstracts.exception import DatasetFormatError, DatasetIOError, InvalidInputError
from models.dataset import Dataset, NormalizationConstants
from models.experiment import DatasetKind, DatasetSpec
from utils.files import PathLike, read_json, sha256_file, write_json_atomic
from utils.random import generator_tag, make_generator

logger = logging.getLogger(__name__)

BOSTON_COLUMNS = 14
BOSTON_ROWS = 506
FEATURE_MEAN = 0.8
DEFAULT_TRAIN_FRACTION = 0.8


def gen_univariate(
    seed: int,
    m: int = 50,
    noise_scale: float = 0.1,
    true_weight: Optional[float] = None,
) -> Dataset:
    """Univariate set y = w*x + noise_scale*N(0, 1) with x ~ U(-1, 1).

    The generating weight is drawn first from U(-1, 1); a fixed true_weight
    replaces it without changing the remaining draws. Every row is a
    training row.
    """
    if m < 1:
        raise InvalidInputError("m must be at least 1")
    rng = make_generator(seed)
    drawn = float(rng.uniform(-1.0, 1.0))
    w = drawn if true_weight is None else float(true_weight)
    x = rng.uniform(-1.0, 1.0, size=m)
    noise = rng.standard_normal(size=m)
    y = w * x + noise_scale * noise
    return Dataset(
        name=f"univariate-s{seed}",
        X=x.reshape(-1, 1),
        y=y,
        train_idx=np.arange(m),
        test_idx=np.array([], dtype=np.int64),
        seed=seed,
        generator=generator_tag(),
        true_weight=w,
    )


def split_indices(m: int, seed: int, train_fraction: float = DEFAULT_TRAIN_FRACTION):
    """Seeded permutation cut at floor(train_fraction*m); both parts keep the permuted order."""
    if not (0 < train_fraction <= 1):
        raise InvalidInputError("train_fraction must be in (0, 1]")
    perm = make_generator(seed).permutation(m)
    n_train = max(1, int(math.floor(train_fraction * m + 1e-9)))
    return perm[:n_train], perm[n_train:]


def normalize_features(X_raw: np.ndarray, y_raw: np.ndarray) -> NormalizationConstants:
    """Max-abs scaling followed by per-feature offsets moving every mean to 0.8."""
    scale = np.max(np.abs(X_raw), axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    offset = FEATURE_MEAN - np.mean(X_raw / scale, axis=0)
    target_scale = float(np.max(np.abs(y_raw)))
    if target_scale == 0:
        target_scale = 1.0
    return NormalizationConstants(
        feature_scale=scale.tolist(),
        feature_offset=offset.tolist(),
        target_scale=target_scale,
    )


def _read_table(path: PathLike, has_header: bool) -> pd.DataFrame:
    header = 0 if has_header else None
    frame = pd.read_csv(path, header=header)
    if frame.shape[1] == 1:
        # whitespace-separated distribution of the same table
        frame = pd.read_csv(path, header=header, sep=r"\s+")
    return frame


def load_boston(
    path: PathLike,
    has_header: bool = False,
    sha256: Optional[str] = None,
    split_seed: int = 0,
    train_fraction: float = DEFAULT_TRAIN_FRACTION,
    expected_rows: Optional[int] = BOSTON_ROWS,
) -> Dataset:
    """Load the housing table: 13 feature columns followed by the target.

    Statistics are taken over all rows before the split.

    Raises:
        DatasetIOError: If the file is missing or unreadable
        DatasetFormatError: On a checksum, shape or value mismatch
    """
    if not os.path.isfile(path):
        raise DatasetIOError(f"housing data not found at {path}")
    if sha256:
        actual = sha256_file(path)
        if actual.lower() != sha256.lower():
            raise DatasetFormatError(
                f"checksum mismatch for {path}: expected {sha256}, got {actual}"
            )
    try:
        frame = _read_table(path, has_header)
    except OSError as e:
        raise DatasetIOError(f"cannot read {path}: {e}") from e
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DatasetFormatError(f"cannot parse {path}: {e}") from e
    if frame.shape[1] != BOSTON_COLUMNS:
        raise DatasetFormatError(
            f"{path} has {frame.shape[1]} columns, expected {BOSTON_COLUMNS}"
        )
    if expected_rows is not None and frame.shape[0] != expected_rows:
        raise DatasetFormatError(
            f"{path} has {frame.shape[0]} rows, expected {expected_rows}"
        )
    values = frame.apply(pd.to_numeric, errors="coerce").to_numpy(dtype=float)
    if np.isnan(values).any():
        raise DatasetFormatError(f"{path} contains missing or non-numeric values")

    X_raw, y_raw = values[:, :-1], values[:, -1]
    constants = normalize_features(X_raw, y_raw)
    train_idx, test_idx = split_indices(len(y_raw), split_seed, train_fraction)
    logger.info(
        f"loaded {path}: {len(y_raw)} rows, {len(train_idx)} train / {len(test_idx)} test"
    )
    return Dataset(
        name="boston",
        X=constants.apply(X_raw),
        y=constants.apply_target(y_raw),
        train_idx=train_idx,
        test_idx=test_idx,
        seed=split_seed,
        generator=generator_tag(),
        normalization=constants,
    )


def export_dataset(dataset: Dataset, path: PathLike) -> None:
    write_json_atomic(path, dataset.to_document())


def import_dataset(path: PathLike) -> Dataset:
    """Read a dataset written by export_dataset.

    Raises:
        DatasetIOError: If the file cannot be read
        DatasetFormatError: If the document is not a valid dataset
    """
    try:
        doc = read_json(path)
    except FileNotFoundError as e:
        raise DatasetIOError(f"dataset file not found: {path}") from e
    except OSError as e:
        raise DatasetIOError(f"cannot read {path}: {e}") from e
    except ValueError as e:
        raise DatasetFormatError(f"{path} is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise DatasetFormatError(f"{path} does not hold a dataset document")
    try:
        return Dataset.from_document(doc)
    except (ValidationError, ValueError) as e:
        raise DatasetFormatError(f"invalid dataset document {path}: {e}") from e


def build_datasets(spec: DatasetSpec) -> List[Dataset]:
    """Every dataset named by an experiment's dataset block."""
    if spec.kind == DatasetKind.UNIVARIATE:
        return [
            gen_univariate(seed, spec.samples, spec.noise_scale, spec.true_weight)
            for seed in spec.seeds
        ]
    if spec.kind == DatasetKind.BOSTON:
        if not spec.path:
            raise DatasetIOError("no housing table given; set dataset.path or BOSTON_CSV")
        return [
            load_boston(
                spec.path,
                has_header=spec.has_header,
                sha256=spec.sha256,
                split_seed=spec.split_seed,
                train_fraction=spec.train_fraction,
            )
        ]
    return [import_dataset(spec.path)]
