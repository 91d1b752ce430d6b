"""Tier-to-tier comparison metrics."""

import math
from typing import Optional

import numpy as np

from abstracts.exception import InvalidInputError
from models.trace import ComparisonReport, TrainTrace

FULL_SCALE = 2.0


def bits_of_precision(max_error: float, full_scale: float = FULL_SCALE) -> int:
    """floor(-log2(max_error / full_scale)).

    A zero error has no finite resolution; callers report it as "exact".

    Raises:
        InvalidInputError: If max_error is not in (0, full_scale]
    """
    if not (max_error > 0):
        raise InvalidInputError(f"max_error must be positive, got {max_error}")
    if max_error > full_scale:
        raise InvalidInputError(
            f"max_error {max_error} exceeds the full-scale range {full_scale}"
        )
    return int(math.floor(-math.log2(max_error / full_scale)))


def _relative_percent(diff: float, reference: float) -> Optional[float]:
    if reference == 0:
        return None
    return 100.0 * diff / abs(reference)


def compare(
    reference: TrainTrace, candidate: TrainTrace, full_scale: float = FULL_SCALE
) -> ComparisonReport:
    """Agreement of candidate with reference at the final epoch and along the curves.

    Raises:
        InvalidInputError: If either trace is empty or the parameter sets differ
    """
    if reference.epochs == 0 or candidate.epochs == 0:
        raise InvalidInputError("cannot compare an empty trace")
    ref = reference.parameters()
    cand = candidate.parameters()
    if ref.shape[1] != cand.shape[1]:
        raise InvalidInputError(
            f"traces carry {ref.shape[1]} and {cand.shape[1]} parameters"
        )

    abs_diff = np.abs(cand[-1] - ref[-1])
    rel = [_relative_percent(float(d), float(r)) for d, r in zip(abs_diff, ref[-1])]
    known_rel = [v for v in rel if v is not None]
    max_abs_error = float(abs_diff.max())
    if max_abs_error == 0:
        bits = "exact"
    else:
        bits = bits_of_precision(min(max_abs_error, full_scale), full_scale)

    mse_train_diff = abs(candidate.mse_train[-1] - reference.mse_train[-1])
    mse_test_diff = mse_test_rel = None
    if reference.mse_test and candidate.mse_test:
        mse_test_diff = abs(candidate.mse_test[-1] - reference.mse_test[-1])
        mse_test_rel = _relative_percent(mse_test_diff, reference.mse_test[-1])

    n = min(reference.epochs, candidate.epochs)
    curve = cand[:n] - ref[:n]
    mse_curve = np.abs(
        np.asarray(candidate.mse_train[:n]) - np.asarray(reference.mse_train[:n])
    )
    return ComparisonReport(
        reference=reference.tier,
        candidate=candidate.tier,
        full_scale=full_scale,
        weight_abs_diff=abs_diff.tolist(),
        weight_rel_percent=rel,
        weight_abs_percent=(100.0 * abs_diff).tolist(),
        max_abs_error=max_abs_error,
        max_abs_percent=100.0 * max_abs_error,
        max_rel_percent=max(known_rel) if known_rel else None,
        bits=bits,
        mse_train_abs_diff=mse_train_diff,
        mse_train_rel_percent=_relative_percent(mse_train_diff, reference.mse_train[-1]),
        mse_test_abs_diff=mse_test_diff,
        mse_test_rel_percent=mse_test_rel,
        curve_max_weight_diff=float(np.abs(curve).max()),
        curve_max_mse_diff=float(mse_curve.max()),
        curve_rms_weight_diff=float(np.sqrt(np.mean(curve * curve))),
    )
