"""Discrete-time SGD with L2 regularization, the reference every tier is judged against."""

import logging
from typing import Optional, Union

import numpy as np

from abstracts.exception import (
    DivergenceError,
    InvalidInputError,
    NumericalOverflowError,
)
from abstracts.tier import TierSimulator
from app.core.recorder import TraceRecorder, split_mse
from models.dataset import Dataset
from models.hyperparams import Hyperparams, LinearModel
from models.trace import RunStatus, Tier, TrainTrace

logger = logging.getLogger(__name__)

DEFAULT_DIVERGENCE_GUARD = 1e6

Number = Union[float, np.ndarray]


def sgdr_step(w: Number, x: Number, delta: float, hp: Hyperparams) -> Number:
    """One SGDr update w - alpha*delta*x - alpha*lambda*w.

    Works elementwise when w and x are feature vectors sharing one error.

    Raises:
        NumericalOverflowError: If the result is not finite
    """
    result = w - hp.alpha * delta * x - hp.alpha * hp.lambda_ * w
    if not np.all(np.isfinite(result)):
        raise NumericalOverflowError(
            f"sgdr_step produced a non-finite weight (w={w}, x={x}, delta={delta})"
        )
    return result


def bias_step(w0: float, delta: float, hp: Hyperparams) -> float:
    """Bias update w0 - alpha*delta; the bias is not regularized."""
    result = w0 - hp.alpha * delta
    if not np.isfinite(result):
        raise NumericalOverflowError("bias update produced a non-finite value")
    return result


def mse(model: LinearModel, dataset: Dataset, split: str = "train") -> float:
    """Mean squared residual of the model over one split.

    Raises:
        InvalidInputError: On an empty split or a feature-count mismatch
    """
    X, y = dataset.split(split)
    if len(y) == 0:
        raise InvalidInputError(f"{split} split of {dataset.name} is empty")
    if X.shape[1] != model.features:
        raise InvalidInputError(
            f"model has {model.features} weights, dataset has {X.shape[1]} features"
        )
    return split_mse(X, y, model.as_array(), model.bias)


def train(
    dataset: Dataset,
    hp: Hyperparams,
    model0: Optional[LinearModel] = None,
    train_bias: bool = False,
    divergence_guard: float = DEFAULT_DIVERGENCE_GUARD,
) -> TrainTrace:
    """Per-sample SGDr over the training split in its fixed order.

    delta[n] is the prediction error (w.x[n] + w0) - y[n], computed before the
    update and shared by every feature.

    Raises:
        InvalidInputError: If model0 does not match the dataset
        DivergenceError: If any |w| exceeds divergence_guard
    """
    if model0 is None:
        model0 = LinearModel.zeros(dataset.features, with_bias=train_bias)
    if model0.features != dataset.features:
        raise InvalidInputError(
            f"model has {model0.features} weights, dataset has {dataset.features} features"
        )
    with_bias = train_bias or model0.bias is not None
    X, y = dataset.split("train")
    w = model0.as_array().copy()
    w0 = float(model0.bias or 0.0) if with_bias else None

    recorder = TraceRecorder(Tier.IDEAL, dataset, hp, with_bias, divergence_guard)
    logger.info(
        f"ideal training on {dataset.name}: {hp.epochs} epochs, "
        f"alpha={hp.alpha:g}, lambda={hp.lambda_:g}"
    )
    try:
        for epoch in range(1, hp.epochs + 1):
            for x_n, y_n in zip(X, y):
                delta = float(x_n @ w - y_n)
                if w0 is not None:
                    delta += w0
                    w0 = bias_step(w0, delta, hp)
                w = sgdr_step(w, x_n, delta, hp)
            recorder.record(w, w0)
    except DivergenceError as e:
        e.trace = recorder.build(RunStatus.DIVERGED, e.message)
        logger.error(e.message)
        raise
    except NumericalOverflowError as e:
        error = DivergenceError(
            f"ideal tier overflowed in epoch {recorder.epochs_recorded + 1}: {e.message}",
            epoch=recorder.epochs_recorded + 1,
            tier=Tier.IDEAL.value,
        )
        error.trace = recorder.build(RunStatus.DIVERGED, error.message)
        logger.error(error.message)
        raise error from e
    return recorder.build()


class IdealTrainer(TierSimulator):
    """TierSimulator wrapper around train()."""

    def __init__(
        self,
        train_bias: bool = False,
        divergence_guard: float = DEFAULT_DIVERGENCE_GUARD,
    ):
        self.train_bias = train_bias
        self.divergence_guard = divergence_guard

    @property
    def tier(self) -> Tier:
        return Tier.IDEAL

    def train(
        self,
        dataset: Dataset,
        hp: Hyperparams,
        model0: Optional[LinearModel] = None,
    ) -> TrainTrace:
        return train(
            dataset,
            hp,
            model0,
            train_bias=self.train_bias,
            divergence_guard=self.divergence_guard,
        )
