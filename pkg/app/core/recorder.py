"""Epoch-boundary bookkeeping shared by every tier."""

import logging
import time
from typing import List, Optional

import numpy as np

from abstracts.exception import DivergenceError
from models.circuit import CircuitParams
from models.dataset import Dataset
from models.hyperparams import Hyperparams
from models.trace import RunStatus, Tier, TrainTrace

logger = logging.getLogger(__name__)


def split_mse(X: np.ndarray, y: np.ndarray, w: np.ndarray, bias: Optional[float]) -> float:
    residual = X @ w - y
    if bias is not None:
        residual = residual + bias
    return float(np.mean(residual * residual))


class TraceRecorder:
    """Collects weights and losses at epoch boundaries and builds the TrainTrace."""

    def __init__(
        self,
        tier: Tier,
        dataset: Dataset,
        hp: Hyperparams,
        with_bias: bool,
        divergence_guard: float,
        circuit: Optional[CircuitParams] = None,
        circuit_delta_s: Optional[float] = None,
    ):
        self.tier = tier
        self.dataset = dataset
        self.hp = hp
        self.with_bias = with_bias
        self.divergence_guard = divergence_guard
        self.circuit = circuit
        self.circuit_delta_s = circuit_delta_s
        self.monitor_excursions = 0
        self._X_train, self._y_train = dataset.split("train")
        self._X_test, self._y_test = dataset.split("test")
        self._has_test = len(dataset.test_idx) > 0
        self._weights: List[List[float]] = []
        self._bias: List[float] = []
        self._mse_train: List[float] = []
        self._mse_test: List[float] = []
        self._started = time.perf_counter()

    @property
    def epochs_recorded(self) -> int:
        return len(self._weights)

    def check(self, w: np.ndarray, bias: Optional[float], epoch: int) -> None:
        """Raise DivergenceError once any parameter leaves the guard."""
        peak = float(np.max(np.abs(w))) if w.size else 0.0
        if bias is not None:
            peak = max(peak, abs(bias))
        if not np.isfinite(peak) or peak > self.divergence_guard:
            raise DivergenceError(
                f"{self.tier.value} tier diverged in epoch {epoch}: "
                f"|w| = {peak:.3g} exceeds guard {self.divergence_guard:.3g}",
                epoch=epoch,
                tier=self.tier.value,
            )

    def record(self, w: np.ndarray, bias: Optional[float]) -> None:
        epoch = self.epochs_recorded + 1
        self.check(w, bias, epoch)
        w = np.asarray(w, dtype=float)
        self._weights.append([float(v) for v in w])
        if self.with_bias:
            self._bias.append(float(bias))
        self._mse_train.append(split_mse(self._X_train, self._y_train, w, bias))
        if self._has_test:
            self._mse_test.append(split_mse(self._X_test, self._y_test, w, bias))
        logger.debug(
            f"{self.tier.value} epoch {epoch}: mse_train={self._mse_train[-1]:.6g}",
            extra={"tier": self.tier.value, "epoch": epoch},
        )

    def build(
        self, status: RunStatus = RunStatus.COMPLETED, failure: Optional[str] = None
    ) -> TrainTrace:
        return TrainTrace(
            tier=self.tier,
            epochs=self.epochs_recorded,
            weights_per_epoch=self._weights,
            bias_per_epoch=self._bias if self.with_bias else None,
            mse_train=self._mse_train,
            mse_test=self._mse_test if self._has_test else None,
            hyperparams=self.hp,
            circuit=self.circuit,
            circuit_delta_s=self.circuit_delta_s,
            dataset=self.dataset.name,
            wall_time=time.perf_counter() - self._started,
            status=status,
            failure=failure,
            monitor_excursions=self.monitor_excursions,
        )
