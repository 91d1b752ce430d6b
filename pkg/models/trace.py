"""Per-epoch training records and tier-to-tier comparisons."""

from enum import Enum
from typing import Annotated, Dict, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from models.circuit import CircuitParams
from models.hyperparams import Hyperparams

TRACE_FORMAT_VERSION = 1


class Tier(str, Enum):
    """Fidelity level solving the learning problem."""

    IDEAL = "ideal"
    CT = "ct"
    CIRCUIT = "circuit"
    DEVICE = "device"


class RunStatus(str, Enum):
    COMPLETED = "completed"
    DIVERGED = "diverged"
    FAILED = "failed"


class TrainTrace(BaseModel):
    """Weights and losses sampled at every epoch boundary of one tier."""

    model_config = ConfigDict(frozen=True)

    tier: Tier
    epochs: Annotated[int, Field(ge=0, description="Number of recorded epochs")]
    weights_per_epoch: Annotated[
        List[List[float]], Field(description="Row e holds the weights after epoch e+1")
    ]
    bias_per_epoch: Optional[List[float]] = None
    mse_train: List[float]
    mse_test: Optional[List[float]] = None
    hyperparams: Hyperparams
    circuit: Optional[CircuitParams] = None
    circuit_delta_s: Annotated[
        Optional[float], Field(description="Hold time used by the physical tiers")
    ] = None
    dataset: Optional[str] = None
    wall_time: Annotated[float, Field(ge=0, description="Seconds spent")] = 0.0
    status: RunStatus = RunStatus.COMPLETED
    failure: Optional[str] = None
    monitor_excursions: Annotated[
        int, Field(ge=0, description="Currents seen outside the weak-inversion window")
    ] = 0

    @model_validator(mode="after")
    def validate_lengths(self) -> "TrainTrace":
        if len(self.weights_per_epoch) != self.epochs:
            raise ValueError("weights_per_epoch must have one row per epoch")
        if len(self.mse_train) != self.epochs:
            raise ValueError("mse_train must have one value per epoch")
        if self.mse_test is not None and len(self.mse_test) != self.epochs:
            raise ValueError("mse_test must have one value per epoch")
        if self.bias_per_epoch is not None and len(self.bias_per_epoch) != self.epochs:
            raise ValueError("bias_per_epoch must have one value per epoch")
        return self

    @property
    def features(self) -> int:
        return len(self.weights_per_epoch[0]) if self.weights_per_epoch else 0

    def parameters(self) -> np.ndarray:
        """epochs x (d [+1]) matrix of weights, bias appended when trained."""
        w = np.asarray(self.weights_per_epoch, dtype=float).reshape(self.epochs, -1)
        if self.bias_per_epoch is None:
            return w
        return np.column_stack([w, np.asarray(self.bias_per_epoch, dtype=float)])

    def final_parameters(self) -> np.ndarray:
        return self.parameters()[-1]


class ComparisonReport(BaseModel):
    """Agreement between a reference tier and a candidate tier."""

    model_config = ConfigDict(frozen=True)

    reference: Tier
    candidate: Tier
    full_scale: float = 2.0
    weight_abs_diff: Annotated[
        List[float], Field(description="|candidate - reference| per final parameter")
    ]
    weight_rel_percent: Annotated[
        List[Optional[float]],
        Field(description="100 * |diff| / |reference|, null when reference is 0"),
    ]
    weight_abs_percent: Annotated[
        List[float], Field(description="100 * |diff|, percent of unit scale")
    ]
    max_abs_error: float
    max_abs_percent: float
    max_rel_percent: Optional[float] = None
    bits: Annotated[
        Union[int, Literal["exact"]],
        Field(description="Resolution of max_abs_error against full_scale"),
    ]
    mse_train_abs_diff: float
    mse_train_rel_percent: Optional[float] = None
    mse_test_abs_diff: Optional[float] = None
    mse_test_rel_percent: Optional[float] = None
    curve_max_weight_diff: Annotated[
        float, Field(description="Largest |diff| over all epochs and parameters")
    ]
    curve_max_mse_diff: float
    curve_rms_weight_diff: float

    @property
    def is_exact(self) -> bool:
        return self.bits == "exact"


class RunResult(BaseModel):
    """Every tier trace of one dataset plus their comparisons."""

    model_config = ConfigDict(frozen=True)

    dataset: str
    traces: Dict[Tier, TrainTrace]
    reports: Dict[Tier, ComparisonReport] = {}
    failures: List[str] = []

    @property
    def ok(self) -> bool:
        return not self.failures


class ExperimentResult(BaseModel):
    """Outcome of one experiment over all of its datasets."""

    model_config = ConfigDict(frozen=True)

    name: str
    runs: List[RunResult]
    circuit: Optional[CircuitParams] = None
    circuit_delta_s: Optional[float] = None
    stack_depth: Optional[int] = None
    output_dir: Optional[str] = None

    @property
    def ok(self) -> bool:
        return all(run.ok for run in self.runs)

    @property
    def failures(self) -> List[str]:
        return [f"{run.dataset}: {f}" for run in self.runs for f in run.failures]


class SweepCell(BaseModel):
    """One (alpha, lambda) point of a sweep."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    alpha: float
    lambda_: Annotated[float, Field(alias="lambda")]
    delta_s: Optional[float] = None
    stack_depth: Optional[int] = None
    result: Optional[ExperimentResult] = None
    failure: Optional[str] = None
    max_rel_percent: Annotated[
        Optional[float],
        Field(description="Largest final-weight relative error over datasets and tiers"),
    ] = None
    max_abs_error: Optional[float] = None

    @property
    def converged(self) -> bool:
        return self.failure is None and self.result is not None and self.result.ok


class SweepReport(BaseModel):
    """Every cell of an (alpha, lambda) grid, alpha-major."""

    model_config = ConfigDict(frozen=True)

    name: str
    alphas: List[float]
    lambdas: List[float]
    cells: List[SweepCell]

    @property
    def ok(self) -> bool:
        return all(cell.converged for cell in self.cells)

    def cell(self, alpha: float, lambda_: float) -> SweepCell:
        for c in self.cells:
            if c.alpha == alpha and c.lambda_ == lambda_:
                return c
        raise KeyError((alpha, lambda_))
