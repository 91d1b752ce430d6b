"""Algorithm-level learning knobs and the linear model they train."""

import math
from typing import Annotated, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


class Hyperparams(BaseModel):
    """Hyperparameters shared by every fidelity tier."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    alpha: Annotated[
        float,
        Field(gt=0, description="Learning rate (dimensionless)", examples=[1e-3]),
    ]
    lambda_: Annotated[
        float,
        Field(
            ge=0,
            alias="lambda",
            description="L2 regularization coefficient (dimensionless)",
            examples=[0.1],
        ),
    ]
    delta_s: Annotated[
        float,
        Field(gt=0, description="Hold time of each sample in seconds"),
    ] = 1e-5
    epochs: Annotated[
        int,
        Field(ge=1, description="Number of passes over the training split"),
    ] = 200
    seed: Annotated[int, Field(description="Seed recorded with the run")] = 0

    @property
    def rate(self) -> float:
        """Continuous-time gain alpha / delta_s in 1/s."""
        return self.alpha / self.delta_s

    def with_updates(self, **changes) -> "Hyperparams":
        data = self.model_dump()
        data.update(changes)
        return Hyperparams.model_validate(data)


class LinearModel(BaseModel):
    """Weights (one per feature) plus an optional bias."""

    model_config = ConfigDict(frozen=True)

    weights: Annotated[List[float], Field(min_length=1, description="Feature weights")]
    bias: Annotated[
        Optional[float],
        Field(description="Bias term, present only when bias training is enabled"),
    ] = None

    @field_validator("weights")
    @classmethod
    def validate_weights(cls, v: List[float]) -> List[float]:
        if not all(math.isfinite(w) for w in v):
            raise ValueError("weights must be finite")
        return v

    @classmethod
    def zeros(cls, features: int, with_bias: bool = False) -> "LinearModel":
        return cls(weights=[0.0] * features, bias=0.0 if with_bias else None)

    @property
    def features(self) -> int:
        return len(self.weights)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)

    def predict(self, X: np.ndarray) -> np.ndarray:
        out = np.asarray(X, dtype=float) @ self.as_array()
        if self.bias is not None:
            out = out + self.bias
        return out
