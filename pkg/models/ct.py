"""State types of the continuous-time learning equations."""

from typing import Annotated, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


class DifferentialValue(BaseModel):
    """A bidirectional value carried as the difference of two positive signals."""

    model_config = ConfigDict(frozen=True)

    plus: Annotated[float, Field(ge=0, description="Positive branch")]
    minus: Annotated[float, Field(ge=0, description="Negative branch")]

    def value(self) -> float:
        return self.plus - self.minus


class CTState(BaseModel):
    """Weights (and optional bias) of the SGDr-CT system at time t."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    w: Annotated[np.ndarray, Field(description="Bidirectional weights")]
    bias: Optional[float] = None
    t: Annotated[float, Field(description="Time in seconds")] = 0.0

    @field_validator("w", mode="before")
    @classmethod
    def validate_w(cls, v) -> np.ndarray:
        arr = np.array(v, dtype=float).reshape(-1)
        if not np.all(np.isfinite(arr)):
            raise ValueError("weights must be finite")
        arr.setflags(write=False)
        return arr

    @classmethod
    def zeros(cls, features: int, with_bias: bool = False) -> "CTState":
        return cls(w=np.zeros(features), bias=0.0 if with_bias else None)

    @classmethod
    def from_packed(cls, z: np.ndarray, with_bias: bool, t: float) -> "CTState":
        if with_bias:
            return cls(w=z[:-1], bias=float(z[-1]), t=t)
        return cls(w=z, t=t)

    @property
    def has_bias(self) -> bool:
        return self.bias is not None

    def packed(self) -> np.ndarray:
        """Weights followed by the bias when present."""
        if self.bias is None:
            return np.array(self.w, dtype=float)
        return np.append(self.w, self.bias)
