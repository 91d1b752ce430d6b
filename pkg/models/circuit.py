"""Physical parameters and state of the current-mode weight-learning node."""

import math
from typing import Annotated, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# Nominal operating point of the learning cell
NOMINAL_CAPACITANCE = 39e-9
NOMINAL_NVT = 25.6e-3
NOMINAL_IU = 10e-9
NOMINAL_U = 10e-9
NOMINAL_IQ = 100e-9

# Window in which the weak-inversion behavioral model is trusted
SUBTHRESHOLD_MIN = 10e-12
SUBTHRESHOLD_MAX = 1e-6


class CircuitParams(BaseModel):
    """Physical constants of the learning cell and its translinear loop."""

    model_config = ConfigDict(frozen=True)

    C: Annotated[float, Field(gt=0, description="Cell capacitance in farads")] = (
        NOMINAL_CAPACITANCE
    )
    nVT: Annotated[
        float,
        Field(gt=0, description="Subthreshold slope times thermal voltage in volts"),
    ] = NOMINAL_NVT
    Iu: Annotated[float, Field(gt=0, description="Normalizing current in amperes")] = (
        NOMINAL_IU
    )
    u: Annotated[float, Field(gt=0, description="Unit constant current in amperes")] = (
        NOMINAL_U
    )
    Iq: Annotated[float, Field(gt=0, description="Reference current in amperes")] = (
        NOMINAL_IQ
    )
    stack_left: Annotated[
        List[float],
        Field(description="Left-side currents I_l of the extended translinear loop"),
    ] = []
    stack_right: Annotated[
        List[float],
        Field(description="Right-side currents I_r of the extended translinear loop"),
    ] = []

    @field_validator("stack_left", "stack_right")
    @classmethod
    def validate_stack(cls, v: List[float]) -> List[float]:
        if any(not (i > 0) or not math.isfinite(i) for i in v):
            raise ValueError("stack currents must be strictly positive")
        return v

    @model_validator(mode="after")
    def validate_stack_lengths(self) -> "CircuitParams":
        if len(self.stack_left) != len(self.stack_right):
            raise ValueError("stack_left and stack_right must have equal length")
        return self

    @property
    def stack_gain(self) -> float:
        """Product ratio prod(I_l) / prod(I_r); 1 for the base loop."""
        return math.prod(self.stack_left) / math.prod(self.stack_right)

    @property
    def stack_depth(self) -> int:
        return len(self.stack_left)

    @property
    def decay_rate(self) -> float:
        """u / (nVT * C) in 1/s."""
        return self.u / (self.nVT * self.C)

    @property
    def drive_rate(self) -> float:
        """Gain of the cell input term, stack_gain * Iq / (nVT * C), in 1/s."""
        return self.stack_gain * self.Iq / (self.nVT * self.C)


class CircuitBounds(BaseModel):
    """Admissible ranges used when solving for circuit parameters."""

    model_config = ConfigDict(frozen=True)

    capacitance_min: Annotated[
        float, Field(gt=0, description="Smallest capacitance in farads")
    ] = NOMINAL_CAPACITANCE
    capacitance_max: Annotated[
        float, Field(gt=0, description="Largest capacitance in farads")
    ] = NOMINAL_CAPACITANCE
    current_min: Annotated[
        float, Field(gt=0, description="Lower edge of the weak-inversion window")
    ] = SUBTHRESHOLD_MIN
    current_max: Annotated[
        float, Field(gt=0, description="Upper edge of the weak-inversion window")
    ] = SUBTHRESHOLD_MAX
    delta_s_min: Annotated[
        float, Field(gt=0, description="Shortest hold time in seconds")
    ] = 1e-9
    delta_s_max: Annotated[
        float, Field(gt=0, description="Longest hold time in seconds")
    ] = 1.0
    max_stack_depth: Annotated[
        int, Field(ge=0, description="Largest number of stacked transistor pairs")
    ] = 4
    stack_ratio: Annotated[
        float,
        Field(gt=1, description="Current ratio between the two sides of a stacked pair"),
    ] = 10.0
    nominal: Annotated[
        CircuitParams,
        Field(description="Values held fixed while solving (nVT, Iu, u)"),
    ] = CircuitParams()

    @model_validator(mode="after")
    def validate_ranges(self) -> "CircuitBounds":
        if self.capacitance_min > self.capacitance_max:
            raise ValueError("capacitance_min must not exceed capacitance_max")
        if self.current_min >= self.current_max:
            raise ValueError("current_min must be below current_max")
        if self.delta_s_min > self.delta_s_max:
            raise ValueError("delta_s_min must not exceed delta_s_max")
        return self


class MappedHyperparams(BaseModel):
    """Hyperparameters realized by a circuit parameter set."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    alpha: float
    lambda_: Annotated[float, Field(alias="lambda")]


class CircuitSolution(BaseModel):
    """Circuit parameters and hold time reaching a target (alpha, lambda)."""

    model_config = ConfigDict(frozen=True)

    params: CircuitParams
    delta_s: Annotated[float, Field(gt=0, description="Hold time in seconds")]
    stack_depth: Annotated[
        int,
        Field(
            description="Signed stack depth; positive lowers lambda, negative raises it"
        ),
    ] = 0


class BiasState(BaseModel):
    """Differential currents of the lossless bias integrator."""

    model_config = ConfigDict(frozen=True)

    plus: Annotated[float, Field(gt=0, description="I_b+ in amperes")]
    minus: Annotated[float, Field(gt=0, description="I_b- in amperes")]


class WeightNodeState(BaseModel):
    """Cell currents of one weight-learning node."""

    model_config = ConfigDict(frozen=True)

    Iw_plus: Annotated[float, Field(description="Positive cell current in amperes")]
    Iw_minus: Annotated[float, Field(description="Negative cell current in amperes")]
    bias_state: Optional[BiasState] = None
    t: Annotated[float, Field(description="Simulation time in seconds")] = 0.0

    @model_validator(mode="after")
    def validate_positive(self) -> "WeightNodeState":
        if not (self.Iw_plus > 0 and self.Iw_minus > 0):
            raise ValueError("cell currents must stay strictly positive")
        return self

    def weight(self, Iu: float) -> float:
        return (self.Iw_plus - self.Iw_minus) / Iu
