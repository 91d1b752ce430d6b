"""Device constants and state of the capacitor-transistor Bernoulli cell."""

import math
from typing import Annotated

from pydantic import BaseModel, ConfigDict, Field

from models.circuit import CircuitParams


class DeviceParams(BaseModel):
    """Subthreshold device constants plus the circuit they sit in.

    I_D0 and I_S are placeholders: the cell output does not depend on them
    once the initial drain current is fixed.
    """

    model_config = ConfigDict(frozen=True)

    I_D0: Annotated[
        float, Field(gt=0, description="Technology current of the cell transistor")
    ] = 1e-9
    I_S: Annotated[
        float, Field(gt=0, description="Specific current of the gate-drive devices")
    ] = 1e-9
    circuit: CircuitParams = CircuitParams()


class BernoulliCellState(BaseModel):
    """Capacitor and gate voltage of a Bernoulli cell at time t."""

    model_config = ConfigDict(frozen=True)

    V_C: Annotated[float, Field(description="Capacitor voltage in volts")]
    V_G: Annotated[float, Field(description="Gate voltage in volts")]
    t: float = 0.0
    I_D0: Annotated[float, Field(gt=0)] = 1e-9
    nVT: Annotated[float, Field(gt=0)] = 25.6e-3

    @property
    def I_D(self) -> float:
        """Drain current from the exponential weak-inversion law."""
        return self.I_D0 * math.exp((self.V_G - self.V_C) / self.nVT)

    @property
    def T(self) -> float:
        """Reciprocal drain current, the variable linearizing the cell."""
        return 1.0 / self.I_D
