"""Step-signal rendering and epoch sampling.

A discrete sample sequence is presented to the continuous-time system as a
staircase: sample n is held over [n*delta_s, (n+1)*delta_s). Real DACs do not
switch instantly, so the first `rise_fraction` of every interval (except the
first one) is a linear ramp from the previous level.
"""

import logging
import math
from typing import Callable, Sequence, Union

import numpy as np

from abstracts.exception import InvalidInputError, OutOfRangeError

logger = logging.getLogger(__name__)

DEFAULT_RISE_FRACTION = 0.005

# Relative slack when matching a time to an interval boundary
_BOUNDARY_TOL = 1e-9

Level = Union[float, np.ndarray]


class StepSignal:
    """Piecewise-linear hold waveform of a sample sequence.

    `samples` is either a sequence of reals or an N x c array; in the second
    case every channel is rendered with the same timing and eval returns a
    length-c vector. Instances are read-only.
    """

    def __init__(
        self,
        samples: Union[Sequence[float], np.ndarray],
        delta_s: float,
        rise_fraction: float = DEFAULT_RISE_FRACTION,
    ):
        arr = np.array(samples, dtype=float)
        if arr.ndim == 0 or arr.shape[0] == 0:
            raise InvalidInputError("sample sequence must not be empty")
        if arr.ndim > 2:
            raise InvalidInputError("samples must be a sequence or an N x c array")
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("samples must be finite")
        if not (delta_s > 0) or not math.isfinite(delta_s):
            raise InvalidInputError("delta_s must be positive")
        if not (0 <= rise_fraction < 1):
            raise InvalidInputError("rise_fraction must be in [0, 1)")
        arr.setflags(write=False)
        self._samples = arr
        self._delta_s = float(delta_s)
        self._rise_fraction = float(rise_fraction)

    @property
    def samples(self) -> np.ndarray:
        return self._samples

    @property
    def delta_s(self) -> float:
        return self._delta_s

    @property
    def rise_fraction(self) -> float:
        return self._rise_fraction

    @property
    def rise_time(self) -> float:
        return self._rise_fraction * self._delta_s

    @property
    def intervals(self) -> int:
        return self._samples.shape[0]

    @property
    def horizon(self) -> float:
        return self.intervals * self._delta_s

    def level(self, n: int) -> Level:
        """Held value of interval n."""
        return self._samples[n]

    def has_ramp(self, n: int) -> bool:
        """Whether interval n starts with a non-degenerate ramp."""
        if n == 0 or self._rise_fraction == 0:
            return False
        return not np.array_equal(self._samples[n - 1], self._samples[n])

    def interval_of(self, t: float) -> int:
        if t < 0 or t > self.horizon * (1 + _BOUNDARY_TOL):
            raise OutOfRangeError(
                f"t={t} outside the rendered horizon [0, {self.horizon}]"
            )
        n = int(t // self._delta_s)
        return min(n, self.intervals - 1)

    def eval(self, t: float) -> Level:
        n = self.interval_of(t)
        tau = t - n * self._delta_s
        rise = self.rise_time
        if n > 0 and tau < rise:
            prev = self._samples[n - 1]
            cur = self._samples[n]
            return prev + (cur - prev) * (tau / rise)
        return self._samples[n]

    __call__ = eval

    def total_variation(self) -> float:
        return float(np.abs(np.diff(self._samples, axis=0)).sum())


def render(
    samples: Union[Sequence[float], np.ndarray],
    delta_s: float,
    rise_fraction: float = DEFAULT_RISE_FRACTION,
) -> StepSignal:
    """Render samples as a hold waveform with linear ramps of rise_fraction * delta_s."""
    return StepSignal(samples, delta_s, rise_fraction)


def sample_epochs(
    trajectory: Callable[[float], Level],
    m: int,
    delta_s: float,
    epochs: int,
) -> list:
    """Point-evaluate a trajectory at every epoch boundary e * m * delta_s, e = 1..epochs.

    Raises:
        OutOfRangeError: If a boundary lies beyond the trajectory's horizon
    """
    if epochs < 1 or m < 1:
        raise InvalidInputError("epochs and m must be at least 1")
    if not (delta_s > 0):
        raise InvalidInputError("delta_s must be positive")
    horizon = getattr(trajectory, "horizon", None)
    values = []
    for e in range(1, epochs + 1):
        t = (e * m) * delta_s
        if horizon is not None and t > horizon * (1 + _BOUNDARY_TOL):
            raise OutOfRangeError(
                f"epoch {e} boundary t={t} beyond simulated horizon {horizon}"
            )
        values.append(trajectory(t))
    return values
