"""Fixed-step classical Runge-Kutta integration."""

from typing import Callable

import numpy as np

from abstracts.exception import DivergenceError, InvalidInputError

Rhs = Callable[[float, np.ndarray], np.ndarray]


def rk4(f: Rhs, z0: np.ndarray, t0: float, t1: float, substeps: int) -> np.ndarray:
    """Classical 4th order Runge-Kutta from t0 to t1 in `substeps` equal steps.

    Args:
        f: Right-hand side f(t, z)
        z0: State at t0
        t0: Start of the window
        t1: End of the window, not before t0
        substeps: Number of equal steps

    Returns:
        State at t1

    Raises:
        InvalidInputError: On a reversed window or fewer than one step
        DivergenceError: If the state leaves the finite range
    """
    if substeps < 1:
        raise InvalidInputError("substeps must be at least 1")
    if t1 < t0:
        raise InvalidInputError("t1 must not precede t0")
    z = np.array(z0, dtype=float)
    if t1 == t0:
        return z
    h = (t1 - t0) / substeps
    for j in range(substeps):
        t = t0 + j * h
        k1 = f(t, z)
        k2 = f(t + h / 2, z + (h / 2) * k1)
        k3 = f(t + h / 2, z + (h / 2) * k2)
        k4 = f(t + h, z + h * k3)
        z = z + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    if not np.all(np.isfinite(z)):
        raise DivergenceError(f"RK4 state became non-finite before t={t1}")
    return z
