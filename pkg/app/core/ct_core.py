"""Continuous-time SGDr (SGDr-CT) and its differential split.

The weights obey

    dw/dt = -(alpha/delta_s) * (lambda*w + delta(t)*x(t)),  delta = w.x (+w0) - y

with x(t), y(t) the rendered step signals. Over the flat part of a hold the
coefficients are constant, so each interval is solved in closed form; the
short ramps are integrated with RK4.
"""

import logging
import math
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy.linalg import expm

from abstracts.exception import (
    DivergenceError,
    InvalidInputError,
    OutOfRangeError,
)
from abstracts.tier import TierSimulator
from app.core.ideal import DEFAULT_DIVERGENCE_GUARD
from app.core.integrators import rk4
from app.core.recorder import TraceRecorder
from app.core.signals import DEFAULT_RISE_FRACTION, StepSignal, sample_epochs
from models.ct import CTState, DifferentialValue
from models.dataset import Dataset
from models.hyperparams import Hyperparams, LinearModel
from models.trace import RunStatus, Tier, TrainTrace

logger = logging.getLogger(__name__)

DEFAULT_RAMP_SUBSTEPS = 16

# Relative slack when a requested time sits on a hold boundary
_BOUNDARY_TOL = 1e-9

Number = Union[float, np.ndarray]


def split_differential(delta: Number, geometric_mean: float) -> Tuple[Number, Number]:
    """Split a bidirectional value into two positive parts.

    Returns (plus, minus) with plus - minus = delta and plus * minus =
    geometric_mean**2. The smaller branch is computed from the product so no
    cancellation occurs for large |delta|.
    """
    if not (geometric_mean > 0):
        raise InvalidInputError("geometric mean must be positive")
    d = np.asarray(delta, dtype=float)
    root = np.sqrt(d * d + 4.0 * geometric_mean * geometric_mean)
    big = (np.abs(d) + root) / 2.0
    small = geometric_mean * geometric_mean / big
    plus = np.where(d >= 0, big, small)
    minus = np.where(d >= 0, small, big)
    if plus.ndim == 0:
        return float(plus), float(minus)
    return plus, minus


def _packed_rhs(
    z: np.ndarray, x: np.ndarray, y: float, lam: float, k: float, with_bias: bool
) -> np.ndarray:
    d = x.shape[0]
    w = z[:d]
    delta = float(w @ x) - y
    if with_bias:
        delta += z[d]
        return np.append(-k * (lam * w + delta * x), -k * delta)
    return -k * (lam * w + delta * x)


def _latched_rhs(
    z: np.ndarray, x: np.ndarray, delta: float, lam: float, k: float, with_bias: bool
) -> np.ndarray:
    d = x.shape[0]
    dw = -k * (lam * z[:d] + delta * x)
    if with_bias:
        return np.append(dw, -k * delta)
    return dw


def _prediction_error(z: np.ndarray, x: np.ndarray, y: float, with_bias: bool) -> float:
    d = x.shape[0]
    delta = float(z[:d] @ x) - y
    if with_bias:
        delta += z[d]
    return delta


def ct_rhs(state: CTState, x: Number, y: float, hp: Hyperparams) -> np.ndarray:
    """Time derivative of the SGDr-CT state for inputs (x, y) at time t.

    Returns dw/dt, followed by dw0/dt when the state carries a bias.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape[0] != state.w.shape[0]:
        raise InvalidInputError(
            f"{x.shape[0]} inputs for {state.w.shape[0]} weights"
        )
    return _packed_rhs(
        state.packed(), x, float(y), hp.lambda_, hp.rate, state.has_bias
    )


def _exact_packed(
    z: np.ndarray,
    x: np.ndarray,
    y: float,
    dt: float,
    lam: float,
    k: float,
    with_bias: bool,
) -> np.ndarray:
    if with_bias:
        # lambda does not act on the bias, so the system matrix is no longer
        # isotropic plus rank one; use the augmented matrix exponential
        n = x.shape[0] + 1
        xt = np.append(x, 1.0)
        diag = np.full(n, lam)
        diag[-1] = 0.0
        M = np.zeros((n + 1, n + 1))
        M[:n, :n] = -k * (np.diag(diag) + np.outer(xt, xt))
        M[:n, n] = k * y * xt
        return (expm(M * dt) @ np.append(z, 1.0))[:n]
    xx = float(x @ x)
    s = lam + xx
    if s == 0.0:
        return z.copy()
    w_star = x * (y / s)
    e = z - w_star
    if xx == 0.0:
        return w_star + e * math.exp(-k * lam * dt)
    along = x * (float(x @ e) / xx)
    across = e - along
    return w_star + along * math.exp(-k * s * dt) + across * math.exp(-k * lam * dt)


def _exact_latched(
    z: np.ndarray,
    x: np.ndarray,
    delta: float,
    dt: float,
    lam: float,
    k: float,
    with_bias: bool,
) -> np.ndarray:
    d = x.shape[0]
    w = z[:d]
    if lam > 0:
        decay = math.exp(-k * lam * dt)
        w_new = w * decay - delta * x * (1.0 - decay) / lam
    else:
        w_new = w - k * delta * x * dt
    if with_bias:
        return np.append(w_new, z[d] - k * delta * dt)
    return w_new


def integrate_interval_exact(
    state: CTState, x_n: Number, y_n: float, dt: float, hp: Hyperparams
) -> CTState:
    """Exact solution over dt with constant inputs (the flat part of a hold).

    dt = 0 returns the state unchanged.

    Raises:
        InvalidInputError: If dt is negative or the input size is wrong
    """
    if dt < 0 or not math.isfinite(dt):
        raise InvalidInputError(f"dt must be non-negative, got {dt}")
    x = np.atleast_1d(np.asarray(x_n, dtype=float))
    if x.shape[0] != state.w.shape[0]:
        raise InvalidInputError(
            f"{x.shape[0]} inputs for {state.w.shape[0]} weights"
        )
    if dt == 0:
        return state
    z = _exact_packed(
        state.packed(), x, float(y_n), dt, hp.lambda_, hp.rate, state.has_bias
    )
    return CTState.from_packed(z, state.has_bias, state.t + dt)


class TrainingSignals:
    """Feature and target waveforms of a training run.

    Held as one multi-channel StepSignal whose last column is the target, so
    every channel shares ramp timing.
    """

    def __init__(self, bank: StepSignal, features: int):
        if bank.samples.ndim != 2 or bank.samples.shape[1] != features + 1:
            raise InvalidInputError("signal bank must have features + 1 channels")
        self.bank = bank
        self.features = features

    @classmethod
    def from_arrays(
        cls,
        X: np.ndarray,
        y: np.ndarray,
        delta_s: float,
        rise_fraction: float = DEFAULT_RISE_FRACTION,
    ) -> "TrainingSignals":
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        samples = np.column_stack([X, np.asarray(y, dtype=float)])
        return cls(StepSignal(samples, delta_s, rise_fraction), X.shape[1])

    @classmethod
    def from_dataset(
        cls,
        dataset: Dataset,
        delta_s: float,
        epochs: int,
        rise_fraction: float = DEFAULT_RISE_FRACTION,
    ) -> "TrainingSignals":
        """Training split repeated once per epoch, in the dataset's fixed order."""
        X, y = dataset.split("train")
        return cls.from_arrays(
            np.tile(X, (epochs, 1)), np.tile(y, epochs), delta_s, rise_fraction
        )

    @property
    def delta_s(self) -> float:
        return self.bank.delta_s

    @property
    def horizon(self) -> float:
        return self.bank.horizon

    @property
    def intervals(self) -> int:
        return self.bank.intervals

    def level(self, n: int) -> Tuple[np.ndarray, float]:
        row = self.bank.level(n)
        return row[:-1], float(row[-1])

    def eval(self, t: float) -> Tuple[np.ndarray, float]:
        row = self.bank.eval(t)
        return row[:-1], float(row[-1])


def rk4_oracle(
    state: CTState,
    signals: TrainingSignals,
    t0: float,
    t1: float,
    substeps: int,
    hp: Hyperparams,
) -> CTState:
    """Classical RK4 of the SGDr-CT system over [t0, t1], evaluating the
    rendered signals (ramps included) at every stage.

    Raises:
        DivergenceError: If the state becomes non-finite
    """
    lam, k, with_bias = hp.lambda_, hp.rate, state.has_bias

    def f(t: float, z: np.ndarray) -> np.ndarray:
        x, y = signals.eval(t)
        return _packed_rhs(z, x, y, lam, k, with_bias)

    z = rk4(f, state.packed(), t0, t1, substeps)
    return CTState.from_packed(z, with_bias, t1)


def split_learning_equations(
    delta: DifferentialValue,
    x: float,
    hp: Hyperparams,
    w: DifferentialValue,
) -> Tuple[float, float]:
    """Derivatives of the positive and negative learning equations.

        dw+/dt = -(alpha/delta_s)*lambda*w+ + (alpha/delta_s)*delta-*x
        dw-/dt = -(alpha/delta_s)*lambda*w- + (alpha/delta_s)*delta+*x

    Raises:
        InvalidInputError: If x is negative (inputs are unidirectional)
    """
    if x < 0:
        raise InvalidInputError(f"learning-cell input must be non-negative, got {x}")
    k = hp.rate
    d_plus = -k * hp.lambda_ * w.plus + k * delta.minus * x
    d_minus = -k * hp.lambda_ * w.minus + k * delta.plus * x
    return d_plus, d_minus


class Trajectory:
    """Continuous SGDr-CT solution, callable at any t in [0, horizon].

    States are kept at every hold boundary; in-between times are reached by
    integrating forward from the preceding boundary.
    """

    def __init__(
        self,
        solver: "CTSolver",
        signals: TrainingSignals,
        hp: Hyperparams,
        boundary_states: np.ndarray,
        with_bias: bool,
    ):
        self.solver = solver
        self.signals = signals
        self.hp = hp
        self.boundary_states = boundary_states
        self.with_bias = with_bias

    @property
    def horizon(self) -> float:
        return (len(self.boundary_states) - 1) * self.signals.delta_s

    def state_at(self, t: float) -> CTState:
        return CTState.from_packed(self(t), self.with_bias, t)

    def __call__(self, t: float) -> np.ndarray:
        ds = self.signals.delta_s
        last = len(self.boundary_states) - 1
        if t < 0 or t > self.horizon * (1 + _BOUNDARY_TOL):
            raise OutOfRangeError(
                f"t={t} outside the simulated horizon [0, {self.horizon}]"
            )
        n = int(round(t / ds))
        if abs(t - n * ds) <= _BOUNDARY_TOL * ds and n <= last:
            return self.boundary_states[n].copy()
        n = min(int(t // ds), last - 1)
        return self.solver.advance_interval(
            self.boundary_states[n], n, self.signals, self.hp, self.with_bias, t - n * ds
        )


class CTSolver(TierSimulator):
    """Exact-per-interval solver of the SGDr-CT equation (the ct tier)."""

    def __init__(
        self,
        rise_fraction: float = DEFAULT_RISE_FRACTION,
        ramp_substeps: int = DEFAULT_RAMP_SUBSTEPS,
        latch_delta: bool = False,
        train_bias: bool = False,
        divergence_guard: float = DEFAULT_DIVERGENCE_GUARD,
    ):
        if ramp_substeps < 1:
            raise InvalidInputError("ramp_substeps must be at least 1")
        self.rise_fraction = rise_fraction
        self.ramp_substeps = ramp_substeps
        self.latch_delta = latch_delta
        self.train_bias = train_bias
        self.divergence_guard = divergence_guard

    @property
    def tier(self) -> Tier:
        return Tier.CT

    def advance_interval(
        self,
        z: np.ndarray,
        n: int,
        signals: TrainingSignals,
        hp: Hyperparams,
        with_bias: bool,
        until: Optional[float] = None,
    ) -> np.ndarray:
        """Advance the packed state through hold n, or `until` seconds into it."""
        ds = signals.delta_s
        span = ds if until is None else min(max(until, 0.0), ds)
        lam, k = hp.lambda_, hp.rate
        x_n, y_n = signals.level(n)
        delta_latched = (
            _prediction_error(z, x_n, y_n, with_bias) if self.latch_delta else None
        )
        elapsed = 0.0
        if signals.bank.has_ramp(n):
            rise = signals.bank.rise_time
            ramp_end = min(rise, span)
            x_p, y_p = signals.level(n - 1)
            dx, dy = x_n - x_p, y_n - y_p

            def f(tau: float, zz: np.ndarray) -> np.ndarray:
                s = tau / rise
                if delta_latched is not None:
                    return _latched_rhs(zz, x_p + dx * s, delta_latched, lam, k, with_bias)
                return _packed_rhs(zz, x_p + dx * s, y_p + dy * s, lam, k, with_bias)

            steps = max(1, int(math.ceil(self.ramp_substeps * ramp_end / rise)))
            z = rk4(f, z, 0.0, ramp_end, steps)
            elapsed = ramp_end
        flat = span - elapsed
        if flat > 0:
            if delta_latched is not None:
                z = _exact_latched(z, x_n, delta_latched, flat, lam, k, with_bias)
            else:
                z = _exact_packed(z, x_n, y_n, flat, lam, k, with_bias)
        return z

    def simulate(
        self,
        signals: TrainingSignals,
        hp: Hyperparams,
        state0: CTState,
        on_boundary: Optional[Callable[[int, np.ndarray], None]] = None,
    ) -> Trajectory:
        """Integrate across every hold of the signals.

        on_boundary(n, z) is called with the state at the end of hold n; an
        exception raised there stops the run, leaving the trajectory truncated
        in the exception's `trajectory` attribute.
        """
        if state0.w.shape[0] != signals.features:
            raise InvalidInputError(
                f"{signals.features} signal features for {state0.w.shape[0]} weights"
            )
        with_bias = state0.has_bias
        N = signals.intervals
        states = np.empty((N + 1, state0.packed().shape[0]))
        states[0] = state0.packed()
        z = states[0]
        for n in range(N):
            z = self.advance_interval(z, n, signals, hp, with_bias)
            states[n + 1] = z
            if on_boundary is not None:
                try:
                    on_boundary(n, z)
                except Exception as e:
                    e.trajectory = Trajectory(
                        self, signals, hp, states[: n + 2].copy(), with_bias
                    )
                    raise
        return Trajectory(self, signals, hp, states, with_bias)

    def train(
        self,
        dataset: Dataset,
        hp: Hyperparams,
        model0: Optional[LinearModel] = None,
    ) -> TrainTrace:
        with_bias = self.train_bias or (model0 is not None and model0.bias is not None)
        if model0 is None:
            model0 = LinearModel.zeros(dataset.features, with_bias=with_bias)
        if model0.features != dataset.features:
            raise InvalidInputError(
                f"model has {model0.features} weights, dataset has {dataset.features} features"
            )
        state0 = CTState(
            w=model0.as_array(), bias=(model0.bias or 0.0) if with_bias else None
        )
        m = len(dataset.train_idx)
        signals = TrainingSignals.from_dataset(
            dataset, hp.delta_s, hp.epochs, self.rise_fraction
        )
        recorder = TraceRecorder(
            Tier.CT, dataset, hp, with_bias, self.divergence_guard
        )
        d = dataset.features

        def on_boundary(n: int, z: np.ndarray) -> None:
            if (n + 1) % m == 0:
                recorder.check(z[:d], z[d] if with_bias else None, (n + 1) // m)

        logger.info(
            f"ct training on {dataset.name}: {hp.epochs} epochs, "
            f"{signals.intervals} holds, latch_delta={self.latch_delta}"
        )
        try:
            trajectory = self.simulate(signals, hp, state0, on_boundary)
            epochs = hp.epochs
        except DivergenceError as e:
            trajectory = getattr(e, "trajectory", None)
            if trajectory is not None and e.epoch:
                for z in self._sample(trajectory, m, hp.delta_s, e.epoch - 1):
                    recorder.record(z[:d], z[d] if with_bias else None)
            e.tier = e.tier or Tier.CT.value
            e.trace = recorder.build(RunStatus.DIVERGED, e.message)
            logger.error(e.message)
            raise
        for z in self._sample(trajectory, m, hp.delta_s, epochs):
            recorder.record(z[:d], z[d] if with_bias else None)
        return recorder.build()

    @staticmethod
    def _sample(trajectory: Trajectory, m: int, delta_s: float, epochs: int) -> list:
        if epochs < 1:
            return []
        return sample_epochs(trajectory, m, delta_s, epochs)
