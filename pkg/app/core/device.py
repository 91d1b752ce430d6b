"""Device-level Bernoulli-cell simulation of a learning cell.

A capacitor C is charged by the drain current of a weak-inversion transistor
and discharged by a constant current u:

    V_G = nVT*ln(Idelta/I_S) + nVT*ln(Ix/I_S)
    I_D = I_D0*exp((V_G - V_C)/nVT)
    C*dV_C/dt = I_D - u

With T = 1/I_D the cell becomes linear, nVT*C*dT/dt + u*T = 1, and the
translinear read-out Iw = gain*Ix*Idelta*Iq*T/Iu reproduces the behavioral
cell equation. The state is integrated in V_C with fixed-step RK4.
"""

import logging
import math
from typing import Optional, Tuple, Union

import numpy as np

from abstracts.exception import DivergenceError, InvalidInputError
from abstracts.tier import TierSimulator
from app.core.circuit import (
    DEFAULT_INITIAL_CELL_RATIO,
    SubthresholdMonitor,
    steer_inputs,
)
from app.core.ct_core import TrainingSignals, split_differential
from app.core.ideal import DEFAULT_DIVERGENCE_GUARD
from app.core.integrators import rk4
from app.core.recorder import TraceRecorder
from app.core.signals import DEFAULT_RISE_FRACTION
from models.circuit import CircuitParams
from models.dataset import Dataset
from models.device import BernoulliCellState, DeviceParams
from models.hyperparams import Hyperparams, LinearModel
from models.trace import RunStatus, Tier, TrainTrace

logger = logging.getLogger(__name__)

DEFAULT_DEVICE_SUBSTEPS = 256

Current = Union[float, np.ndarray]


def _require_positive(*currents: Current) -> None:
    for value in currents:
        if not np.all(np.asarray(value) > 0):
            raise InvalidInputError("device inputs must be strictly positive currents")


def gate_voltage(Idelta_opp: Current, Ix: Current, dp: DeviceParams) -> Current:
    nVT = dp.circuit.nVT
    return nVT * np.log(Idelta_opp / dp.I_S) + nVT * np.log(Ix / dp.I_S)


def drain_current(V_G: Current, V_C: Current, dp: DeviceParams) -> Current:
    return dp.I_D0 * np.exp((V_G - V_C) / dp.circuit.nVT)


def device_rhs(
    state: BernoulliCellState, Idelta_opp: float, Ix: float, dp: DeviceParams
) -> float:
    """dV_C/dt for the given input currents.

    Raises:
        InvalidInputError: If an input current is not strictly positive
    """
    _require_positive(Idelta_opp, Ix)
    V_G = gate_voltage(Idelta_opp, Ix, dp)
    I_D = drain_current(V_G, state.V_C, dp)
    return float((I_D - dp.circuit.u) / dp.circuit.C)


def translinear_output(
    state: BernoulliCellState, Idelta_opp: float, Ix: float, cp: CircuitParams
) -> float:
    """Cell current Iw = gain*Ix*Idelta*Iq/(I_D*Iu) closed by the translinear loop."""
    _require_positive(Idelta_opp, Ix)
    return cp.stack_gain * Ix * Idelta_opp * cp.Iq / (state.I_D * cp.Iu)


def cell_current(V_C: Current, dp: DeviceParams) -> Current:
    """Cell current as a function of V_C alone.

    Substituting V_G into the read-out cancels the inputs:
    Iw = gain*Iq*I_S**2*exp(V_C/nVT)/(I_D0*Iu).
    """
    cp = dp.circuit
    scale = cp.stack_gain * cp.Iq * dp.I_S**2 / (dp.I_D0 * cp.Iu)
    return scale * np.exp(V_C / cp.nVT)


def capacitor_voltage_for(Iw: Current, dp: DeviceParams) -> Current:
    """V_C at which the cell carries Iw (inverse of cell_current)."""
    cp = dp.circuit
    scale = cp.stack_gain * cp.Iq * dp.I_S**2 / (dp.I_D0 * cp.Iu)
    return cp.nVT * np.log(np.asarray(Iw) / scale)


def initial_state(
    Iw0: float, Idelta_opp: float, Ix: float, dp: DeviceParams, t: float = 0.0
) -> BernoulliCellState:
    """Cell state whose read-out equals Iw0 under the given inputs."""
    _require_positive(Iw0, Idelta_opp, Ix)
    return BernoulliCellState(
        V_C=float(capacitor_voltage_for(Iw0, dp)),
        V_G=float(gate_voltage(Idelta_opp, Ix, dp)),
        t=t,
        I_D0=dp.I_D0,
        nVT=dp.circuit.nVT,
    )


def simulate_cells(
    V_C0: np.ndarray,
    Idelta_opp: np.ndarray,
    Ix: np.ndarray,
    duration: float,
    step: float,
    dp: DeviceParams,
    samples: int = 1,
) -> Tuple[np.ndarray, np.ndarray]:
    """Integrate independent cells with constant inputs.

    Returns (times, V_C) with V_C of shape (samples + 1, cells), sampled at
    equal spacing over [0, duration].
    """
    if not (step > 0) or not (duration > 0) or samples < 1:
        raise InvalidInputError("duration, step and samples must be positive")
    Idelta_opp = np.asarray(Idelta_opp, dtype=float)
    Ix = np.asarray(Ix, dtype=float)
    _require_positive(Idelta_opp, Ix)
    V_G = gate_voltage(Idelta_opp, Ix, dp)
    C, u = dp.circuit.C, dp.circuit.u

    def f(t: float, V_C: np.ndarray) -> np.ndarray:
        return (drain_current(V_G, V_C, dp) - u) / C

    span = duration / samples
    per_sample = max(1, int(math.ceil(span / step)))
    times = np.linspace(0.0, duration, samples + 1)
    out = np.empty((samples + 1, np.size(V_C0)))
    out[0] = V_C0
    for s in range(samples):
        out[s + 1] = rk4(f, out[s], times[s], times[s + 1], per_sample)
    return times, out


def bernoulli_residual(
    I_D: Current, dI_D_dt: Current, dp: DeviceParams
) -> Current:
    """Normalized residual of nVT*C*dI_D/dt = u*I_D - I_D**2 (constant V_G)."""
    cp = dp.circuit
    raw = cp.nVT * cp.C * dI_D_dt - cp.u * I_D + I_D * I_D
    return raw / (I_D * (cp.u + I_D))


def reciprocal_residual(T: Current, dT_dt: Current, dp: DeviceParams) -> Current:
    """Normalized residual of nVT*C*dT/dt + u*T - 1 = 0."""
    cp = dp.circuit
    return (cp.nVT * cp.C * dT_dt + cp.u * T - 1.0) / (1.0 + cp.u * T)


def omega_residual(
    omega: Current, domega_dt: Current, Idelta_opp: Current, Iz: Current, dp: DeviceParams
) -> Current:
    """Normalized residual of nVT*C*domega/dt + u*omega - Idelta*Iz = 0."""
    cp = dp.circuit
    drive = Idelta_opp * Iz
    return (cp.nVT * cp.C * domega_dt + cp.u * omega - drive) / (drive + cp.u * omega)


def drain_current_rate(I_D: Current, dp: DeviceParams) -> Current:
    """dI_D/dt with constant gate voltage, by the chain rule through V_C."""
    cp = dp.circuit
    return -I_D / cp.nVT * (I_D - cp.u) / cp.C


class DeviceSimulator(TierSimulator):
    """Single-weight learning node with both cells simulated at device level."""

    def __init__(
        self,
        dp: Optional[DeviceParams] = None,
        rise_fraction: float = DEFAULT_RISE_FRACTION,
        substeps: int = DEFAULT_DEVICE_SUBSTEPS,
        latch_delta: bool = False,
        gms_current_ratio: float = 1.0,
        initial_cell_ratio: float = DEFAULT_INITIAL_CELL_RATIO,
        divergence_guard: float = DEFAULT_DIVERGENCE_GUARD,
        monitor: Optional[SubthresholdMonitor] = None,
    ):
        if substeps < 1:
            raise InvalidInputError("substeps must be at least 1")
        self.dp = dp or DeviceParams()
        self.rise_fraction = rise_fraction
        self.substeps = substeps
        self.latch_delta = latch_delta
        self.I_gm = gms_current_ratio * self.dp.circuit.Iu
        self.initial_cell_ratio = initial_cell_ratio
        self.divergence_guard = divergence_guard
        self.monitor = monitor or SubthresholdMonitor()

    @property
    def tier(self) -> Tier:
        return Tier.DEVICE

    def weight(self, V_C: np.ndarray) -> float:
        Iw = cell_current(V_C, self.dp)
        return float((Iw[0] - Iw[1]) / self.dp.circuit.Iu)

    def _rhs(self, V_C: np.ndarray, x: float, delta: float) -> np.ndarray:
        cp = self.dp.circuit
        d_plus, d_minus = split_differential(delta * cp.Iu, self.I_gm)
        Ix, opp_plus, opp_minus = steer_inputs(
            x, d_plus, d_minus, cp.Iu, self.monitor.current_min
        )
        V_G = gate_voltage(np.array([opp_plus, opp_minus]), Ix, self.dp)
        return (drain_current(V_G, V_C, self.dp) - cp.u) / cp.C

    def advance_hold(self, V_C: np.ndarray, n: int, signals: TrainingSignals) -> np.ndarray:
        ds = signals.delta_s
        t0 = n * ds
        latched = None
        if self.latch_delta:
            x_n, y_n = signals.level(n)
            latched = self.weight(V_C) * float(x_n[0]) - y_n

        def f(t: float, z: np.ndarray) -> np.ndarray:
            x, y = signals.eval(t)
            x = float(x[0])
            delta = latched if latched is not None else self.weight(z) * x - y
            return self._rhs(z, x, delta)

        return rk4(f, V_C, t0, t0 + ds, self.substeps)

    def train(
        self,
        dataset: Dataset,
        hp: Hyperparams,
        model0: Optional[LinearModel] = None,
    ) -> TrainTrace:
        if dataset.features != 1:
            raise InvalidInputError("the device tier simulates single-feature datasets only")
        if model0 is not None and model0.bias is not None:
            raise InvalidInputError("the device tier does not model the bias integrator")
        cp = self.dp.circuit
        w0 = model0.weights[0] if model0 is not None else 0.0
        base = self.initial_cell_ratio * cp.Iu
        Iw0 = np.array([base + max(w0, 0.0) * cp.Iu, base + max(-w0, 0.0) * cp.Iu])
        V_C = capacitor_voltage_for(Iw0, self.dp)

        m = len(dataset.train_idx)
        signals = TrainingSignals.from_dataset(
            dataset, hp.delta_s, hp.epochs, self.rise_fraction
        )
        recorder = TraceRecorder(
            Tier.DEVICE,
            dataset,
            hp,
            False,
            self.divergence_guard,
            circuit=cp,
            circuit_delta_s=hp.delta_s,
        )
        self.monitor.reset()
        logger.info(
            f"device training on {dataset.name}: {hp.epochs} epochs, "
            f"{self.substeps} RK4 steps per hold"
        )
        try:
            for n in range(signals.intervals):
                V_C = self.advance_hold(V_C, n, signals)
                t = (n + 1) * hp.delta_s
                currents = cell_current(V_C, self.dp)
                if not np.all(np.isfinite(currents)):
                    raise DivergenceError(
                        f"device tier cell currents became non-finite at t={t:.6g} s",
                        epoch=recorder.epochs_recorded + 1,
                        tier=Tier.DEVICE.value,
                    )
                self.monitor.check("Iw", currents, t)
                if (n + 1) % m == 0:
                    recorder.monitor_excursions = self.monitor.excursions
                    recorder.record(np.array([self.weight(V_C)]), None)
        except DivergenceError as e:
            recorder.monitor_excursions = self.monitor.excursions
            e.trace = recorder.build(RunStatus.DIVERGED, e.message)
            logger.error(e.message)
            raise
        recorder.monitor_excursions = self.monitor.excursions
        return recorder.build()
