"""Behavioral current-mode model of the weight-learning node.

A weight is stored as the difference of two capacitor-backed cell currents,
w = (Iw+ - Iw-)/Iu. Each cell obeys

    dIw/dt = -(u/(nVT*C))*Iw + gain*(Iq/(nVT*C))*Idelta_opp*Ix/Iu

which is linear in Iw for fixed inputs, so cells are advanced with the
closed-form exponential relaxation toward their steady state.
"""

import logging
import math
import time
from typing import Dict, Optional, Tuple, Union

import numpy as np

from abstracts.exception import (
    DivergenceError,
    InfeasibleMappingError,
    InvalidInputError,
    SubthresholdViolationError,
)
from abstracts.tier import TierSimulator
from app.core.ct_core import TrainingSignals, split_differential
from app.core.ideal import DEFAULT_DIVERGENCE_GUARD
from app.core.recorder import TraceRecorder
from app.core.signals import DEFAULT_RISE_FRACTION
from models.circuit import (
    SUBTHRESHOLD_MAX,
    SUBTHRESHOLD_MIN,
    BiasState,
    CircuitBounds,
    CircuitParams,
    CircuitSolution,
    MappedHyperparams,
    WeightNodeState,
)
from models.ct import DifferentialValue
from models.dataset import Dataset
from models.hyperparams import Hyperparams, LinearModel
from models.trace import RunStatus, Tier, TrainTrace

logger = logging.getLogger(__name__)

DEFAULT_INITIAL_CELL_RATIO = 0.01

Current = Union[float, np.ndarray]


def map_hyperparams(hp: Hyperparams, cp: CircuitParams) -> MappedHyperparams:
    """(alpha, lambda) realized by cp when samples are held for hp.delta_s.

    alpha = gain * Iq/(nVT*C) * delta_s and lambda = u/(gain*Iq), with
    gain = prod(I_l)/prod(I_r) (1 without stacks).
    """
    gain = cp.stack_gain
    alpha = gain * cp.Iq / (cp.nVT * cp.C) * hp.delta_s
    lambda_ = cp.u / (gain * cp.Iq)
    return MappedHyperparams(alpha=alpha, lambda_=lambda_)


def _stack_currents(depth: int, Iu: float, ratio: float) -> Tuple[list, list]:
    if depth > 0:
        return [ratio * Iu] * depth, [Iu] * depth
    if depth < 0:
        return [Iu] * -depth, [ratio * Iu] * -depth
    return [], []


def _suggest_depth(lambda_: float, u: float, bounds: CircuitBounds) -> int:
    Iq = u / lambda_
    step = math.log10(bounds.stack_ratio)
    if Iq > bounds.current_max:
        return math.ceil(math.log10(Iq / bounds.current_max) / step - 1e-12)
    return -math.ceil(math.log10(bounds.current_min / Iq) / step - 1e-12)


def solve_circuit_params(
    alpha: float, lambda_: float, bounds: Optional[CircuitBounds] = None
) -> CircuitSolution:
    """Pick circuit parameters and a hold time realizing (alpha, lambda).

    nVT, Iu and u stay at bounds.nominal. The shallowest stack keeping Iq
    inside the current window is chosen (positive depth: I_l = ratio*I_r per
    pair, lowering lambda; negative depth raises it), then the smallest
    capacitance whose hold time is admissible.

    Raises:
        InvalidInputError: If a target is not positive
        InfeasibleMappingError: If no parameter set within bounds exists
    """
    if not (alpha > 0) or not (lambda_ > 0):
        raise InvalidInputError("alpha and lambda must be positive")
    bounds = bounds or CircuitBounds()
    nominal = bounds.nominal
    ratio = bounds.stack_ratio

    depth = None
    for k in range(bounds.max_stack_depth + 1):
        for signed in ((k,) if k == 0 else (k, -k)):
            Iq = nominal.u / (lambda_ * ratio**signed)
            if bounds.current_min <= Iq <= bounds.current_max:
                depth = signed
                break
        if depth is not None:
            break
    if depth is None:
        suggestion = _suggest_depth(lambda_, nominal.u, bounds)
        message = (
            f"lambda={lambda_:g} needs Iq={nominal.u / lambda_:.3g} A outside "
            f"[{bounds.current_min:.3g}, {bounds.current_max:.3g}] A; "
            f"a stack of depth {suggestion} would reach it"
        )
        logger.error(message)
        raise InfeasibleMappingError(message, suggested_stack_depth=suggestion)

    gain = ratio**depth
    Iq = nominal.u / (lambda_ * gain)
    C = bounds.capacitance_min
    delta_s = alpha * nominal.nVT * C / (gain * Iq)
    if delta_s < bounds.delta_s_min:
        C = bounds.delta_s_min * gain * Iq / (alpha * nominal.nVT)
        if C > bounds.capacitance_max:
            message = (
                f"alpha={alpha:g} needs delta_s below {bounds.delta_s_min:g} s "
                f"even at C={bounds.capacitance_max:g} F"
            )
            logger.error(message)
            raise InfeasibleMappingError(message, suggested_stack_depth=depth)
        delta_s = alpha * nominal.nVT * C / (gain * Iq)
    if delta_s > bounds.delta_s_max:
        message = (
            f"alpha={alpha:g} needs delta_s={delta_s:.3g} s above "
            f"{bounds.delta_s_max:g} s at the smallest capacitance"
        )
        logger.error(message)
        raise InfeasibleMappingError(message, suggested_stack_depth=depth)

    left, right = _stack_currents(depth, nominal.Iu, ratio)
    params = nominal.model_copy(
        update={"C": C, "Iq": Iq, "stack_left": left, "stack_right": right}
    )
    logger.info(
        f"solved alpha={alpha:g}, lambda={lambda_:g}: Iq={Iq:.4g} A, C={C:.4g} F, "
        f"delta_s={delta_s:.4g} s, stack depth {depth}"
    )
    return CircuitSolution(params=params, delta_s=delta_s, stack_depth=depth)


def _require_positive(label: str, *currents: Current) -> None:
    for value in currents:
        if not np.all(np.asarray(value) > 0):
            raise SubthresholdViolationError(
                f"{label} requires strictly positive currents",
                current=float(np.min(value)),
                label=label,
            )


def cell_rhs(Iw: Current, Idelta_opp: Current, Ix: Current, cp: CircuitParams) -> Current:
    """dIw/dt of one learning cell.

    Raises:
        SubthresholdViolationError: If any current is not strictly positive
    """
    _require_positive("cell_rhs", Iw, Idelta_opp, Ix)
    return -cp.decay_rate * Iw + cp.drive_rate * Idelta_opp * Ix / cp.Iu


def steady_state(Idelta_opp: Current, Ix: Current, cp: CircuitParams) -> Current:
    """Cell current at which cell_rhs vanishes."""
    return (cp.drive_rate / cp.decay_rate) * Idelta_opp * Ix / cp.Iu


def relax_cells(
    Iw: Current,
    Idelta_opp: Current,
    Ix: Current,
    dt: float,
    cp: CircuitParams,
    decay: Optional[float] = None,
) -> Current:
    """Exact cell currents after dt with constant inputs.

    `decay` may carry a precomputed exp(-decay_rate*dt).
    """
    target = steady_state(Idelta_opp, Ix, cp)
    if decay is None:
        decay = math.exp(-cp.decay_rate * dt)
    return target + (Iw - target) * decay


def gms_split(delta: float, I_gm: float, cp: CircuitParams) -> DifferentialValue:
    """Geometric-mean split of delta*Iu into two positive currents.

    plus - minus = delta*Iu and plus*minus = I_gm**2.
    """
    if not (I_gm > 0):
        raise InvalidInputError("I_gm must be positive")
    plus, minus = split_differential(delta * cp.Iu, I_gm)
    return DifferentialValue(plus=plus, minus=minus)


def translinear_multiply(Ia: Current, Ib: Current, Iref: Current) -> Current:
    """Ideal translinear product Ia*Ib/Iref.

    Raises:
        SubthresholdViolationError: If any current is not strictly positive
    """
    _require_positive("translinear_multiply", Ia, Ib, Iref)
    return Ia * Ib / Iref


def differential_multiply(
    a: DifferentialValue, b: DifferentialValue, Iref: float
) -> DifferentialValue:
    """Product of two differential currents from four unidirectional multiplies."""
    pp = translinear_multiply(a.plus, b.plus, Iref)
    mm = translinear_multiply(a.minus, b.minus, Iref)
    pm = translinear_multiply(a.plus, b.minus, Iref)
    mp = translinear_multiply(a.minus, b.plus, Iref)
    return DifferentialValue(plus=pp + mm, minus=pm + mp)


def steer_inputs(
    x: Current, Idelta_plus: Current, Idelta_minus: Current, Iu: float, floor: float
) -> Tuple[Current, Current, Current]:
    """Cell drive for a signed input.

    Returns (Ix, opp_plus, opp_minus): the cells see |x|*Iu (not below
    `floor`) and exchange the error branches when x is negative, so the
    weight still moves by -delta*x.
    """
    x = np.asarray(x, dtype=float)
    Ix = np.maximum(np.abs(x) * Iu, floor)
    negative = x < 0
    opp_plus = np.where(negative, Idelta_plus, Idelta_minus)
    opp_minus = np.where(negative, Idelta_minus, Idelta_plus)
    return Ix, opp_plus, opp_minus


def bias_rhs(
    state: BiasState, Idelta: DifferentialValue, cp: CircuitParams
) -> Tuple[float, float]:
    """(dI_b+/dt, dI_b-/dt) of the lossless differential bias integrator.

    w0 = (I_b+ - I_b-)/Iu then moves at -(drive_rate)*delta.
    """
    _require_positive("bias_rhs", state.plus, state.minus, Idelta.plus, Idelta.minus)
    return cp.drive_rate * Idelta.minus, cp.drive_rate * Idelta.plus


def advance_bias(
    state: BiasState, Idelta: DifferentialValue, dt: float, cp: CircuitParams
) -> BiasState:
    """Bias integrator after dt with a constant error pair (bias_rhs is constant in the state)."""
    d_plus, d_minus = bias_rhs(state, Idelta, cp)
    return BiasState(plus=state.plus + d_plus * dt, minus=state.minus + d_minus * dt)


def advance_cells(
    Iw_plus: Current,
    Iw_minus: Current,
    Ix: Current,
    drive_plus: Current,
    drive_minus: Current,
    dt: float,
    cp: CircuitParams,
    decay: Optional[float] = None,
) -> Tuple[Current, Current]:
    """Both cells of one node, or of an array of nodes, after dt with constant inputs.

    drive_plus feeds the positive cell and drive_minus the negative one. For a
    non-negative input these are Idelta.minus and Idelta.plus; steer_inputs
    produces them for signed inputs.
    """
    if decay is None:
        decay = math.exp(-cp.decay_rate * dt)
    return (
        relax_cells(Iw_plus, drive_plus, Ix, dt, cp, decay),
        relax_cells(Iw_minus, drive_minus, Ix, dt, cp, decay),
    )


def step_node(
    state: WeightNodeState,
    Ix: float,
    Idelta: DifferentialValue,
    dt: float,
    cp: CircuitParams,
) -> WeightNodeState:
    """Advance both cells (and the bias integrator, if any) over dt.

    Ix must already be the unidirectional input current; the positive cell is
    driven by Idelta.minus and the negative cell by Idelta.plus.

    Raises:
        InvalidInputError: If dt is negative
        SubthresholdViolationError: If a current is not strictly positive
    """
    if dt < 0 or not math.isfinite(dt):
        raise InvalidInputError(f"dt must be non-negative, got {dt}")
    _require_positive("step_node", Ix, Idelta.plus, Idelta.minus)
    if dt == 0:
        return state
    plus, minus = advance_cells(
        state.Iw_plus, state.Iw_minus, Ix, Idelta.minus, Idelta.plus, dt, cp
    )
    plus, minus = float(plus), float(minus)
    t = state.t + dt
    if not (plus > 0 and minus > 0):
        raise SubthresholdViolationError(
            f"cell current lost positivity at t={t:.6g} s",
            time=t,
            current=min(plus, minus),
            label="Iw",
        )
    bias_state = state.bias_state
    if bias_state is not None:
        bias_state = advance_bias(bias_state, Idelta, dt, cp)
    return WeightNodeState(
        Iw_plus=plus, Iw_minus=minus, bias_state=bias_state, t=t
    )


def initial_node_state(
    weight: float,
    cp: CircuitParams,
    with_bias: bool = False,
    bias: float = 0.0,
    initial_cell_ratio: float = DEFAULT_INITIAL_CELL_RATIO,
) -> WeightNodeState:
    """Node holding `weight` with the smaller cell at initial_cell_ratio*Iu."""
    base = initial_cell_ratio * cp.Iu
    bias_state = None
    if with_bias:
        bias_state = BiasState(
            plus=base + max(bias, 0.0) * cp.Iu, minus=base + max(-bias, 0.0) * cp.Iu
        )
    return WeightNodeState(
        Iw_plus=base + max(weight, 0.0) * cp.Iu,
        Iw_minus=base + max(-weight, 0.0) * cp.Iu,
        bias_state=bias_state,
    )


class SubthresholdMonitor:
    """Counts currents seen outside [current_min, current_max].

    Non-positive currents always raise; window excursions raise only in
    strict mode and are otherwise logged once per label.
    """

    def __init__(
        self,
        current_min: float = SUBTHRESHOLD_MIN,
        current_max: float = SUBTHRESHOLD_MAX,
        strict: bool = False,
    ):
        if current_min >= current_max:
            raise InvalidInputError("current_min must be below current_max")
        self.current_min = current_min
        self.current_max = current_max
        self.strict = strict
        self.excursions = 0
        self._reported: set = set()

    def reset(self) -> None:
        self.excursions = 0
        self._reported = set()

    def check(self, label: str, currents: Current, t: float) -> None:
        arr = np.asarray(currents, dtype=float)
        if not np.all(arr > 0):
            raise SubthresholdViolationError(
                f"{label} lost positivity at t={t:.6g} s",
                time=t,
                current=float(np.min(arr)),
                label=label,
            )
        outside = (arr < self.current_min) | (arr > self.current_max)
        count = int(np.count_nonzero(outside))
        if not count:
            return
        self.excursions += count
        worst = float(arr[outside][0])
        if self.strict:
            raise SubthresholdViolationError(
                f"{label}={worst:.3g} A left the weak-inversion window at t={t:.6g} s",
                time=t,
                current=worst,
                label=label,
            )
        if label not in self._reported:
            self._reported.add(label)
            logger.warning(
                f"{label}={worst:.3g} A outside [{self.current_min:.3g}, "
                f"{self.current_max:.3g}] A at t={t:.6g} s",
                extra={"label": label, "time": t},
            )


class CircuitSimulator(TierSimulator):
    """Single-output learning node array trained in continuous time (the circuit tier).

    Every hold is split into ramp and flat segments. Within a segment the
    error is evaluated at the start, a half-step gives the midpoint error and
    the cells relax over the full segment with midpoint inputs. With
    latch_delta the error of the hold start drives the whole hold.
    """

    def __init__(
        self,
        cp: Optional[CircuitParams] = None,
        rise_fraction: float = DEFAULT_RISE_FRACTION,
        ramp_substeps: int = 4,
        flat_substeps: int = 2,
        latch_delta: bool = False,
        train_bias: bool = False,
        gms_current_ratio: float = 1.0,
        initial_cell_ratio: float = DEFAULT_INITIAL_CELL_RATIO,
        divergence_guard: float = DEFAULT_DIVERGENCE_GUARD,
        monitor: Optional[SubthresholdMonitor] = None,
    ):
        if ramp_substeps < 1 or flat_substeps < 1:
            raise InvalidInputError("substep counts must be at least 1")
        self.cp = cp or CircuitParams()
        self.rise_fraction = rise_fraction
        self.ramp_substeps = ramp_substeps
        self.flat_substeps = flat_substeps
        self.latch_delta = latch_delta
        self.train_bias = train_bias
        self.I_gm = gms_current_ratio * self.cp.Iu
        self.initial_cell_ratio = initial_cell_ratio
        self.divergence_guard = divergence_guard
        self.monitor = monitor or SubthresholdMonitor()
        self._decays: Dict[float, float] = {}

    @property
    def tier(self) -> Tier:
        return Tier.CIRCUIT

    def _decay(self, h: float) -> float:
        value = self._decays.get(h)
        if value is None:
            value = math.exp(-self.cp.decay_rate * h)
            self._decays[h] = value
        return value

    def _error(self, ip, im, bias, x, y) -> float:
        Iu = self.cp.Iu
        delta = float((ip - im) @ x) / Iu - y
        if bias is not None:
            delta += (bias.plus - bias.minus) / Iu
        return delta

    def _step(self, ip, im, bias, x, delta, h):
        cp = self.cp
        Idelta = gms_split(delta, self.I_gm, cp)
        Ix, opp_plus, opp_minus = steer_inputs(
            x, Idelta.plus, Idelta.minus, cp.Iu, self.monitor.current_min
        )
        ip, im = advance_cells(ip, im, Ix, opp_plus, opp_minus, h, cp, self._decay(h))
        if bias is not None:
            bias = advance_bias(bias, Idelta, h, cp)
        return ip, im, bias

    def _segment(self, ip, im, bias, inputs, ta, h, latched):
        """One midpoint segment of length h starting at hold-local time ta."""
        xm, ym = inputs(ta + h / 2)
        if latched is not None:
            return self._step(ip, im, bias, xm, latched, h)
        xa, ya = inputs(ta)
        delta_a = self._error(ip, im, bias, xa, ya)
        tp, tm, tb = self._step(ip, im, bias, xa, delta_a, h / 2)
        delta_m = self._error(tp, tm, tb, xm, ym)
        return self._step(ip, im, bias, xm, delta_m, h)

    def advance_hold(self, ip, im, bias, n: int, signals: TrainingSignals):
        """Advance cell currents (and bias currents) through hold n."""
        ds = signals.delta_s
        x_n, y_n = signals.level(n)
        latched = self._error(ip, im, bias, x_n, y_n) if self.latch_delta else None
        flat_start = 0.0
        if signals.bank.has_ramp(n):
            rise = signals.bank.rise_time
            x_p, y_p = signals.level(n - 1)
            dx, dy = x_n - x_p, y_n - y_p

            def ramp(tau: float):
                s = tau / rise
                return x_p + dx * s, y_p + dy * s

            h = rise / self.ramp_substeps
            for j in range(self.ramp_substeps):
                ip, im, bias = self._segment(ip, im, bias, ramp, j * h, h, latched)
            flat_start = rise

        def hold(tau: float):
            return x_n, y_n

        h = (ds - flat_start) / self.flat_substeps
        for j in range(self.flat_substeps):
            ip, im, bias = self._segment(
                ip, im, bias, hold, flat_start + j * h, h, latched
            )
        return ip, im, bias

    def train(
        self,
        dataset: Dataset,
        hp: Hyperparams,
        model0: Optional[LinearModel] = None,
    ) -> TrainTrace:
        cp = self.cp
        with_bias = self.train_bias or (model0 is not None and model0.bias is not None)
        if model0 is None:
            model0 = LinearModel.zeros(dataset.features, with_bias=with_bias)
        if model0.features != dataset.features:
            raise InvalidInputError(
                f"model has {model0.features} weights, dataset has {dataset.features} features"
            )
        mapped = map_hyperparams(hp, cp)
        base = self.initial_cell_ratio * cp.Iu
        w0 = model0.as_array()
        ip = base + np.maximum(w0, 0.0) * cp.Iu
        im = base + np.maximum(-w0, 0.0) * cp.Iu
        bias = None
        if with_bias:
            b0 = model0.bias or 0.0
            bias = BiasState(
                plus=base + max(b0, 0.0) * cp.Iu, minus=base + max(-b0, 0.0) * cp.Iu
            )

        m = len(dataset.train_idx)
        signals = TrainingSignals.from_dataset(
            dataset, hp.delta_s, hp.epochs, self.rise_fraction
        )
        recorder = TraceRecorder(
            Tier.CIRCUIT,
            dataset,
            hp,
            with_bias,
            self.divergence_guard,
            circuit=cp,
            circuit_delta_s=hp.delta_s,
        )
        logger.info(
            f"circuit training on {dataset.name}: {hp.epochs} epochs, "
            f"realized alpha={mapped.alpha:.6g}, lambda={mapped.lambda_:.6g}"
        )
        self.monitor.reset()
        started = time.perf_counter()
        ds = hp.delta_s
        try:
            for n in range(signals.intervals):
                ip, im, bias = self.advance_hold(ip, im, bias, n, signals)
                t = (n + 1) * ds
                if not (np.all(np.isfinite(ip)) and np.all(np.isfinite(im))):
                    raise DivergenceError(
                        f"circuit tier cell currents became non-finite at t={t:.6g} s",
                        epoch=recorder.epochs_recorded + 1,
                        tier=Tier.CIRCUIT.value,
                    )
                self.monitor.check("Iw+", ip, t)
                self.monitor.check("Iw-", im, t)
                if bias is not None:
                    self.monitor.check("Ib", np.array([bias.plus, bias.minus]), t)
                if (n + 1) % m == 0:
                    w = (ip - im) / cp.Iu
                    b = (bias.plus - bias.minus) / cp.Iu if bias is not None else None
                    recorder.monitor_excursions = self.monitor.excursions
                    recorder.record(w, b)
        except DivergenceError as e:
            recorder.monitor_excursions = self.monitor.excursions
            e.trace = recorder.build(RunStatus.DIVERGED, e.message)
            logger.error(e.message)
            raise
        recorder.monitor_excursions = self.monitor.excursions
        logger.info(
            f"circuit training on {dataset.name} done in "
            f"{time.perf_counter() - started:.2f} s, "
            f"{self.monitor.excursions} window excursions"
        )
        return recorder.build()
