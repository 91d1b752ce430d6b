"""Crossbar layers of weight-learning nodes.

Node (i, j) of a layer connects input i to output j, so the grid of node
currents has shape (r_k, r_{k+1}) and the weight matrix W^(k) is its
transpose. Layers are value types: advancing one returns a new layer.
"""

import logging
from enum import Enum
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from abstracts.exception import InvalidInputError
from app.core.circuit import (
    DEFAULT_INITIAL_CELL_RATIO,
    advance_cells,
    steer_inputs,
)
from app.core.ct_core import split_differential
from models.circuit import SUBTHRESHOLD_MIN, CircuitParams, WeightNodeState
from models.hyperparams import Hyperparams

logger = logging.getLogger(__name__)

Number = Union[float, np.ndarray]


class Activation(str, Enum):
    IDENTITY = "identity"
    RELU = "relu"


def relu(a: Number) -> Number:
    """max(0, a), realized by a current mirror."""
    if np.ndim(a) == 0:
        return max(0.0, float(a))
    return np.maximum(a, 0.0)


def relu_deriv(a: Number) -> Number:
    """1 where a > 0, else 0; a tie at zero has no comparator winner."""
    if np.ndim(a) == 0:
        return 1.0 if a > 0 else 0.0
    return (np.asarray(a) > 0).astype(float)


def activate(activation: Activation, a: np.ndarray) -> np.ndarray:
    if activation == Activation.RELU:
        return relu(a)
    return np.asarray(a, dtype=float)


def activate_deriv(activation: Activation, a: np.ndarray) -> np.ndarray:
    if activation == Activation.RELU:
        return relu_deriv(a)
    return np.ones_like(np.asarray(a, dtype=float))


class Layer:
    """r_k x r_{k+1} grid of learning nodes sharing one CircuitParams."""

    def __init__(
        self,
        iw_plus: np.ndarray,
        iw_minus: np.ndarray,
        cp: Optional[CircuitParams] = None,
        activation: Activation = Activation.IDENTITY,
    ):
        iw_plus = np.array(iw_plus, dtype=float)
        iw_minus = np.array(iw_minus, dtype=float)
        if iw_plus.ndim != 2 or iw_plus.shape != iw_minus.shape or 0 in iw_plus.shape:
            raise InvalidInputError("node grids must be non-empty matrices of equal shape")
        if not (np.all(iw_plus > 0) and np.all(iw_minus > 0)):
            raise InvalidInputError("node currents must be strictly positive")
        iw_plus.setflags(write=False)
        iw_minus.setflags(write=False)
        self.iw_plus = iw_plus
        self.iw_minus = iw_minus
        self.cp = cp or CircuitParams()
        self.activation = Activation(activation)

    @classmethod
    def from_weights(
        cls,
        weights: np.ndarray,
        cp: Optional[CircuitParams] = None,
        activation: Activation = Activation.IDENTITY,
        initial_cell_ratio: float = DEFAULT_INITIAL_CELL_RATIO,
    ) -> "Layer":
        """Layer holding `weights`, given in grid orientation (r_k, r_{k+1})."""
        cp = cp or CircuitParams()
        w = np.atleast_2d(np.asarray(weights, dtype=float))
        base = initial_cell_ratio * cp.Iu
        return cls(
            base + np.maximum(w, 0.0) * cp.Iu,
            base + np.maximum(-w, 0.0) * cp.Iu,
            cp,
            activation,
        )

    @property
    def shape(self) -> Tuple[int, int]:
        return self.iw_plus.shape

    @property
    def inputs(self) -> int:
        return self.shape[0]

    @property
    def outputs(self) -> int:
        return self.shape[1]

    def weights(self) -> np.ndarray:
        """Node weights in grid orientation."""
        return (self.iw_plus - self.iw_minus) / self.cp.Iu

    def weight_matrix(self) -> np.ndarray:
        """W^(k), r_{k+1} x r_k."""
        return self.weights().T

    def node(self, i: int, j: int) -> WeightNodeState:
        return WeightNodeState(
            Iw_plus=float(self.iw_plus[i, j]), Iw_minus=float(self.iw_minus[i, j])
        )

    def forward(
        self, x: Sequence[float], signed_inputs: bool = False
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Return (alpha, f(alpha)) with alpha = W x.

        Each product is formed from the node currents as Iw*Ix/Iu, for both
        cells, and summed along the output line.

        Raises:
            InvalidInputError: On a size mismatch, or a negative input unless
                signed_inputs steers its polarity
        """
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.inputs:
            raise InvalidInputError(f"expected {self.inputs} inputs, got {x.shape[0]}")
        if not signed_inputs and np.any(x < 0):
            raise InvalidInputError("crossbar inputs must be non-negative")
        Iu = self.cp.Iu
        Ix = (x * Iu)[:, None]
        products = (self.iw_plus * Ix - self.iw_minus * Ix) / Iu
        alpha = products.sum(axis=0) / Iu
        return alpha, activate(self.activation, alpha)

    def backward(
        self,
        delta: Sequence[float],
        alpha_prev: Sequence[float],
        prev_activation: Optional[Activation] = None,
    ) -> np.ndarray:
        """(W^T delta) * f'(alpha_prev).

        f is the activation of the layer feeding this one, this layer's own
        activation when not given.

        Raises:
            InvalidInputError: On a size mismatch
        """
        delta = np.asarray(delta, dtype=float).reshape(-1)
        alpha_prev = np.asarray(alpha_prev, dtype=float).reshape(-1)
        if delta.shape[0] != self.outputs:
            raise InvalidInputError(f"expected {self.outputs} errors, got {delta.shape[0]}")
        if alpha_prev.shape[0] != self.inputs:
            raise InvalidInputError(
                f"expected {self.inputs} pre-activations, got {alpha_prev.shape[0]}"
            )
        activation = self.activation if prev_activation is None else prev_activation
        return (self.weights() @ delta) * activate_deriv(activation, alpha_prev)

    def advance(
        self,
        x: Sequence[float],
        delta: Sequence[float],
        dt: float,
        I_gm: Optional[float] = None,
        floor: float = SUBTHRESHOLD_MIN,
    ) -> "Layer":
        """Relax every node over dt with input x_i on row i and error delta_j on column j."""
        if dt < 0:
            raise InvalidInputError(f"dt must be non-negative, got {dt}")
        x = np.asarray(x, dtype=float).reshape(-1)
        delta = np.asarray(delta, dtype=float).reshape(-1)
        if x.shape[0] != self.inputs or delta.shape[0] != self.outputs:
            raise InvalidInputError("input or error size does not match the layer")
        if dt == 0:
            return self
        cp = self.cp
        I_gm = cp.Iu if I_gm is None else I_gm
        d_plus, d_minus = split_differential(delta * cp.Iu, I_gm)
        Ix, opp_plus, opp_minus = steer_inputs(
            x[:, None], d_plus[None, :], d_minus[None, :], cp.Iu, floor
        )
        iw_plus, iw_minus = advance_cells(
            self.iw_plus, self.iw_minus, Ix, opp_plus, opp_minus, dt, cp
        )
        return Layer(iw_plus, iw_minus, cp, self.activation)


class Network:
    """Stack of layers trained on the loss 0.5*|out - y|^2."""

    def __init__(self, layers: List[Layer]):
        if not layers:
            raise InvalidInputError("a network needs at least one layer")
        for a, b in zip(layers, layers[1:]):
            if a.outputs != b.inputs:
                raise InvalidInputError("consecutive layer sizes do not match")
        self.layers = layers

    def forward(self, x: Sequence[float]) -> List[Tuple[np.ndarray, np.ndarray, np.ndarray]]:
        """Per layer (input, alpha, output)."""
        passes = []
        signal = np.asarray(x, dtype=float).reshape(-1)
        for k, layer in enumerate(self.layers):
            alpha, out = layer.forward(signal, signed_inputs=k == 0)
            passes.append((signal, alpha, out))
            signal = out
        return passes

    def predict(self, x: Sequence[float]) -> np.ndarray:
        return self.forward(x)[-1][2]

    def loss(self, x: Sequence[float], y: Sequence[float]) -> float:
        residual = self.predict(x) - np.asarray(y, dtype=float).reshape(-1)
        return 0.5 * float(residual @ residual)

    def errors(self, passes, y: Sequence[float]) -> List[np.ndarray]:
        """Error signal at the output of every layer, last layer first propagated back."""
        last = self.layers[-1]
        _, alpha, out = passes[-1]
        delta = (out - np.asarray(y, dtype=float).reshape(-1)) * activate_deriv(
            last.activation, alpha
        )
        deltas = [delta]
        for k in range(len(self.layers) - 1, 0, -1):
            deltas.insert(
                0,
                self.layers[k].backward(
                    deltas[0], passes[k - 1][1], self.layers[k - 1].activation
                ),
            )
        return deltas

    def gradients(self, x: Sequence[float], y: Sequence[float]) -> List[np.ndarray]:
        """dL/dw for every node, in grid orientation."""
        passes = self.forward(x)
        deltas = self.errors(passes, y)
        return [np.outer(inp, d) for (inp, _, _), d in zip(passes, deltas)]

    def train_step(
        self, x: Sequence[float], y: Sequence[float], hp: Hyperparams
    ) -> "Network":
        """Present one sample for hp.delta_s with each layer's error held fixed."""
        passes = self.forward(x)
        deltas = self.errors(passes, y)
        layers = [
            layer.advance(inp, d, hp.delta_s)
            for layer, (inp, _, _), d in zip(self.layers, passes, deltas)
        ]
        return Network(layers)
