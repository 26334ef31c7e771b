import logging
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np

from moseac.core.errors import ContractViolation
from moseac.gradnet.tape import GradTape, Node

logger = logging.getLogger(__name__)

Activation = Literal["tanh", "relu", "identity"]
ACTIVATIONS = ("tanh", "relu", "identity")


class DenseNet:
    """
    Fully connected network whose parameters live in one flat float64 vector.
    Layer i occupies fan_in*fan_out weights (row-major, W[in, out]) followed by
    fan_out biases.
    """

    def __init__(self, layer_shapes: Sequence[Tuple[int, int]], activations: Sequence[str],
                 weights: Optional[np.ndarray] = None):
        if not layer_shapes:
            raise ContractViolation("DenseNet needs at least one layer")
        if len(layer_shapes) != len(activations):
            raise ContractViolation("one activation tag per layer is required")
        for tag in activations:
            if tag not in ACTIVATIONS:
                raise ContractViolation(f"unknown activation '{tag}'")
        for (_, fan_out), (fan_in, _) in zip(layer_shapes[:-1], layer_shapes[1:]):
            if fan_out != fan_in:
                raise ContractViolation(f"layer chain broken: {fan_out} -> {fan_in}")

        self.layer_shapes: List[Tuple[int, int]] = [(int(i), int(o)) for i, o in layer_shapes]
        self.activations: List[str] = list(activations)
        count = self.param_count(self.layer_shapes)
        if weights is None:
            weights = np.zeros(count)
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (count,):
            raise ContractViolation(f"expected {count} weights, got {weights.shape}")
        self.weights = weights

    @staticmethod
    def param_count(layer_shapes: Sequence[Tuple[int, int]]) -> int:
        return sum((fan_in + 1) * fan_out for fan_in, fan_out in layer_shapes)

    @classmethod
    def initialize(cls, sizes: Sequence[int], rng: np.random.Generator,
                   hidden_activation: Activation = "tanh",
                   output_activation: Activation = "identity",
                   final_bound: Optional[float] = None) -> "DenseNet":
        """
        Fan-in scaled uniform init, bound 1/sqrt(fan_in) for weights and biases.
        `final_bound` overrides the bound of the last layer.
        """
        shapes = list(zip(sizes[:-1], sizes[1:]))
        activations = [hidden_activation] * (len(shapes) - 1) + [output_activation]
        chunks = []
        for index, (fan_in, fan_out) in enumerate(shapes):
            bound = 1.0 / np.sqrt(fan_in)
            if final_bound is not None and index == len(shapes) - 1:
                bound = final_bound
            chunks.append(rng.uniform(-bound, bound, size=(fan_in + 1) * fan_out))
        return cls(shapes, activations, np.concatenate(chunks))

    @property
    def n_params(self) -> int:
        return self.weights.size

    @property
    def in_dim(self) -> int:
        return self.layer_shapes[0][0]

    @property
    def out_dim(self) -> int:
        return self.layer_shapes[-1][1]

    def offsets(self) -> List[int]:
        result, offset = [], 0
        for fan_in, fan_out in self.layer_shapes:
            result.append(offset)
            offset += (fan_in + 1) * fan_out
        return result

    def same_shape(self, other: "DenseNet") -> bool:
        return self.layer_shapes == other.layer_shapes and self.activations == other.activations

    def copy(self) -> "DenseNet":
        return DenseNet(self.layer_shapes, self.activations, self.weights.copy())

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Plain numpy evaluation; accepts one input vector or a (batch, in) matrix."""
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        h = x[None, :] if single else x
        if h.ndim != 2 or h.shape[1] != self.in_dim:
            raise ContractViolation(f"input dimension {x.shape} does not match fan_in {self.in_dim}")
        for offset, (fan_in, fan_out), tag in zip(self.offsets(), self.layer_shapes, self.activations):
            w_end = offset + fan_in * fan_out
            h = h @ self.weights[offset:w_end].reshape(fan_in, fan_out) + self.weights[w_end:w_end + fan_out]
            if tag == "tanh":
                h = np.tanh(h)
            elif tag == "relu":
                h = np.where(h > 0.0, h, 0.0)
        return h[0] if single else h

    def forward_tape(self, tape: GradTape, x: Node, params: Optional[Node] = None) -> Node:
        """
        Records the forward pass. With `params=None` the weights enter the tape
        as a constant, so gradients flow to the input only.
        """
        if x.value.ndim != 2 or x.value.shape[1] != self.in_dim:
            raise ContractViolation(f"input dimension {x.shape} does not match fan_in {self.in_dim}")
        weights = params if params is not None else tape.const(self.weights)
        h = x
        for offset, (fan_in, fan_out), tag in zip(self.offsets(), self.layer_shapes, self.activations):
            h = tape.affine(h, weights, offset, fan_in, fan_out)
            if tag == "tanh":
                h = tape.tanh(h)
            elif tag == "relu":
                h = tape.relu(h)
        return h
