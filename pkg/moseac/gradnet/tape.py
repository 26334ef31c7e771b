"""
Reverse-mode gradient tape over numpy arrays.

Every primitive records its output node, its parents and a closure that maps
the output gradient to parent gradients. Recording order is a topological
order, so `backward` walks the records once, newest first.
"""

from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from moseac.core.errors import ContractViolation

Operand = Union["Node", float, int, np.ndarray]
BackwardFn = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]


class Node:
    """A value on the tape. Leaves created with `GradTape.param` collect gradients."""

    __slots__ = ("value", "grad", "tape", "requires_grad", "name")

    # ndarray <op> Node must dispatch to the reflected Node operators.
    __array_ufunc__ = None

    def __init__(self, value: np.ndarray, tape: "GradTape", requires_grad: bool = False,
                 name: Optional[str] = None):
        self.value = value
        self.grad: Optional[np.ndarray] = None
        self.tape = tape
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    def item(self) -> float:
        return float(self.value)

    def __add__(self, other: Operand) -> "Node":
        return self.tape.add(self, other)

    def __radd__(self, other: Operand) -> "Node":
        return self.tape.add(other, self)

    def __sub__(self, other: Operand) -> "Node":
        return self.tape.sub(self, other)

    def __rsub__(self, other: Operand) -> "Node":
        return self.tape.sub(other, self)

    def __mul__(self, other: Operand) -> "Node":
        return self.tape.mul(self, other)

    def __rmul__(self, other: Operand) -> "Node":
        return self.tape.mul(other, self)

    def __neg__(self) -> "Node":
        return self.tape.mul(self, -1.0)

    def __repr__(self) -> str:
        return f"Node(name={self.name}, shape={self.shape}, requires_grad={self.requires_grad})"


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


class GradTape:
    def __init__(self) -> None:
        self._records: List[Tuple[Node, Tuple[Node, ...], BackwardFn]] = []
        self._params: Dict[str, Node] = {}

    # ===============================================================
    # LEAVES
    # ===============================================================

    def param(self, value: np.ndarray, name: str) -> Node:
        if name in self._params:
            raise ContractViolation(f"Parameter '{name}' already registered on this tape")
        node = Node(np.asarray(value, dtype=np.float64), self, requires_grad=True, name=name)
        self._params[name] = node
        return node

    def const(self, value: Operand) -> Node:
        if isinstance(value, Node):
            return value
        return Node(np.asarray(value, dtype=np.float64), self)

    def _record(self, value: np.ndarray, parents: Tuple[Node, ...], backward_fn: BackwardFn) -> Node:
        requires = any(p.requires_grad for p in parents)
        out = Node(value, self, requires_grad=requires)
        if requires:
            self._records.append((out, parents, backward_fn))
        return out

    def _lift(self, *operands: Operand) -> Tuple[Node, ...]:
        nodes = tuple(self.const(o) for o in operands)
        for node in nodes:
            if node.tape is not self:
                raise ContractViolation("Operand recorded on a different tape")
        return nodes

    # ===============================================================
    # ELEMENTWISE PRIMITIVES
    # ===============================================================

    def add(self, a: Operand, b: Operand) -> Node:
        a, b = self._lift(a, b)
        return self._record(a.value + b.value, (a, b),
                            lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))

    def sub(self, a: Operand, b: Operand) -> Node:
        a, b = self._lift(a, b)
        return self._record(a.value - b.value, (a, b),
                            lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))

    def mul(self, a: Operand, b: Operand) -> Node:
        a, b = self._lift(a, b)
        return self._record(a.value * b.value, (a, b),
                            lambda g: (_unbroadcast(g * b.value, a.shape),
                                       _unbroadcast(g * a.value, b.shape)))

    def square(self, a: Operand) -> Node:
        (a,) = self._lift(a)
        return self._record(a.value * a.value, (a,), lambda g: (2.0 * a.value * g,))

    def log(self, a: Operand) -> Node:
        (a,) = self._lift(a)
        return self._record(np.log(a.value), (a,), lambda g: (g / a.value,))

    def exp(self, a: Operand) -> Node:
        (a,) = self._lift(a)
        out = np.exp(a.value)
        return self._record(out, (a,), lambda g: (g * out,))

    def tanh(self, a: Operand) -> Node:
        (a,) = self._lift(a)
        out = np.tanh(a.value)
        return self._record(out, (a,), lambda g: (g * (1.0 - out * out),))

    def relu(self, a: Operand) -> Node:
        (a,) = self._lift(a)
        mask = a.value > 0.0
        return self._record(np.where(mask, a.value, 0.0), (a,), lambda g: (g * mask,))

    def softplus(self, a: Operand) -> Node:
        (a,) = self._lift(a)
        out = np.logaddexp(0.0, a.value)
        sigmoid = np.exp(a.value - out)
        return self._record(out, (a,), lambda g: (g * sigmoid,))

    def minimum(self, a: Operand, b: Operand) -> Node:
        a, b = self._lift(a, b)
        pick_a = a.value <= b.value
        return self._record(np.where(pick_a, a.value, b.value), (a, b),
                            lambda g: (_unbroadcast(g * pick_a, a.shape),
                                       _unbroadcast(g * ~pick_a, b.shape)))

    def clip(self, a: Operand, low: float, high: float) -> Node:
        (a,) = self._lift(a)
        inside = (a.value >= low) & (a.value <= high)
        return self._record(np.clip(a.value, low, high), (a,), lambda g: (g * inside,))

    # ===============================================================
    # STRUCTURAL PRIMITIVES
    # ===============================================================

    def affine(self, x: Operand, params: Node, offset: int, fan_in: int, fan_out: int) -> Node:
        """x @ W + b with W, b read from the flat parameter vector at `offset`."""
        (x,) = self._lift(x)
        if x.value.ndim != 2 or x.value.shape[1] != fan_in:
            raise ContractViolation(f"affine expects (batch, {fan_in}) input, got {x.value.shape}")
        w_end = offset + fan_in * fan_out
        weight = params.value[offset:w_end].reshape(fan_in, fan_out)
        bias = params.value[w_end:w_end + fan_out]

        def backward(g: np.ndarray) -> Tuple[Optional[np.ndarray], Optional[np.ndarray]]:
            grad_x = g @ weight.T if x.requires_grad else None
            if not params.requires_grad:
                return grad_x, None
            flat = np.zeros_like(params.value)
            flat[offset:w_end] = (x.value.T @ g).ravel()
            flat[w_end:w_end + fan_out] = g.sum(axis=0)
            return grad_x, flat

        return self._record(x.value @ weight + bias, (x, params), backward)

    def concat(self, parts: Sequence[Operand]) -> Node:
        nodes = self._lift(*parts)
        widths = [n.value.shape[1] for n in nodes]
        bounds = np.cumsum([0] + widths)

        def backward(g: np.ndarray) -> Tuple[np.ndarray, ...]:
            return tuple(g[:, bounds[i]:bounds[i + 1]] for i in range(len(nodes)))

        return self._record(np.concatenate([n.value for n in nodes], axis=1), nodes, backward)

    def columns(self, a: Operand, start: int, stop: int) -> Node:
        (a,) = self._lift(a)

        def backward(g: np.ndarray) -> Tuple[np.ndarray]:
            full = np.zeros_like(a.value)
            full[:, start:stop] = g
            return (full,)

        return self._record(a.value[:, start:stop], (a,), backward)

    def sum(self, a: Operand, axis: Optional[int] = None) -> Node:
        (a,) = self._lift(a)
        if axis is None:
            return self._record(np.asarray(a.value.sum()), (a,),
                                lambda g: (np.broadcast_to(g, a.shape).copy(),))
        return self._record(a.value.sum(axis=axis, keepdims=True), (a,),
                            lambda g: (np.broadcast_to(g, a.shape).copy(),))

    def mean(self, a: Operand) -> Node:
        (a,) = self._lift(a)
        count = a.value.size
        if count == 0:
            raise ContractViolation("mean of an empty array")
        return self._record(np.asarray(a.value.mean()), (a,),
                            lambda g: (np.full(a.shape, float(g) / count),))

    # ===============================================================
    # BACKWARD PASS
    # ===============================================================

    def zero_grad(self) -> None:
        for node, _, _ in self._records:
            node.grad = None
        for node in self._params.values():
            node.grad = None

    def backward(self, loss: Node, accumulate: bool = False) -> Dict[str, np.ndarray]:
        """
        Gradient of a scalar loss with respect to every registered parameter.
        Returns {parameter name: gradient array}; unreached parameters get zeros.
        """
        if not isinstance(loss, Node) or loss.tape is not self:
            raise ContractViolation("backward needs a loss recorded on this tape")
        if not self._records or not loss.requires_grad:
            raise ContractViolation("backward without a recorded computation")
        if loss.value.size != 1:
            raise ContractViolation(f"loss must be scalar, got shape {loss.shape}")

        if accumulate:
            for node, _, _ in self._records:
                node.grad = None
        else:
            self.zero_grad()
        loss.grad = np.ones_like(loss.value)

        for out, parents, backward_fn in reversed(self._records):
            if out.grad is None:
                continue
            for parent, grad in zip(parents, backward_fn(out.grad)):
                if not parent.requires_grad or grad is None:
                    continue
                parent.grad = grad if parent.grad is None else parent.grad + grad

        return {
            name: (node.grad if node.grad is not None else np.zeros_like(node.value))
            for name, node in self._params.items()
        }
