"""
Dense float64 tensors with reverse-mode automatic differentiation.

Every operation applied to a tensor that requires gradients records a node
holding its parents and a backward rule. ``backward(loss)`` orders the
recorded nodes topologically, walks them in reverse exactly once and
accumulates gradients into the leaf tensors. The graph is released after
backward unless ``retain_graph=True``.

Recording state is thread-local: a forward pass records on the thread that
runs it, and ``no_grad()`` only affects the current thread.
"""

import threading
from contextlib import contextmanager
from typing import Callable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ContractError, DimensionError


DTYPE = np.float64

ArrayLike = Union["Tensor", np.ndarray, float, int, Sequence]
BackwardFn = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]


# ============================================================================
# Recording state
# ============================================================================

_recording = threading.local()


def is_grad_enabled() -> bool:
    """Return True when operations on the current thread record a graph."""
    return getattr(_recording, "enabled", True)


@contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording on the current thread inside the block."""
    previous = is_grad_enabled()
    _recording.enabled = False
    try:
        yield
    finally:
        _recording.enabled = previous


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _has_advanced_index(index) -> bool:
    parts = index if isinstance(index, tuple) else (index,)
    return any(isinstance(p, (np.ndarray, list)) for p in parts)


# ============================================================================
# Tensor
# ============================================================================

class Tensor:
    """
    A dense n-dimensional float64 array that can take part in differentiation.

    Attributes:
        data: Row-major float64 numpy array
        requires_grad: Whether gradients flow into this tensor
        grad: Accumulated gradient (same shape as data) or None
    """

    __array_priority__ = 100

    def __init__(self, data: ArrayLike, requires_grad: bool = False):
        if isinstance(data, Tensor):
            data = data.data
        array = np.array(data, dtype=DTYPE)
        if any(extent == 0 for extent in array.shape):
            raise DimensionError("tensor extents must be positive", array.shape)
        self.data = array
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self._parents: Tuple["Tensor", ...] = ()
        self._backward_fn: Optional[BackwardFn] = None
        self._is_leaf = True
        self._op = "leaf"

    # ------------------------------------------------------------------
    # Construction helpers
    # ------------------------------------------------------------------

    @classmethod
    def _from_op(
        cls,
        data: np.ndarray,
        parents: Tuple["Tensor", ...],
        backward_fn: BackwardFn,
        op: str,
    ) -> "Tensor":
        out = cls.__new__(cls)
        out.data = np.asarray(data, dtype=DTYPE)
        out.grad = None
        out._is_leaf = False
        out._op = op
        track = is_grad_enabled() and any(p.requires_grad for p in parents)
        out.requires_grad = track
        out._parents = parents if track else ()
        out._backward_fn = backward_fn if track else None
        return out

    @staticmethod
    def zeros(shape, requires_grad: bool = False) -> "Tensor":
        return Tensor(np.zeros(shape, dtype=DTYPE), requires_grad=requires_grad)

    @staticmethod
    def ones(shape, requires_grad: bool = False) -> "Tensor":
        return Tensor(np.ones(shape, dtype=DTYPE), requires_grad=requires_grad)

    # ------------------------------------------------------------------
    # Introspection
    # ------------------------------------------------------------------

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def is_leaf(self) -> bool:
        return self._is_leaf

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, op={self._op}{flag})"

    def __len__(self) -> int:
        return self.shape[0]

    # ------------------------------------------------------------------
    # Elementwise arithmetic
    # ------------------------------------------------------------------

    def __add__(self, other: ArrayLike) -> "Tensor":
        other = as_tensor(other)
        a_shape, b_shape = self.shape, other.shape
        return Tensor._from_op(
            self.data + other.data,
            (self, other),
            lambda g: (_unbroadcast(g, a_shape), _unbroadcast(g, b_shape)),
            "add",
        )

    __radd__ = __add__

    def __neg__(self) -> "Tensor":
        return Tensor._from_op(-self.data, (self,), lambda g: (-g,), "neg")

    def __sub__(self, other: ArrayLike) -> "Tensor":
        other = as_tensor(other)
        a_shape, b_shape = self.shape, other.shape
        return Tensor._from_op(
            self.data - other.data,
            (self, other),
            lambda g: (_unbroadcast(g, a_shape), -_unbroadcast(g, b_shape)),
            "sub",
        )

    def __rsub__(self, other: ArrayLike) -> "Tensor":
        return as_tensor(other) - self

    def __mul__(self, other: ArrayLike) -> "Tensor":
        other = as_tensor(other)
        a, b = self.data, other.data
        return Tensor._from_op(
            a * b,
            (self, other),
            lambda g: (_unbroadcast(g * b, a.shape), _unbroadcast(g * a, b.shape)),
            "mul",
        )

    __rmul__ = __mul__

    def __truediv__(self, other: ArrayLike) -> "Tensor":
        other = as_tensor(other)
        a, b = self.data, other.data
        return Tensor._from_op(
            a / b,
            (self, other),
            lambda g: (
                _unbroadcast(g / b, a.shape),
                _unbroadcast(-g * a / (b * b), b.shape),
            ),
            "div",
        )

    def __rtruediv__(self, other: ArrayLike) -> "Tensor":
        return as_tensor(other) / self

    def __pow__(self, exponent: float) -> "Tensor":
        if isinstance(exponent, Tensor):
            raise ContractError("only constant exponents are supported")
        a = self.data
        return Tensor._from_op(
            a ** exponent,
            (self,),
            lambda g: (g * exponent * a ** (exponent - 1),),
            "pow",
        )

    def __matmul__(self, other: ArrayLike) -> "Tensor":
        return matmul(self, as_tensor(other))

    # ------------------------------------------------------------------
    # Reductions and shape manipulation
    # ------------------------------------------------------------------

    def sum(self, axis: Optional[int] = None, keepdims: bool = False) -> "Tensor":
        shape = self.shape

        def backward(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, shape).copy(),)

        return Tensor._from_op(self.data.sum(axis=axis, keepdims=keepdims), (self,), backward, "sum")

    def mean(self, axis: Optional[int] = None, keepdims: bool = False) -> "Tensor":
        count = self.data.size if axis is None else self.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        original = self.shape
        return Tensor._from_op(
            self.data.reshape(shape), (self,), lambda g: (g.reshape(original),), "reshape"
        )

    def unsqueeze(self, axis: int) -> "Tensor":
        axis = axis if axis >= 0 else self.ndim + 1 + axis
        return self.reshape(self.shape[:axis] + (1,) + self.shape[axis:])

    def squeeze(self, axis: int) -> "Tensor":
        axis = axis if axis >= 0 else self.ndim + axis
        if self.shape[axis] != 1:
            raise DimensionError(f"cannot squeeze axis {axis} of extent {self.shape[axis]}", self.shape)
        return self.reshape(self.shape[:axis] + self.shape[axis + 1:])

    def swapaxes(self, axis1: int = -1, axis2: int = -2) -> "Tensor":
        return Tensor._from_op(
            np.swapaxes(self.data, axis1, axis2),
            (self,),
            lambda g: (np.swapaxes(g, axis1, axis2),),
            "swapaxes",
        )

    @property
    def T(self) -> "Tensor":
        return self.swapaxes(-1, -2)

    def __getitem__(self, index) -> "Tensor":
        shape = self.shape
        advanced = _has_advanced_index(index)

        def backward(g):
            grad = np.zeros(shape, dtype=DTYPE)
            if advanced:
                np.add.at(grad, index, g)
            else:
                grad[index] += g
            return (grad,)

        return Tensor._from_op(self.data[index], (self,), backward, "getitem")

    # ------------------------------------------------------------------
    # Elementwise nonlinearities
    # ------------------------------------------------------------------

    def exp(self) -> "Tensor":
        out = np.exp(self.data)
        return Tensor._from_op(out, (self,), lambda g: (g * out,), "exp")

    def log(self) -> "Tensor":
        a = self.data
        return Tensor._from_op(np.log(a), (self,), lambda g: (g / a,), "log")

    def tanh(self) -> "Tensor":
        out = np.tanh(self.data)
        return Tensor._from_op(out, (self,), lambda g: (g * (1.0 - out * out),), "tanh")

    def sigmoid(self) -> "Tensor":
        a = self.data
        positive = a >= 0
        z = np.exp(-np.abs(a))
        out = np.where(positive, 1.0 / (1.0 + z), z / (1.0 + z))
        return Tensor._from_op(out, (self,), lambda g: (g * out * (1.0 - out),), "sigmoid")

    def relu(self) -> "Tensor":
        a = self.data
        return Tensor._from_op(
            np.maximum(a, 0.0), (self,), lambda g: (g * (a > 0),), "relu"
        )

    def elu(self) -> "Tensor":
        a = self.data
        negative_part = np.exp(np.minimum(a, 0.0))
        out = np.where(a >= 0, a, np.expm1(np.minimum(a, 0.0)))
        return Tensor._from_op(
            out, (self,), lambda g: (g * np.where(a >= 0, 1.0, negative_part),), "elu"
        )

    def celu_plus_one(self) -> "Tensor":
        a = self.data
        negative_part = np.exp(np.minimum(a, 0.0))
        out = np.where(a < 0, negative_part, a + 1.0)
        return Tensor._from_op(
            out, (self,), lambda g: (g * np.where(a < 0, negative_part, 1.0),), "celu_plus_one"
        )


def as_tensor(value: ArrayLike) -> Tensor:
    """Wrap plain numbers and arrays as constant tensors; pass tensors through."""
    return value if isinstance(value, Tensor) else Tensor(value)


# ============================================================================
# Structural operations
# ============================================================================

def matmul(a: Tensor, b: Tensor) -> Tensor:
    """
    Matrix product with numpy batch broadcasting over leading axes.

    Raises:
        DimensionError: If either operand is not at least 2-D or the inner
            extents disagree
    """
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError("matmul inner extents disagree", a.shape, b.shape)
    a_data, b_data = a.data, b.data

    def backward(g):
        grad_a = _unbroadcast(np.matmul(g, np.swapaxes(b_data, -1, -2)), a_data.shape)
        grad_b = _unbroadcast(np.matmul(np.swapaxes(a_data, -1, -2), g), b_data.shape)
        return grad_a, grad_b

    return Tensor._from_op(np.matmul(a_data, b_data), (a, b), backward, "matmul")


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """
    Apply ``weight`` (out × in) to the last axis of ``x``: ``x·Wᵀ (+ b)``.

    ``x`` may carry any number of leading axes, including none.
    """
    if weight.ndim != 2 or x.shape[-1] != weight.shape[1]:
        raise DimensionError("linear input does not match weight", x.shape, weight.shape)
    x_data, w_data = x.data, weight.data
    out_dim, in_dim = w_data.shape

    def backward(g):
        grad_x = np.matmul(g, w_data)
        grad_w = g.reshape(-1, out_dim).T @ x_data.reshape(-1, in_dim)
        return grad_x, grad_w

    out = Tensor._from_op(np.matmul(x_data, w_data.T), (x, weight), backward, "linear")
    if bias is not None:
        if bias.shape != (out_dim,):
            raise DimensionError("bias does not match weight rows", bias.shape, weight.shape)
        out = out + bias
    return out


def concat(tensors: List[Tensor], axis: int = -1) -> Tensor:
    """Concatenate tensors along ``axis``."""
    if not tensors:
        raise ContractError("concat needs at least one tensor")
    ndim = tensors[0].ndim
    axis = axis if axis >= 0 else ndim + axis
    for t in tensors:
        other_axes = t.shape[:axis] + t.shape[axis + 1:]
        if t.ndim != ndim or other_axes != tensors[0].shape[:axis] + tensors[0].shape[axis + 1:]:
            raise DimensionError("concat shapes disagree off the joined axis", tensors[0].shape, t.shape)
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    return Tensor._from_op(
        np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors), backward, "concat"
    )


def stack(tensors: List[Tensor], axis: int = 0) -> Tensor:
    """Stack equally shaped tensors along a new ``axis``."""
    if not tensors:
        raise ContractError("stack needs at least one tensor")
    for t in tensors:
        if t.shape != tensors[0].shape:
            raise DimensionError("stack shapes disagree", tensors[0].shape, t.shape)
    count = len(tensors)

    def backward(g):
        return tuple(np.take(g, i, axis=axis) for i in range(count))

    return Tensor._from_op(
        np.stack([t.data for t in tensors], axis=axis), tuple(tensors), backward, "stack"
    )


# ============================================================================
# Graph and backward pass
# ============================================================================

class ComputeGraph:
    """
    Topologically ordered record of the operations that produced ``output``.

    ``nodes`` lists every recorded tensor reachable from the output, parents
    before children; ``backward`` visits them in exact reverse order, once.
    """

    def __init__(self, output: Tensor):
        self.output = output
        self.nodes: List[Tensor] = self._topological_order(output)

    @staticmethod
    def _topological_order(output: Tensor) -> List[Tensor]:
        order: List[Tensor] = []
        visited = set()
        stack_: List[Tuple[Tensor, bool]] = [(output, False)]
        while stack_:
            node, expanded = stack_.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack_.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in visited:
                    stack_.append((parent, False))
        return order

    def backward(self, seed: np.ndarray) -> None:
        grads = {id(self.output): seed}
        for node in reversed(self.nodes):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward_fn is None:
                node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            for parent, parent_grad in zip(node._parents, node._backward_fn(g)):
                if parent_grad is None or not parent.requires_grad:
                    continue
                key = id(parent)
                grads[key] = grads[key] + parent_grad if key in grads else parent_grad

    def release(self) -> None:
        for node in self.nodes:
            if not node._is_leaf:
                node._parents = ()
                node._backward_fn = None


def backward(loss: Tensor, retain_graph: bool = False) -> None:
    """
    Accumulate dLoss/dLeaf into ``grad`` of every reachable leaf that requires it.

    Repeated calls accumulate (``+=``); use ``zero_grad`` between steps.

    Raises:
        ContractError: If ``loss`` is not a single-element tensor, or its
            graph has already been released by an earlier backward
    """
    if loss.data.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        return
    if not loss._is_leaf and loss._backward_fn is None:
        raise ContractError("graph already released; pass retain_graph=True to backward twice")
    graph = ComputeGraph(loss)
    graph.backward(np.ones_like(loss.data))
    if not retain_graph:
        graph.release()


def zero_grad(tensors) -> None:
    """Reset the gradient accumulator of every tensor in ``tensors``."""
    for t in tensors:
        t.grad = None
