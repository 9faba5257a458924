"""Dense tensor with reverse-mode automatic differentiation.

A Tensor wraps a numpy array. Every differentiable operation is a Function
subclass; applying it records the Function as the creator of its output, so
the computation forms a DAG that Graph.record() linearises and backward()
walks in reverse topological order.

Tensors are immutable after construction apart from gradient accumulation
(and parameter updates performed by the optimizer, which rebind `.data`).
Graph recording is thread-confined: the grad-mode and precision switches are
thread-local.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, Iterator, Optional, Sequence, Union

import numpy as np

from config.errors import ContractError, NumericFailure
from config.settings import validation_mode

ArrayLike = Union["Tensor", np.ndarray, float, int, Sequence[float]]

_state = threading.local()


def _get(name: str, default: Any) -> Any:
    return getattr(_state, name, default)


def default_dtype() -> np.dtype:
    """Element type for newly created floating tensors (float32 unless overridden)."""
    return np.dtype(_get("dtype", np.float32))


def set_default_dtype(dtype: Any) -> None:
    dtype = np.dtype(dtype)
    if dtype not in (np.dtype(np.float32), np.dtype(np.float64)):
        raise ContractError(f"unsupported element type {dtype}; use float32 or float64")
    _state.dtype = dtype


@contextmanager
def precision(dtype: Any) -> Iterator[None]:
    """Temporarily switch the default element type (float64 for gradient checks)."""
    previous = default_dtype()
    set_default_dtype(dtype)
    try:
        yield
    finally:
        set_default_dtype(previous)


def grad_enabled() -> bool:
    return _get("grad_enabled", True)


@contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording (inference, validation, benchmarking)."""
    previous = grad_enabled()
    _state.grad_enabled = False
    try:
        yield
    finally:
        _state.grad_enabled = previous


def unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum out broadcast dimensions so that `grad` matches `shape`."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Function:
    """Base class for differentiable operations.

    Subclasses implement `forward` on raw arrays (saving whatever backward
    needs on `self`) and `backward`, which maps the output gradient to one
    gradient per input (None where the input needs none).
    """

    op_name: str = "function"

    def __init__(self, *inputs: "Tensor"):
        self.inputs = inputs
        self.needs_input_grad = tuple(t.requires_grad for t in inputs)

    def forward(self, *arrays: np.ndarray, **kwargs: Any) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        raise NotImplementedError

    @classmethod
    def apply(cls, *inputs: "Tensor", **kwargs: Any) -> "Tensor":
        fn = cls(*inputs)
        out = fn.forward(*(t.data for t in inputs), **kwargs)
        if validation_mode() and not np.all(np.isfinite(out)):
            if all(np.all(np.isfinite(t.data)) for t in inputs):
                raise NumericFailure(f"{cls.op_name}: non-finite output from finite inputs")
        requires_grad = grad_enabled() and any(fn.needs_input_grad)
        return Tensor(out, requires_grad=requires_grad, _creator=fn if requires_grad else None)


class Tensor:
    """n-dimensional array with an optional gradient."""

    __array_priority__ = 100

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        dtype: Any = None,
        _creator: Optional[Function] = None,
    ):
        if isinstance(data, Tensor):
            data = data.data
        array = np.asarray(data)
        if dtype is not None:
            array = array.astype(dtype, copy=False)
        elif not np.issubdtype(array.dtype, np.floating):
            array = array.astype(default_dtype())
        self.data: np.ndarray = array
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self._creator = _creator

    # --- introspection -----------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def is_leaf(self) -> bool:
        return self._creator is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.item())

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    def zero_grad(self) -> None:
        self.grad = None

    def accumulate_grad(self, grad: np.ndarray) -> None:
        grad = unbroadcast(grad, self.shape).astype(self.dtype, copy=False)
        self.grad = grad.copy() if self.grad is None else self.grad + grad

    def backward(self) -> None:
        backward(Graph.record(self), self)

    def __len__(self) -> int:
        return self.shape[0]

    def __repr__(self) -> str:
        grad = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{grad})"

    # --- operators -------------------------------------------------------------

    def _lift(self, other: ArrayLike) -> "Tensor":
        if isinstance(other, Tensor):
            return other
        return Tensor(np.asarray(other, dtype=self.dtype))

    def __add__(self, other: ArrayLike) -> "Tensor":
        from autodiff import functional as F
        return F.add(self, self._lift(other))

    __radd__ = __add__

    def __sub__(self, other: ArrayLike) -> "Tensor":
        from autodiff import functional as F
        return F.sub(self, self._lift(other))

    def __rsub__(self, other: ArrayLike) -> "Tensor":
        from autodiff import functional as F
        return F.sub(self._lift(other), self)

    def __mul__(self, other: ArrayLike) -> "Tensor":
        from autodiff import functional as F
        return F.mul(self, self._lift(other))

    __rmul__ = __mul__

    def __truediv__(self, other: ArrayLike) -> "Tensor":
        from autodiff import functional as F
        return F.div(self, self._lift(other))

    def __neg__(self) -> "Tensor":
        from autodiff import functional as F
        return F.mul(self, self._lift(-1.0))

    def __pow__(self, exponent: float) -> "Tensor":
        from autodiff import functional as F
        return F.power(self, exponent)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        from autodiff import functional as F
        return F.matmul(self, other)

    def __getitem__(self, index: Any) -> "Tensor":
        from autodiff import functional as F
        return F.index(self, index)

    def reshape(self, *shape: int) -> "Tensor":
        from autodiff import functional as F
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return F.reshape(self, shape)

    def transpose(self, *axes: int) -> "Tensor":
        from autodiff import functional as F
        return F.transpose(self, axes if axes else None)

    def sum(self, axis: Any = None, keepdims: bool = False) -> "Tensor":
        from autodiff import functional as F
        return F.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: Any = None, keepdims: bool = False) -> "Tensor":
        from autodiff import functional as F
        return F.mean(self, axis=axis, keepdims=keepdims)


class Parameter(Tensor):
    """A trainable leaf tensor."""

    def __init__(self, data: ArrayLike, dtype: Any = None):
        super().__init__(np.array(data, dtype=dtype or default_dtype()), requires_grad=True)


@dataclass
class GraphNode:
    node_id: int
    op: str
    inputs: tuple[int, ...]
    tensor: Tensor
    creator: Optional[Function]


@dataclass
class Graph:
    """Topologically ordered record of the computation that produced `outputs`."""

    nodes: list[GraphNode] = field(default_factory=list)
    outputs: list[int] = field(default_factory=list)

    @classmethod
    def record(cls, *outputs: Tensor) -> "Graph":
        graph = cls()
        ids: dict[int, int] = {}
        for out in outputs:
            stack: list[tuple[Tensor, bool]] = [(out, False)]
            while stack:
                tensor, expanded = stack.pop()
                key = id(tensor)
                if key in ids:
                    continue
                creator = tensor._creator
                if expanded or creator is None:
                    inputs = tuple(ids[id(t)] for t in creator.inputs) if creator else ()
                    node = GraphNode(
                        node_id=len(graph.nodes),
                        op=creator.op_name if creator else "leaf",
                        inputs=inputs,
                        tensor=tensor,
                        creator=creator,
                    )
                    ids[key] = node.node_id
                    graph.nodes.append(node)
                    continue
                stack.append((tensor, True))
                for parent in reversed(creator.inputs):
                    if id(parent) not in ids:
                        stack.append((parent, False))
            graph.outputs.append(ids[id(out)])
        return graph

    def __len__(self) -> int:
        return len(self.nodes)


def backward(graph: Graph, loss: Tensor) -> None:
    """Accumulate d(loss)/d(leaf) into `.grad` of every requires_grad leaf.

    Repeated calls without zeroing the gradients accumulate additively.
    """
    if loss.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        raise ContractError("loss does not require grad; nothing to differentiate")

    lookup = {id(node.tensor): node.node_id for node in graph.nodes}
    if id(loss) not in lookup:
        raise ContractError("loss was not recorded in this graph")

    grads: dict[int, np.ndarray] = {lookup[id(loss)]: np.ones(loss.shape, dtype=loss.dtype)}
    for node in reversed(graph.nodes):
        grad = grads.pop(node.node_id, None)
        if grad is None:
            continue
        if node.creator is None:
            if node.tensor.requires_grad:
                node.tensor.accumulate_grad(grad)
            continue
        input_grads = node.creator.backward(grad)
        for input_id, needs, g in zip(node.inputs, node.creator.needs_input_grad, input_grads):
            if not needs or g is None:
                continue
            g = unbroadcast(np.asarray(g), graph.nodes[input_id].tensor.shape)
            if input_id in grads:
                grads[input_id] = grads[input_id] + g
            else:
                grads[input_id] = g
