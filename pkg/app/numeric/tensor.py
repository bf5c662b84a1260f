"""Dense tensors with reverse-mode gradients.

A ``Tensor`` wraps a numpy array. Every operation applied through a
``Function`` records its inputs on the output tensor, and ``backward`` walks
that graph in reverse topological order accumulating ``grad`` buffers on the
leaves that require them.
"""
from __future__ import annotations

import threading
from contextlib import contextmanager
from typing import Iterator, Optional, Sequence

import numpy as np

from app.core.errors import ArgumentError

_grad_mode = threading.local()


def is_grad_enabled() -> bool:
    return getattr(_grad_mode, "enabled", True)


@contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording on the current thread."""
    previous = is_grad_enabled()
    _grad_mode.enabled = False
    try:
        yield
    finally:
        _grad_mode.enabled = previous


class Tensor:
    def __init__(self, data, requires_grad: bool = False, _ctx: Optional["Function"] = None):
        self.data = data if isinstance(data, np.ndarray) else np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self._ctx = _ctx

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def T(self) -> "Tensor":
        from app.numeric import ops
        return ops.Transpose.apply(self)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad})"

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    def __add__(self, other):
        from app.numeric import ops
        return ops.Add.apply(self, other)

    def __radd__(self, other):
        from app.numeric import ops
        return ops.Add.apply(other, self)

    def __sub__(self, other):
        from app.numeric import ops
        return ops.Sub.apply(self, other)

    def __rsub__(self, other):
        from app.numeric import ops
        return ops.Sub.apply(other, self)

    def __mul__(self, other):
        from app.numeric import ops
        return ops.Mul.apply(self, other)

    def __rmul__(self, other):
        from app.numeric import ops
        return ops.Mul.apply(other, self)

    def __neg__(self):
        from app.numeric import ops
        return ops.Neg.apply(self)

    def __matmul__(self, other):
        from app.numeric import ops
        return ops.MatMul.apply(self, other)

    def __getitem__(self, index):
        from app.numeric import ops
        return ops.GetItem.apply(self, index=index)

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        from app.numeric import ops
        return ops.Sum.apply(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape) -> "Tensor":
        from app.numeric import ops
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.Reshape.apply(self, shape=shape)

    def tanh(self) -> "Tensor":
        from app.numeric import ops
        return ops.Tanh.apply(self)

    def sigmoid(self) -> "Tensor":
        from app.numeric import ops
        return ops.Sigmoid.apply(self)

    def backward(self, grad: Optional[np.ndarray] = None) -> None:
        """Populate ``grad`` on every tensor this one depends on."""
        if grad is None:
            if self.data.size != 1:
                raise ArgumentError(f"backward needs a scalar loss, got shape {self.shape}")
            grad = np.ones_like(self.data)
        if not self.requires_grad:
            return

        order = _topological_order(self)
        self.grad = grad if self.grad is None else self.grad + grad
        for node in reversed(order):
            ctx = node._ctx
            if ctx is None or node.grad is None:
                continue
            parent_grads = ctx.backward(node.grad)
            for parent, parent_grad in zip(ctx.parents, parent_grads):
                if parent_grad is None or not parent.requires_grad:
                    continue
                parent.grad = parent_grad if parent.grad is None else parent.grad + parent_grad
            # intermediate buffers are not needed once propagated
            node.grad = None


class Parameter(Tensor):
    """A named leaf tensor owned by a model."""

    def __init__(self, data: np.ndarray, name: str = "", trainable: bool = True):
        super().__init__(data, requires_grad=trainable)
        self.name = name
        self.trainable = trainable

    def __repr__(self) -> str:
        return f"Parameter(name={self.name!r}, shape={self.shape}, trainable={self.trainable})"


def _topological_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        if node._ctx is not None:
            for parent in node._ctx.parents:
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))
    return order


class Function:
    """One recorded operation: ``forward`` on arrays, ``backward`` on the output gradient."""

    parents: tuple[Tensor, ...]

    @classmethod
    def apply(cls, *inputs, **kwargs) -> Tensor:
        dtype = next((x.data.dtype for x in inputs if isinstance(x, Tensor)), np.dtype(np.float64))
        parents = tuple(x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=dtype)) for x in inputs)
        ctx = cls()
        ctx.parents = parents
        out = ctx.forward(*[p.data for p in parents], **kwargs)
        needs_grad = is_grad_enabled() and any(p.requires_grad for p in parents)
        return Tensor(out, requires_grad=needs_grad, _ctx=ctx if needs_grad else None)

    def forward(self, *arrays: np.ndarray, **kwargs) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> Sequence[Optional[np.ndarray]]:
        raise NotImplementedError


def as_tensor(value, dtype=None) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=dtype or np.float64))
