"""Recorded primitives. Each class maps input arrays to an output array and
returns one gradient per input in ``backward``."""
from __future__ import annotations

from typing import Optional

import numpy as np

from app.numeric.tensor import Function


def unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    added = grad.ndim - len(shape)
    if added > 0:
        grad = grad.sum(axis=tuple(range(added)))
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Add(Function):
    def forward(self, x, y):
        self.shapes = (x.shape, y.shape)
        return x + y

    def backward(self, grad):
        sx, sy = self.shapes
        return unbroadcast(grad, sx), unbroadcast(grad, sy)


class Sub(Function):
    def forward(self, x, y):
        self.shapes = (x.shape, y.shape)
        return x - y

    def backward(self, grad):
        sx, sy = self.shapes
        return unbroadcast(grad, sx), unbroadcast(-grad, sy)


class Neg(Function):
    def forward(self, x):
        return -x

    def backward(self, grad):
        return (-grad,)


class Mul(Function):
    def forward(self, x, y):
        self.x, self.y = x, y
        return x * y

    def backward(self, grad):
        return unbroadcast(grad * self.y, self.x.shape), unbroadcast(grad * self.x, self.y.shape)


class MatMul(Function):
    def forward(self, x, y):
        self.x, self.y = x, y
        return np.matmul(x, y)

    def backward(self, grad):
        gx = np.matmul(grad, np.swapaxes(self.y, -1, -2))
        gy = np.matmul(np.swapaxes(self.x, -1, -2), grad)
        return unbroadcast(gx, self.x.shape), unbroadcast(gy, self.y.shape)


class Transpose(Function):
    def forward(self, x):
        return np.swapaxes(x, -1, -2)

    def backward(self, grad):
        return (np.swapaxes(grad, -1, -2),)


class Tanh(Function):
    def forward(self, x):
        self.y = np.tanh(x)
        return self.y

    def backward(self, grad):
        return (grad * (1.0 - self.y * self.y),)


class Sigmoid(Function):
    def forward(self, x):
        # tanh form does not overflow for large |x|
        self.y = 0.5 * (1.0 + np.tanh(0.5 * x))
        return self.y

    def backward(self, grad):
        return (grad * self.y * (1.0 - self.y),)


class Softmax(Function):
    def forward(self, x, axis: int = -1, mask: Optional[np.ndarray] = None):
        self.axis = axis
        scores = x if mask is None else np.where(mask, x, -np.inf)
        shifted = scores - scores.max(axis=axis, keepdims=True)
        exps = np.exp(shifted)
        self.y = exps / exps.sum(axis=axis, keepdims=True)
        return self.y

    def backward(self, grad):
        inner = (grad * self.y).sum(axis=self.axis, keepdims=True)
        return (self.y * (grad - inner),)


class Sum(Function):
    def forward(self, x, axis=None, keepdims: bool = False):
        self.shape, self.axis, self.keepdims = x.shape, axis, keepdims
        return np.asarray(x.sum(axis=axis, keepdims=keepdims))

    def backward(self, grad):
        if self.axis is not None and not self.keepdims:
            grad = np.expand_dims(grad, self.axis)
        return (np.broadcast_to(grad, self.shape).copy(),)


class Reshape(Function):
    def forward(self, x, shape):
        self.shape = x.shape
        return x.reshape(shape)

    def backward(self, grad):
        return (grad.reshape(self.shape),)


class GetItem(Function):
    def forward(self, x, index):
        self.shape, self.dtype, self.index = x.shape, x.dtype, index
        return np.array(x[index])

    def backward(self, grad):
        out = np.zeros(self.shape, dtype=self.dtype)
        np.add.at(out, self.index, grad)
        return (out,)


class Concat(Function):
    def forward(self, *xs, axis: int = -1):
        self.axis = axis
        self.bounds = np.cumsum([x.shape[axis] for x in xs])[:-1]
        return np.concatenate(xs, axis=axis)

    def backward(self, grad):
        return tuple(np.split(grad, self.bounds, axis=self.axis))


class Stack(Function):
    def forward(self, *xs, axis: int = 0):
        self.axis = axis
        return np.stack(xs, axis=axis)

    def backward(self, grad):
        return tuple(np.moveaxis(grad, self.axis, 0))


class Take(Function):
    """Row lookup ``weight[indices]``; gradients scatter-add back into rows."""

    def forward(self, weight, indices=None):
        self.shape, self.dtype = weight.shape, weight.dtype
        self.indices = np.asarray(indices, dtype=np.int64)
        return weight[self.indices]

    def backward(self, grad):
        out = np.zeros(self.shape, dtype=self.dtype)
        np.add.at(out, self.indices, grad)
        return (out,)


class SoftmaxCrossEntropy(Function):
    """Mean negative log-likelihood of ``targets`` over the positions where ``mask`` holds."""

    def forward(self, logits, targets=None, mask=None):
        self.targets = np.asarray(targets, dtype=np.int64)
        self.mask = np.asarray(mask, dtype=bool)
        shifted = logits - logits.max(axis=-1, keepdims=True)
        log_norm = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
        log_probs = shifted - log_norm
        self.probs = np.exp(log_probs)
        self.count = max(int(self.mask.sum()), 1)
        safe_targets = np.where(self.mask, self.targets, 0)
        picked = np.take_along_axis(log_probs, safe_targets[..., None], axis=-1)[..., 0]
        return np.asarray(-(picked * self.mask).sum() / self.count, dtype=logits.dtype)

    def backward(self, grad):
        g = self.probs.copy()
        safe_targets = np.where(self.mask, self.targets, 0)
        np.put_along_axis(
            g, safe_targets[..., None],
            np.take_along_axis(g, safe_targets[..., None], axis=-1) - 1.0, axis=-1,
        )
        g *= self.mask[..., None] / self.count
        return (g * grad,)
