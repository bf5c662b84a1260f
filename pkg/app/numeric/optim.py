from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from app.core.errors import ArgumentError, StateError
from app.numeric.tensor import Parameter


@dataclass
class OptimizerState:
    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    first_moment: dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: dict[str, np.ndarray] = field(default_factory=dict)


def init_optimizer_state(params: Sequence[Parameter], learning_rate: float, **kwargs) -> OptimizerState:
    if learning_rate <= 0:
        raise ArgumentError(f"learning rate must be positive, got {learning_rate}")
    state = OptimizerState(learning_rate=learning_rate, **kwargs)
    for p in params:
        if p.name in state.first_moment:
            raise StateError(f"duplicate parameter name {p.name!r}")
        state.first_moment[p.name] = np.zeros_like(p.data)
        state.second_moment[p.name] = np.zeros_like(p.data)
    return state


def global_grad_norm(params: Sequence[Parameter]) -> float:
    total = 0.0
    for p in params:
        if p.grad is not None:
            total += float(np.sum(np.square(p.grad, dtype=np.float64)))
    return math.sqrt(total)


def clip_grad_norm(params: Sequence[Parameter], threshold: float) -> float:
    """Rescale all gradients so their global L2 norm is at most ``threshold``.

    Returns the factor that was applied (1.0 when no clipping happened).
    """
    if threshold <= 0:
        raise ArgumentError(f"clip threshold must be positive, got {threshold}")
    norm = global_grad_norm(params)
    if norm <= threshold:
        return 1.0
    factor = threshold / norm
    for p in params:
        if p.grad is not None:
            p.grad = p.grad * factor
    return factor


def adam_step(state: OptimizerState, params: Sequence[Parameter]) -> OptimizerState:
    """One bias-corrected Adam update. Missing gradients count as zeros."""
    for p in params:
        if p.name not in state.first_moment:
            raise StateError(f"optimizer state has no buffers for parameter {p.name!r}")
        if state.first_moment[p.name].shape != p.shape:
            raise StateError(
                f"optimizer state shape {state.first_moment[p.name].shape} does not match "
                f"parameter {p.name!r} shape {p.shape}"
            )

    state.step += 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1 ** state.step
    correction2 = 1.0 - b2 ** state.step
    for p in params:
        if not p.trainable:
            continue
        grad = p.grad if p.grad is not None else np.zeros_like(p.data)
        m = b1 * state.first_moment[p.name] + (1.0 - b1) * grad
        v = b2 * state.second_moment[p.name] + (1.0 - b2) * grad * grad
        state.first_moment[p.name] = m
        state.second_moment[p.name] = v
        update = state.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
        p.data = (p.data - update).astype(p.data.dtype, copy=False)
    return state


class Adam:
    """Thin stateful wrapper pairing a parameter list with its ``OptimizerState``."""

    def __init__(self, params: Sequence[Parameter], learning_rate: float, **kwargs):
        self.params = list(params)
        self.state = init_optimizer_state(self.params, learning_rate, **kwargs)

    @property
    def learning_rate(self) -> float:
        return self.state.learning_rate

    @learning_rate.setter
    def learning_rate(self, value: float) -> None:
        self.state.learning_rate = value

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

    def step(self) -> None:
        adam_step(self.state, self.params)
