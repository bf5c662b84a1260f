"""Validated entry points for the neural primitives the models are built from."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from app.core.errors import ArgumentError, ShapeError
from app.numeric import ops
from app.numeric.tensor import Parameter, Tensor, as_tensor


@dataclass
class LSTMParams:
    """Gate blocks are laid out input, forget, candidate, output along the last axis."""

    weight_ih: Tensor  # [in, 4h]
    weight_hh: Tensor  # [h, 4h]
    bias: Tensor  # [4h]


@dataclass
class GRUParams:
    """Gate blocks are laid out reset, update, candidate along the last axis."""

    weight_ih: Tensor  # [in, 3h]
    weight_hh: Tensor  # [h, 3h]
    bias_ih: Tensor  # [3h]
    bias_hh: Tensor  # [3h]


def affine(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """``x @ weight + bias`` over the last axis of ``x``."""
    x = as_tensor(x)
    if weight.ndim != 2 or x.shape[-1] != weight.shape[0]:
        raise ShapeError(f"affine: input shape {x.shape} does not match weight shape {weight.shape}")
    out = x @ weight
    if bias is None:
        return out
    if bias.shape != (weight.shape[1],):
        raise ShapeError(f"affine: bias shape {bias.shape} does not match weight shape {weight.shape}")
    return out + bias


def softmax(scores: Tensor, axis: int = -1, mask: Optional[np.ndarray] = None) -> Tensor:
    """Max-shifted softmax; positions where ``mask`` is False get zero weight."""
    scores = as_tensor(scores)
    if scores.data.size == 0 or scores.shape[axis] == 0:
        raise ArgumentError("softmax over an empty axis")
    return ops.Softmax.apply(scores, axis=axis, mask=mask)


def _check_hidden(name: str, h_prev: Tensor, weight_hh: Tensor, blocks: int) -> int:
    hidden = h_prev.shape[-1]
    if weight_hh.shape != (hidden, blocks * hidden):
        raise ShapeError(f"{name}: hidden state shape {h_prev.shape} does not match weight_hh shape {weight_hh.shape}")
    return hidden


def lstm_cell(x: Tensor, h_prev: Tensor, c_prev: Tensor, params: LSTMParams) -> tuple[Tensor, Tensor]:
    hidden = _check_hidden("lstm_cell", h_prev, params.weight_hh, 4)
    if c_prev.shape != h_prev.shape:
        raise ShapeError(f"lstm_cell: cell shape {c_prev.shape} does not match hidden shape {h_prev.shape}")
    return lstm_step(affine(x, params.weight_ih, params.bias), h_prev, c_prev, params.weight_hh, hidden)


def lstm_step(input_gates: Tensor, h_prev: Tensor, c_prev: Tensor, weight_hh: Tensor, hidden: int) -> tuple[Tensor, Tensor]:
    """LSTM update from an already projected input (``x @ W_ih + b``), so sequences project once."""
    gates = input_gates + h_prev @ weight_hh
    i = gates[..., 0:hidden].sigmoid()
    f = gates[..., hidden:2 * hidden].sigmoid()
    g = gates[..., 2 * hidden:3 * hidden].tanh()
    o = gates[..., 3 * hidden:4 * hidden].sigmoid()
    c = f * c_prev + i * g
    h = o * c.tanh()
    return h, c


def gru_cell(x: Tensor, h_prev: Tensor, params: GRUParams) -> Tensor:
    """h = (1 - z) * h_prev + z * candidate."""
    hidden = _check_hidden("gru_cell", h_prev, params.weight_hh, 3)
    gi = affine(x, params.weight_ih, params.bias_ih)
    gh = affine(h_prev, params.weight_hh, params.bias_hh)
    r = (gi[..., 0:hidden] + gh[..., 0:hidden]).sigmoid()
    z = (gi[..., hidden:2 * hidden] + gh[..., hidden:2 * hidden]).sigmoid()
    candidate = (gi[..., 2 * hidden:] + r * gh[..., 2 * hidden:]).tanh()
    return h_prev + z * (candidate - h_prev)


def cross_entropy(logits: Tensor, targets: np.ndarray, mask: Optional[np.ndarray] = None) -> Tensor:
    """Mean ``-log softmax(logits)[target]`` over positions where ``mask`` is True."""
    targets = np.asarray(targets, dtype=np.int64)
    if logits.shape[:-1] != targets.shape:
        raise ShapeError(f"cross_entropy: logits shape {logits.shape} does not match targets shape {targets.shape}")
    mask = np.ones(targets.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    vocab = logits.shape[-1]
    live = targets[mask]
    if live.size and (live.min() < 0 or live.max() >= vocab):
        raise ArgumentError(f"cross_entropy: target index out of range for {vocab} classes")
    return ops.SoftmaxCrossEntropy.apply(logits, targets=targets, mask=mask)


def stack(tensors: list[Tensor], axis: int = 0) -> Tensor:
    return ops.Stack.apply(*tensors, axis=axis)


def concat(tensors: list[Tensor], axis: int = -1) -> Tensor:
    return ops.Concat.apply(*tensors, axis=axis)


def embedding(weight: Parameter, indices: np.ndarray) -> Tensor:
    return ops.Take.apply(weight, indices=indices)


def backward(loss: Tensor) -> None:
    if loss.data.size != 1:
        raise ArgumentError(f"backward needs a scalar loss, got shape {loss.shape}")
    loss.backward()
