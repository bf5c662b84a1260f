"""Parameter containers and the layers the ASR variants are assembled from."""
from __future__ import annotations

from typing import Iterator, Optional

import numpy as np

from app.core.errors import ArgumentError, ShapeError
from app.numeric import ops
from app.numeric.functional import GRUParams, LSTMParams, affine, embedding, gru_cell, lstm_cell, lstm_step, softmax
from app.numeric.tensor import Parameter, Tensor


def uniform_init(shape: tuple[int, ...], fan_in: int, rng: np.random.Generator, dtype) -> Parameter:
    """U(-k, k) with k = 1/sqrt(fan_in)."""
    bound = 1.0 / np.sqrt(fan_in)
    return Parameter(rng.uniform(-bound, bound, size=shape).astype(dtype))


def zeros_init(shape: tuple[int, ...], dtype) -> Parameter:
    return Parameter(np.zeros(shape, dtype=dtype))


class Module:
    """Walks attributes in definition order to find parameters and submodules."""

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Parameter]]:
        seen: set[int] = set()
        for name, param in self._walk(prefix):
            if id(param) in seen:
                continue
            seen.add(id(param))
            yield name, param

    def _walk(self, prefix: str) -> Iterator[tuple[str, Parameter]]:
        for attr, value in vars(self).items():
            path = f"{prefix}{attr}"
            if isinstance(value, Parameter):
                yield path, value
            elif isinstance(value, Module):
                yield from value._walk(f"{path}.")
            elif isinstance(value, (list, tuple)):
                for index, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item._walk(f"{path}.{index}.")

    def parameters(self) -> list[Parameter]:
        return [p for _, p in self.named_parameters()]

    def assign_parameter_names(self) -> None:
        for name, param in self.named_parameters():
            param.name = name

    def parameter_count(self) -> int:
        return int(sum(p.data.size for p in self.parameters()))

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()


class Linear(Module):
    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator, dtype, bias: bool = True):
        self.weight = uniform_init((in_dim, out_dim), in_dim, rng, dtype)
        self.bias = zeros_init((out_dim,), dtype) if bias else None

    @property
    def in_dim(self) -> int:
        return self.weight.shape[0]

    def __call__(self, x: Tensor) -> Tensor:
        return affine(x, self.weight, self.bias)


class Embedding(Module):
    def __init__(self, vocab_size: int, dim: int, rng: np.random.Generator, dtype):
        # fan-in taken as the embedding width: the tied output projection maps dim -> vocab
        self.weight = uniform_init((vocab_size, dim), dim, rng, dtype)

    def __call__(self, indices: np.ndarray) -> Tensor:
        return embedding(self.weight, indices)


class LSTMCell(Module):
    def __init__(self, in_dim: int, hidden: int, rng: np.random.Generator, dtype):
        self.hidden = hidden
        self.weight_ih = uniform_init((in_dim, 4 * hidden), in_dim, rng, dtype)
        self.weight_hh = uniform_init((hidden, 4 * hidden), hidden, rng, dtype)
        self.bias = zeros_init((4 * hidden,), dtype)

    def __call__(self, x: Tensor, h: Tensor, c: Tensor) -> tuple[Tensor, Tensor]:
        return lstm_cell(x, h, c, LSTMParams(self.weight_ih, self.weight_hh, self.bias))

    def project_inputs(self, xs: Tensor) -> Tensor:
        """Input half of the gates for a whole [B, S, in] sequence."""
        return affine(xs, self.weight_ih, self.bias)

    def step(self, input_gates: Tensor, h: Tensor, c: Tensor) -> tuple[Tensor, Tensor]:
        return lstm_step(input_gates, h, c, self.weight_hh, self.hidden)


class GRUCell(Module):
    def __init__(self, in_dim: int, hidden: int, rng: np.random.Generator, dtype):
        self.hidden = hidden
        self.weight_ih = uniform_init((in_dim, 3 * hidden), in_dim, rng, dtype)
        self.weight_hh = uniform_init((hidden, 3 * hidden), hidden, rng, dtype)
        self.bias_ih = zeros_init((3 * hidden,), dtype)
        self.bias_hh = zeros_init((3 * hidden,), dtype)

    def __call__(self, x: Tensor, h: Tensor) -> Tensor:
        return gru_cell(x, h, GRUParams(self.weight_ih, self.weight_hh, self.bias_ih, self.bias_hh))


class AdditiveAttention(Module):
    """score_i = w . tanh(W_k key_i + W_q query), weights = softmax(scores)."""

    def __init__(self, key_dim: int, query_dim: int, attn_dim: int, rng: np.random.Generator, dtype):
        self.key_proj = uniform_init((key_dim, attn_dim), key_dim, rng, dtype)
        self.query_proj = uniform_init((query_dim, attn_dim), query_dim, rng, dtype)
        self.score = uniform_init((attn_dim, 1), attn_dim, rng, dtype)

    def project_keys(self, keys: Tensor) -> Tensor:
        if keys.shape[-1] != self.key_proj.shape[0]:
            raise ShapeError(f"attention keys shape {keys.shape} does not match key projection {self.key_proj.shape}")
        return keys @ self.key_proj

    def __call__(
        self,
        keys: Tensor,
        query: Tensor,
        mask: Optional[np.ndarray] = None,
        projected_keys: Optional[Tensor] = None,
    ) -> tuple[Tensor, Tensor]:
        """Batched form: keys [B, n, d_k], query [B, d_q] -> (context [B, d_k], weights [B, n])."""
        batch, n, key_dim = keys.shape
        if n == 0:
            raise ArgumentError("attention over an empty key set")
        if projected_keys is None:
            projected_keys = self.project_keys(keys)
        q = (query @ self.query_proj).reshape(batch, 1, -1)
        energies = (projected_keys + q).tanh()
        scores = (energies @ self.score).reshape(batch, n)
        weights = softmax(scores, axis=-1, mask=mask)
        context = (weights.reshape(batch, 1, n) @ keys).reshape(batch, key_dim)
        return context, weights


def additive_attention(keys: Tensor, query: Tensor, attention: AdditiveAttention) -> tuple[Tensor, Tensor]:
    """Unbatched form: keys [n, d_k], query [d_q] -> (context [d_k], weights [n])."""
    if keys.ndim != 2 or keys.shape[0] == 0:
        raise ArgumentError(f"attention needs a non-empty [n, d] key matrix, got shape {keys.shape}")
    context, weights = attention(keys.reshape(1, *keys.shape), query.reshape(1, -1))
    return context.reshape(-1), weights.reshape(-1)


def blend(new: Tensor, old: Tensor, keep_new: Optional[np.ndarray]) -> Tensor:
    """Row-wise select ``new`` where ``keep_new`` is 1 and ``old`` where it is 0."""
    if keep_new is None:
        return new
    return ops.Add.apply(new * keep_new, old * (1.0 - keep_new))
