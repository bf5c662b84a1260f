from app.numeric.functional import (
    GRUParams,
    LSTMParams,
    affine,
    backward,
    concat,
    cross_entropy,
    embedding,
    gru_cell,
    lstm_cell,
    lstm_step,
    softmax,
    stack,
)
from app.numeric.optim import Adam, OptimizerState, adam_step, clip_grad_norm, global_grad_norm, init_optimizer_state
from app.numeric.tensor import Parameter, Tensor, no_grad

__all__ = [
    "Adam",
    "GRUParams",
    "LSTMParams",
    "OptimizerState",
    "Parameter",
    "Tensor",
    "adam_step",
    "affine",
    "backward",
    "clip_grad_norm",
    "concat",
    "cross_entropy",
    "embedding",
    "global_grad_norm",
    "gru_cell",
    "init_optimizer_state",
    "lstm_cell",
    "lstm_step",
    "no_grad",
    "softmax",
    "stack",
]
