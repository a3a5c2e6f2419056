"""Differentiable-computation substrate: tensors, layers, Adam, grad checks."""

from .gradcheck import GradCheckReport, grad_check
from .layers import (BatchNorm1d, Dropout, Embedding, LayerNorm, Linear, LSTM,
                     Module, MultiheadAttention, TimeMix, lstm_cell,
                     multihead_attention, sinusoidal_positions)
from .optim import Adam, adam_step
from .store import (KINDS, LayerSpec, ParameterStore, load_checkpoint,
                    primitive_forward, save_checkpoint)
from .tensor import (DEFAULT_DTYPE, Tensor, concat, cross_entropy, log_softmax,
                     mse, no_grad, round_ste, smooth_l1, softmax, stack,
                     take_rows, tensor)

__all__ = [
    "Adam", "BatchNorm1d", "DEFAULT_DTYPE", "Dropout", "Embedding",
    "GradCheckReport", "KINDS", "LSTM", "LayerNorm", "LayerSpec", "Linear",
    "Module", "MultiheadAttention", "ParameterStore", "Tensor", "TimeMix",
    "adam_step", "concat", "cross_entropy", "grad_check", "load_checkpoint",
    "log_softmax", "lstm_cell", "mse", "multihead_attention", "no_grad",
    "primitive_forward", "round_ste", "save_checkpoint", "sinusoidal_positions",
    "smooth_l1", "softmax", "stack", "take_rows", "tensor",
]
