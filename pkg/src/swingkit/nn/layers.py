"""Layer primitives built on the Tensor autodiff core.

All weights use fan-in-scaled uniform initialization U(-1/sqrt(fan_in),
+1/sqrt(fan_in)) unless noted; every layer draws from the Generator handed
to its constructor, so model construction is reproducible from a seed.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, ShapeError
from .tensor import DEFAULT_DTYPE, Tensor, concat, softmax, stack, take_rows

# additive attention-mask fill; exp() underflows to exactly 0 for this value
NEG_FILL = -1e9


class Module:
    """Minimal module with parameter registration by attribute name."""

    def __init__(self):
        object.__setattr__(self, "_params", {})
        object.__setattr__(self, "_buffers", {})
        object.__setattr__(self, "_children", {})
        object.__setattr__(self, "training", True)

    def __setattr__(self, name, value):
        if isinstance(value, Tensor):
            if value.requires_grad:
                self._params[name] = value
            else:
                self._buffers[name] = value
        elif isinstance(value, Module):
            self._children[name] = value
        elif isinstance(value, (list, tuple)) and value and all(isinstance(v, Module) for v in value):
            for i, v in enumerate(value):
                self._children[f"{name}.{i}"] = v
        object.__setattr__(self, name, value)

    def named_parameters(self, prefix=""):
        for name, p in self._params.items():
            yield (prefix + name, p)
        for cname, child in self._children.items():
            yield from child.named_parameters(prefix + cname + ".")

    def named_buffers(self, prefix=""):
        for name, b in self._buffers.items():
            yield (prefix + name, b)
        for cname, child in self._children.items():
            yield from child.named_buffers(prefix + cname + ".")

    def parameters(self) -> dict:
        return dict(self.named_parameters())

    def state_arrays(self) -> dict:
        """All persistent arrays (trainable params then buffers), for checkpoints."""
        out = {name: p.data for name, p in self.named_parameters()}
        out.update({name: b.data for name, b in self.named_buffers()})
        return out

    def load_state_arrays(self, arrays: dict):
        own = dict(self.named_parameters())
        own.update(dict(self.named_buffers()))
        missing = set(own) - set(arrays)
        if missing:
            raise ConfigError(f"checkpoint is missing parameters: {sorted(missing)[:5]}")
        for name, t in own.items():
            src = arrays[name]
            if tuple(src.shape) != tuple(t.data.shape):
                raise ShapeError(f"parameter {name}: checkpoint shape {src.shape} "
                                 f"!= model shape {t.data.shape}")
            t.data = src.astype(t.data.dtype, copy=True)

    def train(self, mode=True):
        object.__setattr__(self, "training", mode)
        for child in self._children.values():
            child.train(mode)
        return self

    def eval(self):
        return self.train(False)

    def zero_grad(self):
        for _, p in self.named_parameters():
            p.grad = None

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)


def _uniform(rng: np.random.Generator, shape, fan_in, dtype) -> Tensor:
    bound = 1.0 / np.sqrt(max(fan_in, 1))
    return Tensor(rng.uniform(-bound, bound, size=shape).astype(dtype), requires_grad=True)


class Linear(Module):
    def __init__(self, in_dim, out_dim, rng, bias=True, dtype=DEFAULT_DTYPE):
        super().__init__()
        self.weight = _uniform(rng, (in_dim, out_dim), in_dim, dtype)
        self.bias = _uniform(rng, (out_dim,), in_dim, dtype) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        if x.shape[-1] != self.weight.shape[0]:
            raise ShapeError(f"linear: input last axis {x.shape[-1]} "
                             f"!= weight in_dim {self.weight.shape[0]}")
        y = x @ self.weight
        return y + self.bias if self.bias is not None else y


class TimeMix(Module):
    """Linear map along the time axis: out[.., t, d] = sum_s W[t,s] x[.., s, d] + b[t].

    Equivalent to a kernel-size-1 convolution that treats time as channels.
    """

    def __init__(self, length, rng, dtype=DEFAULT_DTYPE):
        super().__init__()
        self.weight = _uniform(rng, (length, length), length, dtype)
        self.bias = _uniform(rng, (length,), length, dtype)

    def forward(self, x: Tensor) -> Tensor:
        if x.shape[-2] != self.weight.shape[0]:
            raise ShapeError(f"time-mix: time axis {x.shape[-2]} "
                             f"!= configured length {self.weight.shape[0]}")
        return self.weight @ x + self.bias.reshape(-1, 1)


class LayerNorm(Module):
    """Normalize the last axis to zero mean / unit variance, then affine."""

    def __init__(self, dim, eps=1e-5, dtype=DEFAULT_DTYPE):
        super().__init__()
        self.gamma = Tensor(np.ones(dim, dtype=dtype), requires_grad=True)
        self.beta = Tensor(np.zeros(dim, dtype=dtype), requires_grad=True)
        self.eps = eps

    def forward(self, x: Tensor) -> Tensor:
        mu = x.mean(axis=-1, keepdims=True)
        xc = x - mu
        var = (xc * xc).mean(axis=-1, keepdims=True)
        y = xc / (var + self.eps).sqrt()
        return y * self.gamma + self.beta


class Embedding(Module):
    def __init__(self, vocab, dim, rng, dtype=DEFAULT_DTYPE):
        super().__init__()
        self.weight = _uniform(rng, (vocab, dim), dim, dtype)

    def forward(self, idx: np.ndarray) -> Tensor:
        idx = np.asarray(idx)
        vocab = self.weight.shape[0]
        if idx.size and (idx.min() < 0 or idx.max() >= vocab):
            raise ShapeError(f"embedding: index out of range [0, {vocab})")
        return take_rows(self.weight, idx)


class Dropout(Module):
    """Inverted dropout; identity in eval mode."""

    def __init__(self, rate, rng):
        super().__init__()
        if not 0.0 <= rate < 1.0:
            raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate
        self.rng = rng

    def forward(self, x: Tensor) -> Tensor:
        if not self.training or self.rate == 0.0:
            return x
        keep = (self.rng.random(x.shape) >= self.rate).astype(x.dtype)
        return x * (keep / (1.0 - self.rate))


def multihead_attention(x: Tensor, heads: int,
                        wq: Tensor, bq: Tensor, wk: Tensor, bk: Tensor,
                        wv: Tensor, bv: Tensor, wo: Tensor, bo: Tensor,
                        mask: np.ndarray | None = None) -> Tensor:
    """Bidirectional multi-head self-attention; no causal constraint.

    x: (S, W) or (B, S, W); mask: (S, S) bool, True = may attend. Positions a
    row is masked from receive exactly zero attention weight.
    """
    width = x.shape[-1]
    if width % heads != 0:
        raise ConfigError(f"attention width {width} is not divisible by heads {heads}")
    squeeze = x.ndim == 2
    if squeeze:
        x = x.reshape(1, *x.shape)
    b, s, w = x.shape
    d = width // heads

    def project(weight, bias):  # (B, S, W) -> (B, H, S, d)
        return (x @ weight + bias).reshape(b, s, heads, d).transpose(0, 2, 1, 3)

    q, k, v = project(wq, bq), project(wk, bk), project(wv, bv)
    logits = (q @ k.transpose(0, 1, 3, 2)) * (1.0 / np.sqrt(d))
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (s, s):
            raise ShapeError(f"attention mask shape {mask.shape} != ({s}, {s})")
        logits = logits + np.where(mask, 0.0, NEG_FILL).astype(logits.dtype)
    attn = softmax(logits, axis=-1)
    out = (attn @ v).transpose(0, 2, 1, 3).reshape(b, s, w)
    out = out @ wo + bo
    return out.reshape(s, w) if squeeze else out


class MultiheadAttention(Module):
    """Module wrapper around multihead_attention owning the projections."""

    def __init__(self, width, heads, rng, dtype=DEFAULT_DTYPE):
        super().__init__()
        if width % heads != 0:
            raise ConfigError(f"attention width {width} is not divisible by heads {heads}")
        self.heads = heads
        self.wq = Linear(width, width, rng, dtype=dtype)
        self.wk = Linear(width, width, rng, dtype=dtype)
        self.wv = Linear(width, width, rng, dtype=dtype)
        self.wo = Linear(width, width, rng, dtype=dtype)

    def forward(self, x: Tensor, mask: np.ndarray | None = None) -> Tensor:
        return multihead_attention(
            x, self.heads,
            self.wq.weight, self.wq.bias, self.wk.weight, self.wk.bias,
            self.wv.weight, self.wv.bias, self.wo.weight, self.wo.bias,
            mask=mask)


def lstm_cell(x: Tensor, h: Tensor, c: Tensor, w_ih: Tensor, w_hh: Tensor, b: Tensor):
    """One LSTM step; gate order (input, forget, cell, output)."""
    hidden = h.shape[-1]
    gates = x @ w_ih + h @ w_hh + b
    i = gates[..., 0 * hidden:1 * hidden].sigmoid()
    f = gates[..., 1 * hidden:2 * hidden].sigmoid()
    g = gates[..., 2 * hidden:3 * hidden].tanh()
    o = gates[..., 3 * hidden:4 * hidden].sigmoid()
    c_new = f * c + i * g
    h_new = o * c_new.tanh()
    return h_new, c_new


class LSTM(Module):
    """Single-layer LSTM, optionally bidirectional.

    Output is (B, T, H) or (B, T, 2H) with the forward pass in the first H
    channels and the backward pass in the last H.
    """

    def __init__(self, in_dim, hidden, rng, bidirectional=True, dtype=DEFAULT_DTYPE):
        super().__init__()
        self.hidden = hidden
        self.bidirectional = bidirectional
        self.w_ih_f = _uniform(rng, (in_dim, 4 * hidden), hidden, dtype)
        self.w_hh_f = _uniform(rng, (hidden, 4 * hidden), hidden, dtype)
        self.b_f = _uniform(rng, (4 * hidden,), hidden, dtype)
        if bidirectional:
            self.w_ih_b = _uniform(rng, (in_dim, 4 * hidden), hidden, dtype)
            self.w_hh_b = _uniform(rng, (hidden, 4 * hidden), hidden, dtype)
            self.b_b = _uniform(rng, (4 * hidden,), hidden, dtype)

    def _run(self, xs, w_ih, w_hh, b):
        bsz = xs[0].shape[0]
        h = Tensor(np.zeros((bsz, self.hidden), dtype=xs[0].dtype))
        c = Tensor(np.zeros((bsz, self.hidden), dtype=xs[0].dtype))
        outs = []
        for x in xs:
            h, c = lstm_cell(x, h, c, w_ih, w_hh, b)
            outs.append(h)
        return outs

    def forward(self, x: Tensor) -> Tensor:
        if x.ndim != 3:
            raise ShapeError(f"lstm expects (B, T, D), got ndim {x.ndim}")
        t = x.shape[1]
        steps = [x[:, i, :] for i in range(t)]
        fwd = self._run(steps, self.w_ih_f, self.w_hh_f, self.b_f)
        if not self.bidirectional:
            return stack(fwd, axis=1)
        bwd = self._run(steps[::-1], self.w_ih_b, self.w_hh_b, self.b_b)[::-1]
        return concat([stack(fwd, axis=1), stack(bwd, axis=1)], axis=-1)


def sinusoidal_positions(length: int, width: int, dtype=DEFAULT_DTYPE) -> np.ndarray:
    """Classic fixed sin/cos position table, shape (length, width)."""
    pos = np.arange(length)[:, None].astype(np.float64)
    i = np.arange(width)[None, :]
    angle = pos / np.power(10000.0, (2 * (i // 2)) / width)
    table = np.where(i % 2 == 0, np.sin(angle), np.cos(angle))
    return table.astype(dtype)


class BatchNorm1d(Module):
    """Batch normalization over the leading axis of (N, C) inputs."""

    def __init__(self, dim, momentum=0.1, eps=1e-5, dtype=DEFAULT_DTYPE):
        super().__init__()
        self.gamma = Tensor(np.ones(dim, dtype=dtype), requires_grad=True)
        self.beta = Tensor(np.zeros(dim, dtype=dtype), requires_grad=True)
        self.running_mean = Tensor(np.zeros(dim, dtype=dtype))
        self.running_var = Tensor(np.ones(dim, dtype=dtype))
        self.momentum = momentum
        self.eps = eps

    def forward(self, x: Tensor) -> Tensor:
        if self.training:
            mu = x.mean(axis=0, keepdims=True)
            xc = x - mu
            var = (xc * xc).mean(axis=0, keepdims=True)
            m = self.momentum
            self.running_mean.data = (1 - m) * self.running_mean.data + m * mu.data.reshape(-1)
            self.running_var.data = (1 - m) * self.running_var.data + m * var.data.reshape(-1)
            return xc / (var + self.eps).sqrt() * self.gamma + self.beta
        scale = self.gamma.data / np.sqrt(self.running_var.data + self.eps)
        shift = self.beta.data - self.running_mean.data * scale
        return x * scale + shift
