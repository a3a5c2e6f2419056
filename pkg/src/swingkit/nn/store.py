"""Named parameter collections, layer specs, and the checkpoint container.

A checkpoint is a directory holding `index.json` (names, shapes, dtype codes)
plus one GSMB blob per array.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import gsmb
from ..errors import ConfigError, FormatError, ShapeError
from .layers import lstm_cell, multihead_attention
from .tensor import Tensor, softmax


class ParameterStore:
    """Named parameters plus Adam state (first/second moments, step counter)."""

    def __init__(self, params: dict[str, Tensor] | None = None,
                 buffers: dict[str, Tensor] | None = None):
        self.params: dict[str, Tensor] = dict(params or {})
        self.buffers: dict[str, Tensor] = dict(buffers or {})
        self.state: dict[str, dict] = {}
        self.step: int = 0

    @classmethod
    def from_module(cls, module) -> "ParameterStore":
        return cls(dict(module.named_parameters()), dict(module.named_buffers()))

    def __getitem__(self, name: str) -> Tensor:
        if name in self.params:
            return self.params[name]
        if name in self.buffers:
            return self.buffers[name]
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return name in self.params or name in self.buffers

    def arrays(self) -> dict[str, np.ndarray]:
        out = {n: p.data for n, p in self.params.items()}
        out.update({n: b.data for n, b in self.buffers.items()})
        return out


# ---- checkpoint container --------------------------------------------------

def save_checkpoint(path, arrays: dict[str, np.ndarray], meta: dict | None = None):
    """Write arrays into a checkpoint directory (index.json + GSMB blobs)."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    index = {"format": "swingkit-checkpoint", "version": 1, "params": [], "meta": meta or {}}
    for i, (name, arr) in enumerate(arrays.items()):
        fname = f"p{i:04d}.bin"
        gsmb.write_array(path / fname, arr)
        index["params"].append({
            "name": name, "shape": list(arr.shape),
            "dtype": gsmb.dtype_code(arr.dtype), "file": fname,
        })
    (path / "index.json").write_text(json.dumps(index, indent=1))


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    """Read a checkpoint directory back into {name: array} plus its meta dict."""
    path = Path(path)
    index_path = path / "index.json"
    if not index_path.exists():
        raise FormatError(f"{index_path}: missing checkpoint index")
    try:
        index = json.loads(index_path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{index_path}: invalid JSON ({exc})") from exc
    if index.get("format") != "swingkit-checkpoint":
        raise FormatError(f"{index_path}: not a checkpoint index")
    arrays = {}
    for entry in index["params"]:
        blob = path / entry["file"]
        if not blob.exists():
            raise FormatError(f"{index_path}: listed blob {entry['file']} is missing")
        arr = gsmb.read_array(blob)
        if list(arr.shape) != entry["shape"]:
            raise FormatError(f"{blob}: shape {list(arr.shape)} != index {entry['shape']}")
        arrays[entry["name"]] = arr
    return arrays, index.get("meta", {})


# ---- layer specs ------------------------------------------------------------

KINDS = ("linear", "conv1x1-over-time", "layernorm", "silu", "relu", "softmax",
         "dropout", "embedding", "lstm-cell", "multihead-attention")


@dataclass
class LayerSpec:
    """Declarative description of one primitive, resolved against a store."""

    kind: str
    in_dim: int = 0
    out_dim: int = 0
    length: int = 0       # conv1x1-over-time window
    width: int = 0        # attention model width
    heads: int = 0
    hidden: int = 0       # lstm-cell hidden size
    vocab: int = 0
    rate: float = 0.0     # dropout
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown layer kind {self.kind!r}")
        if self.kind == "multihead-attention":
            if self.heads <= 0 or self.width % self.heads != 0:
                raise ConfigError(f"heads {self.heads} must divide width {self.width}")

    def param_names(self) -> list[str]:
        return {
            "linear": ["weight", "bias"],
            "conv1x1-over-time": ["weight", "bias"],
            "layernorm": ["gamma", "beta"],
            "embedding": ["weight"],
            "lstm-cell": ["w_ih", "w_hh", "b"],
            "multihead-attention": ["wq.weight", "wq.bias", "wk.weight", "wk.bias",
                                    "wv.weight", "wv.bias", "wo.weight", "wo.bias"],
        }.get(self.kind, [])

    def init_params(self, rng: np.random.Generator, dtype=np.float64) -> ParameterStore:
        """Random parameters for this spec (handy for tests and grad checks)."""
        def u(shape, fan):
            b = 1.0 / np.sqrt(max(fan, 1))
            return Tensor(rng.uniform(-b, b, size=shape).astype(dtype), requires_grad=True)

        k = self.kind
        if k == "linear":
            p = {"weight": u((self.in_dim, self.out_dim), self.in_dim),
                 "bias": u((self.out_dim,), self.in_dim)}
        elif k == "conv1x1-over-time":
            p = {"weight": u((self.length, self.length), self.length),
                 "bias": u((self.length,), self.length)}
        elif k == "layernorm":
            p = {"gamma": Tensor(np.ones(self.in_dim, dtype=dtype), requires_grad=True),
                 "beta": Tensor(np.zeros(self.in_dim, dtype=dtype), requires_grad=True)}
        elif k == "embedding":
            p = {"weight": u((self.vocab, self.out_dim), self.out_dim)}
        elif k == "lstm-cell":
            h = self.hidden
            p = {"w_ih": u((self.in_dim, 4 * h), h), "w_hh": u((h, 4 * h), h),
                 "b": u((4 * h,), h)}
        elif k == "multihead-attention":
            w = self.width
            p = {}
            for name in ("wq", "wk", "wv", "wo"):
                p[f"{name}.weight"] = u((w, w), w)
                p[f"{name}.bias"] = u((w,), w)
        else:
            p = {}
        return ParameterStore(p)


def primitive_forward(spec: LayerSpec, x, params: ParameterStore, *,
                      training=False, rng=None, mask=None):
    """Evaluate one primitive described by `spec` on input `x`.

    `x` is a Tensor (or array, promoted to a constant Tensor); parameters are
    read from `params` under the names in spec.param_names().
    """
    if not isinstance(x, Tensor):
        x = Tensor(np.asarray(x))
    for name in spec.param_names():
        if name not in params:
            raise ConfigError(f"{spec.kind}: store is missing parameter {name!r}")
    k = spec.kind
    if k == "linear":
        w = params["weight"]
        if x.shape[-1] != w.shape[0]:
            raise ShapeError(f"linear: input last axis {x.shape[-1]} != in_dim {w.shape[0]}")
        return x @ w + params["bias"]
    if k == "conv1x1-over-time":
        w = params["weight"]
        if x.shape[-2] != w.shape[0]:
            raise ShapeError(f"conv1x1-over-time: time axis {x.shape[-2]} "
                             f"!= length {w.shape[0]}")
        return w @ x + params["bias"].reshape(-1, 1)
    if k == "layernorm":
        mu = x.mean(axis=-1, keepdims=True)
        xc = x - mu
        var = (xc * xc).mean(axis=-1, keepdims=True)
        return xc / (var + 1e-5).sqrt() * params["gamma"] + params["beta"]
    if k == "silu":
        return x.silu()
    if k == "relu":
        return x.relu()
    if k == "softmax":
        return softmax(x, axis=-1)
    if k == "dropout":
        if not training or spec.rate == 0.0:
            return x
        if rng is None:
            raise ConfigError("dropout in training mode requires an rng")
        keep = (rng.random(x.shape) >= spec.rate).astype(x.dtype)
        return x * (keep / (1.0 - spec.rate))
    if k == "embedding":
        from .tensor import take_rows
        return take_rows(params["weight"], np.asarray(x.data, dtype=np.int64))
    if k == "lstm-cell":
        h = Tensor(np.zeros(x.shape[:-1] + (spec.hidden,), dtype=x.dtype))
        c = Tensor(np.zeros_like(h.data))
        h2, _ = lstm_cell(x, h, c, params["w_ih"], params["w_hh"], params["b"])
        return h2
    if k == "multihead-attention":
        return multihead_attention(
            x, spec.heads,
            params["wq.weight"], params["wq.bias"], params["wk.weight"], params["wk.bias"],
            params["wv.weight"], params["wv.bias"], params["wo.weight"], params["wo.bias"],
            mask=mask)
    raise ConfigError(f"unknown layer kind {k!r}")
