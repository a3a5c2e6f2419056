"""Adam with decoupled weight decay, plus the functional single-step form."""

from __future__ import annotations

import numpy as np

from ..errors import NumericError, ShapeError
from .tensor import Tensor


def adam_step(store, grads: dict, lr: float, betas=(0.9, 0.999), eps=1e-8,
              weight_decay: float = 0.0):
    """Apply one bias-corrected Adam update to every parameter in `store`.

    `grads` maps parameter name -> gradient array. Weight decay is decoupled:
    it shrinks parameters directly and never enters the moment estimates.
    Returns the store (mutated in place).
    """
    b1, b2 = betas
    store.step += 1
    t = store.step
    for name, p in store.params.items():
        g = grads.get(name)
        if g is None:
            continue
        g = np.asarray(g)
        if g.shape != p.data.shape:
            raise ShapeError(f"gradient for {name} has shape {g.shape}, "
                             f"parameter has {p.data.shape}")
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for parameter {name}")
        st = store.state.setdefault(name, {
            "m": np.zeros_like(p.data), "v": np.zeros_like(p.data)})
        st["m"] = b1 * st["m"] + (1 - b1) * g
        st["v"] = b2 * st["v"] + (1 - b2) * (g * g)
        m_hat = st["m"] / (1 - b1 ** t)
        v_hat = st["v"] / (1 - b2 ** t)
        update = m_hat / (np.sqrt(v_hat) + eps)
        if weight_decay:
            update = update + weight_decay * p.data
        p.data = p.data - lr * update.astype(p.data.dtype, copy=False)
    return store


class Adam:
    """Stateful wrapper around adam_step for a dict of named Tensors.

    `param_groups` may assign per-name learning-rate scales, e.g. for a
    fine-tuned backbone running slower than its head.
    """

    def __init__(self, params: dict[str, Tensor], lr, betas=(0.9, 0.999),
                 eps=1e-8, weight_decay=0.0, lr_scales: dict[str, float] | None = None):
        from .store import ParameterStore
        self.store = ParameterStore(params)
        self.lr = lr
        self.betas = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.lr_scales = lr_scales or {}

    def step(self):
        if not self.lr_scales:
            grads = {n: p.grad for n, p in self.store.params.items() if p.grad is not None}
            adam_step(self.store, grads, self.lr, self.betas, self.eps, self.weight_decay)
            return
        # group parameters by lr scale, stepping each group at its own rate
        # while keeping a single shared step counter
        groups: dict[float, dict] = {}
        for n, p in self.store.params.items():
            if p.grad is None:
                continue
            groups.setdefault(self.lr_scales.get(n, 1.0), {})[n] = p.grad
        self.store.step += 1
        t = self.store.step
        self.store.step -= 1
        for scale, grads in groups.items():
            sub = _SubStore(self.store, set(grads), t)
            adam_step(sub, grads, self.lr * scale, self.betas, self.eps, self.weight_decay)
        self.store.step = t

    def zero_grad(self):
        for p in self.store.params.values():
            p.grad = None


class _SubStore:
    """View of a ParameterStore restricted to some names, with a pinned step."""

    def __init__(self, base, names, step):
        self.params = {n: p for n, p in base.params.items() if n in names}
        self.state = base.state
        self.step = step - 1  # adam_step increments back to `step`
