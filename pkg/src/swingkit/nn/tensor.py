"""Reverse-mode autodiff over dense numpy arrays.

A Tensor wraps an ndarray plus the closures needed to backpropagate through
the graph that produced it. The op set is exactly what the models in this
package need; it is not a general autodiff framework. Gradient accumulation
order is fixed by graph construction order, so runs are bit-reproducible.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError

DEFAULT_DTYPE = np.float32

_grad_enabled = True


class no_grad:
    """Context manager that disables graph construction (pure inference)."""

    def __enter__(self):
        global _grad_enabled
        self._prev = _grad_enabled
        _grad_enabled = False
        return self

    def __exit__(self, *exc):
        global _grad_enabled
        _grad_enabled = self._prev
        return False


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum-reduce a broadcast gradient back to `shape`."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, _parents=(), _backward=None):
        if isinstance(data, np.ndarray):
            self.data = data
        elif isinstance(data, np.generic):
            self.data = np.asarray(data)  # keep reduction dtype (0-d scalars)
        else:
            self.data = np.asarray(data, dtype=DEFAULT_DTYPE)
        self.grad = None
        track = _grad_enabled and (requires_grad or any(p.requires_grad for p in _parents))
        self.requires_grad = track
        self._parents = _parents if track else ()
        self._backward = _backward if track else None

    # ---- basic introspection ----------------------------------------
    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self):
        return self.data.size

    def __repr__(self):
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, grad={self.requires_grad})"

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.ndim else float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    # ---- graph walk ---------------------------------------------------
    def backward(self, grad=None):
        """Backpropagate from this node; scalar nodes default to grad 1."""
        if grad is None:
            if self.data.size != 1:
                raise ShapeError("backward() without an explicit gradient requires a scalar")
            grad = np.ones_like(self.data)
        self.grad = np.asarray(grad, dtype=self.data.dtype)

        topo, visited, stack = [], set(), [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in visited:
                    stack.append((p, False))

        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)
            if node._parents:
                # free the graph behind this node once its grad is consumed
                node._backward = None

    def _accum(self, g: np.ndarray):
        g = _unbroadcast(g, self.data.shape).astype(self.data.dtype, copy=False)
        if self.grad is None:
            self.grad = g.copy()
        else:
            self.grad += g

    # ---- arithmetic -----------------------------------------------------
    def _coerce(self, other) -> np.ndarray:
        if isinstance(other, Tensor):
            return other
        return np.asarray(other, dtype=self.data.dtype)

    def __add__(self, other):
        other = self._coerce(other)
        if isinstance(other, Tensor):
            out = Tensor(self.data + other.data, _parents=(self, other))
            if out.requires_grad:
                def bwd(g, a=self, b=other):
                    if a.requires_grad:
                        a._accum(g)
                    if b.requires_grad:
                        b._accum(g)
                out._backward = bwd
            return out
        out = Tensor(self.data + other, _parents=(self,))
        if out.requires_grad:
            out._backward = lambda g, a=self: a._accum(g)
        return out

    __radd__ = __add__

    def __neg__(self):
        out = Tensor(-self.data, _parents=(self,))
        if out.requires_grad:
            out._backward = lambda g, a=self: a._accum(-g)
        return out

    def __sub__(self, other):
        return self + (-other if isinstance(other, Tensor) else -self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if isinstance(other, Tensor):
            out = Tensor(self.data * other.data, _parents=(self, other))
            if out.requires_grad:
                def bwd(g, a=self, b=other):
                    if a.requires_grad:
                        a._accum(g * b.data)
                    if b.requires_grad:
                        b._accum(g * a.data)
                out._backward = bwd
            return out
        out = Tensor(self.data * other, _parents=(self,))
        if out.requires_grad:
            out._backward = lambda g, a=self, c=other: a._accum(g * c)
        return out

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if isinstance(other, Tensor):
            out = Tensor(self.data / other.data, _parents=(self, other))
            if out.requires_grad:
                def bwd(g, a=self, b=other):
                    if a.requires_grad:
                        a._accum(g / b.data)
                    if b.requires_grad:
                        b._accum(-g * a.data / (b.data * b.data))
                out._backward = bwd
            return out
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return Tensor(self._coerce(other)) / self if not isinstance(other, Tensor) else other / self

    def __pow__(self, p):
        if not np.isscalar(p):
            raise ShapeError("pow supports scalar exponents only")
        out = Tensor(self.data ** p, _parents=(self,))
        if out.requires_grad:
            out._backward = lambda g, a=self: a._accum(g * p * a.data ** (p - 1))
        return out

    def __matmul__(self, other):
        if not isinstance(other, Tensor):
            other = Tensor(np.asarray(other, dtype=self.data.dtype))
        if self.ndim < 2 or other.ndim < 2:
            raise ShapeError("matmul operands must have ndim >= 2 "
                             f"(got {self.ndim} and {other.ndim})")
        if self.shape[-1] != other.shape[-2]:
            raise ShapeError(f"matmul: inner axes differ, {self.shape[-1]} vs {other.shape[-2]} "
                             f"(lhs last axis vs rhs second-to-last)")
        out = Tensor(self.data @ other.data, _parents=(self, other))
        if out.requires_grad:
            def bwd(g, a=self, b=other):
                if a.requires_grad:
                    a._accum(g @ b.data.swapaxes(-1, -2))
                if b.requires_grad:
                    b._accum(a.data.swapaxes(-1, -2) @ g)
            out._backward = bwd
        return out

    # ---- shape ops ----------------------------------------------------
    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        out = Tensor(self.data.reshape(shape), _parents=(self,))
        if out.requires_grad:
            out._backward = lambda g, a=self: a._accum(g.reshape(a.data.shape))
        return out

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        inv = np.argsort(axes)
        out = Tensor(self.data.transpose(axes), _parents=(self,))
        if out.requires_grad:
            out._backward = lambda g, a=self, inv=tuple(inv): a._accum(g.transpose(inv))
        return out

    def swapaxes(self, a, b):
        axes = list(range(self.ndim))
        axes[a], axes[b] = axes[b], axes[a]
        return self.transpose(*axes)

    def __getitem__(self, idx):
        out = Tensor(self.data[idx], _parents=(self,))
        if out.requires_grad:
            def bwd(g, a=self, idx=idx):
                gx = np.zeros_like(a.data)
                gx[idx] = g
                a._accum(gx)
            out._backward = bwd
        return out

    # ---- reductions -----------------------------------------------------
    def sum(self, axis=None, keepdims=False):
        out = Tensor(self.data.sum(axis=axis, keepdims=keepdims), _parents=(self,))
        if out.requires_grad:
            def bwd(g, a=self, axis=axis, keepdims=keepdims):
                if axis is not None and not keepdims:
                    g = np.expand_dims(g, axis)
                a._accum(np.broadcast_to(g, a.data.shape))
            out._backward = bwd
        return out

    def mean(self, axis=None, keepdims=False):
        n = self.data.size if axis is None else np.prod(
            [self.data.shape[a] for a in (axis if isinstance(axis, tuple) else (axis,))])
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / float(n))

    # ---- pointwise nonlinearities ---------------------------------------
    def exp(self):
        y = np.exp(self.data)
        out = Tensor(y, _parents=(self,))
        if out.requires_grad:
            out._backward = lambda g, a=self, y=y: a._accum(g * y)
        return out

    def log(self):
        out = Tensor(np.log(self.data), _parents=(self,))
        if out.requires_grad:
            out._backward = lambda g, a=self: a._accum(g / a.data)
        return out

    def sqrt(self):
        y = np.sqrt(self.data)
        out = Tensor(y, _parents=(self,))
        if out.requires_grad:
            out._backward = lambda g, a=self, y=y: a._accum(g * 0.5 / y)
        return out

    def tanh(self):
        y = np.tanh(self.data)
        out = Tensor(y, _parents=(self,))
        if out.requires_grad:
            out._backward = lambda g, a=self, y=y: a._accum(g * (1.0 - y * y))
        return out

    def sigmoid(self):
        y = 1.0 / (1.0 + np.exp(-self.data))
        out = Tensor(y, _parents=(self,))
        if out.requires_grad:
            out._backward = lambda g, a=self, y=y: a._accum(g * y * (1.0 - y))
        return out

    def relu(self):
        out = Tensor(np.maximum(self.data, 0), _parents=(self,))
        if out.requires_grad:
            out._backward = lambda g, a=self: a._accum(g * (a.data > 0))
        return out

    def silu(self):
        s = 1.0 / (1.0 + np.exp(-self.data))
        out = Tensor(self.data * s, _parents=(self,))
        if out.requires_grad:
            out._backward = lambda g, a=self, s=s: a._accum(g * (s * (1.0 + a.data * (1.0 - s))))
        return out


# ---- free functions -------------------------------------------------------

def tensor(data, dtype=None, requires_grad=False) -> Tensor:
    return Tensor(np.asarray(data, dtype=dtype or DEFAULT_DTYPE), requires_grad=requires_grad)


def concat(tensors, axis=0) -> Tensor:
    tensors = list(tensors)
    out = Tensor(np.concatenate([t.data for t in tensors], axis=axis), _parents=tuple(tensors))
    if out.requires_grad:
        sizes = [t.data.shape[axis] for t in tensors]
        splits = np.cumsum(sizes)[:-1]

        def bwd(g, ts=tensors, splits=splits, axis=axis):
            for t, piece in zip(ts, np.split(g, splits, axis=axis)):
                if t.requires_grad:
                    t._accum(piece)
        out._backward = bwd
    return out


def stack(tensors, axis=0) -> Tensor:
    tensors = list(tensors)
    out = Tensor(np.stack([t.data for t in tensors], axis=axis), _parents=tuple(tensors))
    if out.requires_grad:
        def bwd(g, ts=tensors, axis=axis):
            for i, t in enumerate(ts):
                if t.requires_grad:
                    t._accum(np.take(g, i, axis=axis))
        out._backward = bwd
    return out


def take_rows(table: Tensor, idx: np.ndarray) -> Tensor:
    """Row gather `table[idx]` for an integer index array; scatter-add backward."""
    idx = np.asarray(idx)
    out = Tensor(table.data[idx], _parents=(table,))
    if out.requires_grad:
        def bwd(g, t=table, idx=idx):
            gt = np.zeros_like(t.data)
            np.add.at(gt, idx.reshape(-1), g.reshape(-1, t.data.shape[-1]))
            t._accum(gt)
        out._backward = bwd
    return out


def softmax(x: Tensor, axis=-1) -> Tensor:
    z = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=axis, keepdims=True)
    out = Tensor(y, _parents=(x,))
    if out.requires_grad:
        def bwd(g, a=x, y=y, axis=axis):
            a._accum(y * (g - (g * y).sum(axis=axis, keepdims=True)))
        out._backward = bwd
    return out


def log_softmax(x: Tensor, axis=-1) -> Tensor:
    z = x.data - x.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=axis, keepdims=True))
    y = z - lse
    out = Tensor(y, _parents=(x,))
    if out.requires_grad:
        def bwd(g, a=x, y=y, axis=axis):
            a._accum(g - np.exp(y) * g.sum(axis=axis, keepdims=True))
        out._backward = bwd
    return out


def round_ste(x: Tensor) -> Tensor:
    """Round to nearest integer; the backward pass is the identity."""
    out = Tensor(np.round(x.data), _parents=(x,))
    if out.requires_grad:
        out._backward = lambda g, a=x: a._accum(g)
    return out


def cross_entropy(logits: Tensor, targets: np.ndarray, class_weights=None) -> Tensor:
    """Mean weighted cross-entropy over the leading axes; targets are class ids.

    loss = (1/N) * sum_n w[t_n] * (-log softmax(logits)_n[t_n])
    """
    targets = np.asarray(targets).reshape(-1)
    flat = logits.data.reshape(-1, logits.shape[-1])
    n, c = flat.shape
    if targets.shape[0] != n:
        raise ShapeError(f"cross_entropy: {n} rows vs {targets.shape[0]} targets")
    z = flat - flat.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1, keepdims=True))
    logp = z - lse
    w = np.ones(c, dtype=flat.dtype) if class_weights is None else \
        np.asarray(class_weights, dtype=flat.dtype)
    wn = w[targets]
    loss = -(wn * logp[np.arange(n), targets]).sum() / n
    out = Tensor(np.asarray(loss, dtype=flat.dtype), _parents=(logits,))
    if out.requires_grad:
        def bwd(g, a=logits, logp=logp, targets=targets, wn=wn, n=n):
            p = np.exp(logp)
            p[np.arange(n), targets] -= 1.0
            p *= (wn / n)[:, None]
            a._accum((g * p).reshape(a.data.shape))
        out._backward = bwd
    return out


def smooth_l1(pred: Tensor, target: np.ndarray, beta: float = 1.0) -> Tensor:
    """Mean smooth-L1: 0.5*d^2/beta for |d| < beta, else |d| - 0.5*beta."""
    t = target.data if isinstance(target, Tensor) else np.asarray(target, dtype=pred.dtype)
    d = pred.data - t
    ad = np.abs(d)
    elem = np.where(ad < beta, 0.5 * d * d / beta, ad - 0.5 * beta)
    out = Tensor(np.asarray(elem.mean(), dtype=pred.dtype), _parents=(pred,))
    if out.requires_grad:
        def bwd(g, a=pred, d=d, beta=beta):
            a._accum(g * np.clip(d / beta, -1.0, 1.0) / d.size)
        out._backward = bwd
    return out


def mse(pred: Tensor, target) -> Tensor:
    t = target.data if isinstance(target, Tensor) else np.asarray(target, dtype=pred.dtype)
    diff = pred - t
    return (diff * diff).mean()
