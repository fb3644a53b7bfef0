"""Minimal reverse-mode autodiff over float64 numpy arrays.

A Tensor wraps an ndarray plus an optional gradient; operations record a
closure that routes upstream gradients to their parents.  ``backward()`` on a
scalar walks the tape in reverse topological order.  Only tensors created
with ``requires_grad=True`` (and their ancestors' dependents) accumulate
gradients, which is how the frozen/trainable parameter split is enforced:
frozen tensors never receive a ``.grad`` at all.

The op set is exactly what the decoder needs: broadcasting arithmetic,
matmul, reshape/transpose, reductions, row gather/scatter (for sparse expert
dispatch), softmax, layer norm, GELU and masked cross-entropy.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np


def _as_array(x) -> np.ndarray:
    if isinstance(x, np.ndarray):
        return x.astype(np.float64, copy=False)
    return np.asarray(x, dtype=np.float64)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum gradient over axes that were broadcast in the forward pass."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        self.data = _as_array(data)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self._parents: tuple = ()
        self._backward = None
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def __repr__(self):
        tag = self.name or "tensor"
        return f"Tensor({tag}, shape={self.shape}, grad={'yes' if self.requires_grad else 'no'})"

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64)
        else:
            self.grad += g

    def backward(self) -> None:
        if self.data.size != 1:
            raise ValueError("backward() is only defined for scalar outputs")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # -- operator sugar ------------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __sub__(self, other):
        return add(self, mul(other, -1.0))

    def __rsub__(self, other):
        return add(mul(self, -1.0), other)

    def __truediv__(self, other):
        return div(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def reshape(self, shape):
        return reshape(self, shape)

    def transpose(self, axes):
        return transpose(self, axes)


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data: np.ndarray, parents: Sequence[Tensor], backward) -> Tensor:
    out = Tensor(data)
    tracked = tuple(p for p in parents if p.requires_grad or p._parents)
    if tracked:
        out._parents = tracked
        out._backward = backward
        out.requires_grad = True
    return out


def add(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    data = a.data + b.data

    def backward(g):
        if a.requires_grad or a._parents:
            a._accumulate(_unbroadcast(g, a.shape))
        if b.requires_grad or b._parents:
            b._accumulate(_unbroadcast(g, b.shape))

    return _make(data, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    data = a.data * b.data

    def backward(g):
        if a.requires_grad or a._parents:
            a._accumulate(_unbroadcast(g * b.data, a.shape))
        if b.requires_grad or b._parents:
            b._accumulate(_unbroadcast(g * a.data, b.shape))

    return _make(data, (a, b), backward)


def div(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    data = a.data / b.data

    def backward(g):
        if a.requires_grad or a._parents:
            a._accumulate(_unbroadcast(g / b.data, a.shape))
        if b.requires_grad or b._parents:
            b._accumulate(_unbroadcast(-g * a.data / (b.data * b.data), b.shape))

    return _make(data, (a, b), backward)


def matmul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    data = a.data @ b.data

    def backward(g):
        if a.requires_grad or a._parents:
            ga = g @ np.swapaxes(b.data, -1, -2)
            a._accumulate(_unbroadcast(ga, a.shape))
        if b.requires_grad or b._parents:
            gb = np.swapaxes(a.data, -1, -2) @ g
            b._accumulate(_unbroadcast(gb, b.shape))

    return _make(data, (a, b), backward)


def reshape(x, shape) -> Tensor:
    x = _wrap(x)
    old = x.shape
    data = x.data.reshape(shape)

    def backward(g):
        x._accumulate(g.reshape(old))

    return _make(data, (x,), backward)


def transpose(x, axes) -> Tensor:
    x = _wrap(x)
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    data = x.data.transpose(axes)

    def backward(g):
        x._accumulate(g.transpose(inverse))

    return _make(data, (x,), backward)


def tsum(x, axis=None, keepdims: bool = False) -> Tensor:
    x = _wrap(x)
    data = x.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is None:
            x._accumulate(np.broadcast_to(g, x.shape).copy())
        else:
            gg = g if keepdims else np.expand_dims(g, axis)
            x._accumulate(np.broadcast_to(gg, x.shape).copy())

    return _make(data, (x,), backward)


def tmean(x, axis=None, keepdims: bool = False) -> Tensor:
    x = _wrap(x)
    n = x.data.size if axis is None else x.data.shape[axis]
    return mul(tsum(x, axis=axis, keepdims=keepdims), 1.0 / n)


def gather_rows(x, idx) -> Tensor:
    """out[i] = x[idx[i]]; used for embeddings and expert token dispatch."""
    x = _wrap(x)
    idx = np.asarray(idx)
    data = x.data[idx]

    def backward(g):
        gx = np.zeros_like(x.data)
        np.add.at(gx, idx, g)
        x._accumulate(gx)

    return _make(data, (x,), backward)


def gather_rc(x, rows, col: int) -> Tensor:
    """out[i] = x[rows[i], col] for a 2-D tensor."""
    x = _wrap(x)
    rows = np.asarray(rows)
    data = x.data[rows, col]

    def backward(g):
        gx = np.zeros_like(x.data)
        np.add.at(gx, (rows, col), g)
        x._accumulate(gx)

    return _make(data, (x,), backward)


def scatter_rows(rows, idx, n_rows: int) -> Tensor:
    """Place rows into a zero (n_rows, D) tensor at positions idx
    (positions must be unique)."""
    rows = _wrap(rows)
    idx = np.asarray(idx)
    data = np.zeros((n_rows,) + rows.shape[1:], dtype=np.float64)
    data[idx] = rows.data

    def backward(g):
        rows._accumulate(g[idx])

    return _make(data, (rows,), backward)


def softmax(x) -> Tensor:
    """Softmax over the last axis; -inf-like logits give exact zeros."""
    x = _wrap(x)
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    data = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        dot = (g * data).sum(axis=-1, keepdims=True)
        x._accumulate(data * (g - dot))

    return _make(data, (x,), backward)


def layer_norm(x, gamma, beta, eps: float = 1e-5) -> Tensor:
    """Normalize over the last axis: gamma * (x - mean) / sqrt(var + eps) + beta."""
    x, gamma, beta = _wrap(x), _wrap(gamma), _wrap(beta)
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    data = xhat * gamma.data + beta.data

    def backward(g):
        d = x.data.shape[-1]
        if gamma.requires_grad or gamma._parents:
            axes = tuple(range(g.ndim - 1))
            gamma._accumulate((g * xhat).sum(axis=axes))
        if beta.requires_grad or beta._parents:
            axes = tuple(range(g.ndim - 1))
            beta._accumulate(g.sum(axis=axes))
        if x.requires_grad or x._parents:
            gy = g * gamma.data
            mean_gy = gy.mean(axis=-1, keepdims=True)
            mean_gy_xhat = (gy * xhat).mean(axis=-1, keepdims=True)
            x._accumulate(inv * (gy - mean_gy - xhat * mean_gy_xhat))

    return _make(data, (x, gamma, beta), backward)


_GELU_C1 = np.sqrt(2.0 / np.pi)
_GELU_C2 = _GELU_C1 * 0.044715


def gelu(x) -> Tensor:
    """tanh-approximation GELU: 0.5 x (1 + tanh(c (x + 0.044715 x^3)))."""
    x = _wrap(x)
    xd = x.data
    x2 = xd * xd
    u = xd * (_GELU_C1 + _GELU_C2 * x2)
    th = np.tanh(u)
    cdf = 0.5 * (1.0 + th)
    data = xd * cdf

    def backward(g):
        du = _GELU_C1 + (3.0 * _GELU_C2) * x2
        sech2 = 1.0 - th * th
        x._accumulate(g * (cdf + xd * (0.5 * sech2 * du)))

    return _make(data, (x,), backward)


def cross_entropy(logits, targets) -> Tensor:
    """Per-row negative log softmax probability of the target id.

    logits: (N, V); targets: int array (N,).  Returns (N,).
    """
    logits = _wrap(logits)
    targets = np.asarray(targets, dtype=np.int64)
    shifted = logits.data - logits.data.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=-1))
    rows = np.arange(targets.shape[0])
    data = lse - shifted[rows, targets]

    def backward(g):
        probs = np.exp(shifted)
        probs /= probs.sum(axis=-1, keepdims=True)
        probs[rows, targets] -= 1.0
        logits._accumulate(probs * g[:, None])

    return _make(data, (logits,), backward)


def assert_finite(name: str, arr: np.ndarray) -> None:
    if not np.all(np.isfinite(arr)):
        raise FloatingPointError(f"non-finite values in {name}")
