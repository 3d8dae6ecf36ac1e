"""Reverse-mode automatic differentiation over dense numpy arrays.

A Tensor wraps an ndarray plus the closure that propagates its output
gradient to its parents.  backward() walks the tape in reverse topological
order, accumulating gradients into every reachable node; Parameters keep a
persistent .grad buffer for the optimizer, intermediate nodes get one lazily.
Everything runs in whatever dtype the inputs carry (training uses float32,
gradient checks float64).
"""

from __future__ import annotations

import numpy as np


class Tensor:
    __slots__ = ("data", "grad", "parents", "_backward", "requires_grad")

    def __init__(self, data, parents=(), backward=None, requires_grad=False):
        self.data = data if isinstance(data, np.ndarray) else np.asarray(data)
        self.grad = None
        self.parents = parents
        self._backward = backward
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, grad={self.requires_grad})"


class Parameter(Tensor):
    __slots__ = ("name", "lazy")

    def __init__(self, name: str, data, lazy: bool = False):
        super().__init__(np.asarray(data), requires_grad=True)
        self.name = name
        self.lazy = lazy
        self.grad = np.zeros_like(self.data)

    def zero_grad(self):
        self.grad[...] = 0

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.data.shape}, lazy={self.lazy})"


def constant(data, dtype=None) -> Tensor:
    arr = np.asarray(data, dtype=dtype)
    return Tensor(arr)


def backward(root: Tensor) -> None:
    """Propagate d(root)/d(node) into .grad of every reachable node."""
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen or not node.requires_grad:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            stack.append((p, False))
    if root.grad is None:
        root.grad = np.ones_like(root.data)
    for node in reversed(order):
        if node._backward is None:
            continue
        grads = node._backward(node.grad)
        for parent, g in zip(node.parents, grads):
            if g is None or not parent.requires_grad:
                continue
            if parent.grad is None:
                parent.grad = np.zeros_like(parent.data)
            parent.grad += g


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def add(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data + b.data

    def bw(g):
        return (_unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape))

    return Tensor(out_data, (a, b), bw)


def sub(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data - b.data

    def bw(g):
        return (_unbroadcast(g, a.data.shape), _unbroadcast(-g, b.data.shape))

    return Tensor(out_data, (a, b), bw)


def mul(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data * b.data

    def bw(g):
        return (
            _unbroadcast(g * b.data, a.data.shape),
            _unbroadcast(g * a.data, b.data.shape),
        )

    return Tensor(out_data, (a, b), bw)


def scale(a: Tensor, c: float) -> Tensor:
    return Tensor(a.data * c, (a,), lambda g: (g * c,))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data @ b.data

    def bw(g):
        return (g @ b.data.T, a.data.T @ g)

    return Tensor(out_data, (a, b), bw)


def tanh(a: Tensor) -> Tensor:
    out_data = np.tanh(a.data)

    def bw(g):
        return (g * (1.0 - out_data * out_data),)

    return Tensor(out_data, (a,), bw)


def sigmoid(a: Tensor) -> Tensor:
    out_data = 1.0 / (1.0 + np.exp(-a.data))

    def bw(g):
        return (g * out_data * (1.0 - out_data),)

    return Tensor(out_data, (a,), bw)


def concat(tensors: list[Tensor], axis: int = -1) -> Tensor:
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def bw(g):
        return tuple(np.split(g, splits, axis=axis))

    return Tensor(out_data, tuple(tensors), bw)


def stack0(tensors: list[Tensor]) -> Tensor:
    out_data = np.stack([t.data for t in tensors], axis=0)

    def bw(g):
        return tuple(g[i] for i in range(len(tensors)))

    return Tensor(out_data, tuple(tensors), bw)


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    out_data = a.data.reshape(shape)

    def bw(g):
        return (g.reshape(a.data.shape),)

    return Tensor(out_data, (a,), bw)


def transpose(a: Tensor) -> Tensor:
    return Tensor(a.data.T, (a,), lambda g: (g.T,))


def narrow(a: Tensor, axis: int, start: int, size: int) -> Tensor:
    index = [slice(None)] * a.data.ndim
    index[axis] = slice(start, start + size)
    index = tuple(index)
    out_data = a.data[index]

    def bw(g):
        full = np.zeros_like(a.data)
        full[index] = g
        return (full,)

    return Tensor(out_data, (a,), bw)


def gather_rows(a: Tensor, indices: np.ndarray) -> Tensor:
    """Row lookup on axis 0; the backbone of embedding layers.

    indices may have any shape; the output shape is indices.shape + row shape.
    The backward pass scatter-adds, so repeated indices accumulate.
    """
    idx = np.asarray(indices)
    out_data = a.data[idx]

    def bw(g):
        full = np.zeros_like(a.data)
        np.add.at(full, idx.reshape(-1), g.reshape(-1, *a.data.shape[1:]))
        return (full,)

    return Tensor(out_data, (a,), bw)


def broadcast_rows(a: Tensor, n: int) -> Tensor:
    """Tile a vector (D,) into (n, D)."""
    out_data = np.broadcast_to(a.data, (n,) + a.data.shape).copy()

    def bw(g):
        return (g.sum(axis=0),)

    return Tensor(out_data, (a,), bw)


def softmax_cross_entropy(
    logits: Tensor, targets: np.ndarray, weights: np.ndarray | None = None
) -> Tensor:
    """Sum of (optionally weighted) cross-entropies over rows of (N, C) logits."""
    z = logits.data
    zmax = z.max(axis=1, keepdims=True)
    shifted = z - zmax
    logsum = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    logp = shifted - logsum
    n = z.shape[0]
    rows = np.arange(n)
    nll = -logp[rows, targets]
    w = np.ones(n, dtype=z.dtype) if weights is None else np.asarray(weights, dtype=z.dtype)
    loss = (nll * w).sum()

    def bw(g):
        probs = np.exp(logp)
        d = probs * w[:, None]
        d[rows, targets] -= w
        return (g * d,)

    return Tensor(np.asarray(loss), (logits,), bw)


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    """Plain inference-time softmax over the last axis (no gradient)."""
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def label_bilinear(heads: Tensor, weight: Tensor, deps: Tensor) -> Tensor:
    """Per-position bilinear scores: out[n, l] = heads[n] . weight[l] . deps[n]."""
    h, u, d = heads.data, weight.data, deps.data
    out_data = np.einsum("ni,lij,nj->nl", h, u, d, optimize=True)

    def bw(g):
        gh = np.einsum("nl,lij,nj->ni", g, u, d, optimize=True)
        gu = np.einsum("nl,ni,nj->lij", g, h, d, optimize=True)
        gd = np.einsum("nl,ni,lij->nj", g, h, u, optimize=True)
        return (gh, gu, gd)

    return Tensor(out_data, (heads, weight, deps), bw)


def dropout(x: Tensor, rate: float, rng: np.random.Generator, train: bool) -> Tensor:
    """Inverted dropout: identity in evaluation mode, no randomness consumed."""
    if not train or rate <= 0.0:
        return x
    keep = (rng.random(x.data.shape) >= rate).astype(x.data.dtype)
    mask = keep / np.asarray(1.0 - rate, dtype=x.data.dtype)
    return mul(x, Tensor(mask))
