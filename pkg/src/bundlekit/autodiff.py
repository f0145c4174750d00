"""Minimal reverse-mode automatic differentiation on numpy arrays.

Just enough tape-based autodiff to differentiate the graph network exactly:
broadcasting arithmetic, batched matmul, relu, exp/log, axis reductions,
reshape/transpose/slicing/concat and a stable sigmoid.  Gradients are
accumulated by walking the tape in reverse topological order.  Nothing here
is clever; every rule is the textbook one, validated against central finite
differences in the test suite.
"""

from __future__ import annotations

import numpy as np

__all__ = ["Tensor", "concat", "relu", "exp", "log", "sigmoid", "softmax_over_axis"]


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` (inverse of numpy broadcasting)."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for ax, size in enumerate(shape):
        if size == 1 and grad.shape[ax] != 1:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, parents=(), backward=None):
        self.data = np.asarray(data, dtype=float)
        self.grad = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        self._parents = parents if self.requires_grad else ()
        self._backward = backward if self.requires_grad else None

    @property
    def shape(self):
        return self.data.shape

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        other = _as_tensor(other)
        out_data = self.data + other.data

        def backward(g):
            return (_unbroadcast(g, self.data.shape),
                    _unbroadcast(g, other.data.shape))
        return Tensor(out_data, parents=(self, other), backward=backward)

    __radd__ = __add__

    def __neg__(self):
        return Tensor(-self.data, parents=(self,), backward=lambda g: (-g,))

    def __sub__(self, other):
        return self + (-_as_tensor(other))

    def __rsub__(self, other):
        return _as_tensor(other) + (-self)

    def __mul__(self, other):
        other = _as_tensor(other)
        out_data = self.data * other.data

        def backward(g):
            return (_unbroadcast(g * other.data, self.data.shape),
                    _unbroadcast(g * self.data, other.data.shape))
        return Tensor(out_data, parents=(self, other), backward=backward)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_tensor(other)
        out_data = self.data / other.data

        def backward(g):
            return (_unbroadcast(g / other.data, self.data.shape),
                    _unbroadcast(-g * self.data / (other.data ** 2),
                                 other.data.shape))
        return Tensor(out_data, parents=(self, other), backward=backward)

    def __matmul__(self, other):
        other = _as_tensor(other)
        out_data = self.data @ other.data

        def backward(g):
            ga = g @ np.swapaxes(other.data, -1, -2)
            gb = np.swapaxes(self.data, -1, -2) @ g
            return (_unbroadcast(ga, self.data.shape),
                    _unbroadcast(gb, other.data.shape))
        return Tensor(out_data, parents=(self, other), backward=backward)

    # -- shaping ------------------------------------------------------------

    def reshape(self, *shape):
        old = self.data.shape
        return Tensor(self.data.reshape(*shape), parents=(self,),
                      backward=lambda g: (g.reshape(old),))

    def transpose(self, *axes):
        inv = np.argsort(axes)
        return Tensor(self.data.transpose(*axes), parents=(self,),
                      backward=lambda g: (g.transpose(*inv),))

    def __getitem__(self, key):
        out_data = self.data[key]
        shape = self.data.shape

        def backward(g):
            full = np.zeros(shape)
            full[key] = g
            return (full,)
        return Tensor(out_data, parents=(self,), backward=backward)

    def take_flat(self, indices):
        """Gather from the flattened tensor (used for edge mini-batching)."""
        idx = np.asarray(indices, dtype=np.int64)
        out_data = self.data.reshape(-1)[idx]
        shape = self.data.shape

        def backward(g):
            full = np.zeros(shape).reshape(-1)
            np.add.at(full, idx, g)
            return (full.reshape(shape),)
        return Tensor(out_data, parents=(self,), backward=backward)

    # -- reductions ---------------------------------------------------------

    def sum(self, axis=None, keepdims=False):
        out_data = self.data.sum(axis=axis, keepdims=keepdims)
        shape = self.data.shape

        def backward(g):
            if axis is None:
                return (np.broadcast_to(g, shape).copy(),)
            g2 = g if keepdims else np.expand_dims(g, axis)
            return (np.broadcast_to(g2, shape).copy(),)
        return Tensor(out_data, parents=(self,), backward=backward)

    def mean(self):
        n = self.data.size
        return self.sum() * (1.0 / n)

    # -- backprop -----------------------------------------------------------

    def backward(self):
        if self.data.size != 1:
            raise ValueError("backward() expects a scalar loss")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in seen or not node.requires_grad:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                stack.append((p, False))

        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is None or node.grad is None:
                continue
            for parent, g in zip(node._parents, node._backward(node.grad)):
                if not parent.requires_grad:
                    continue
                if parent.grad is None:
                    parent.grad = np.zeros_like(parent.data)
                parent.grad += g


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def relu(t: Tensor) -> Tensor:
    mask = t.data > 0

    def backward(g):
        return (g * mask,)
    return Tensor(np.where(mask, t.data, 0.0), parents=(t,), backward=backward)


def exp(t: Tensor) -> Tensor:
    out_data = np.exp(t.data)

    def backward(g):
        return (g * out_data,)
    return Tensor(out_data, parents=(t,), backward=backward)


def log(t: Tensor) -> Tensor:
    def backward(g):
        return (g / t.data,)
    return Tensor(np.log(t.data), parents=(t,), backward=backward)


def sigmoid(t: Tensor) -> Tensor:
    out_data = np.where(t.data >= 0,
                        1.0 / (1.0 + np.exp(-np.abs(t.data))),
                        np.exp(-np.abs(t.data)) / (1.0 + np.exp(-np.abs(t.data))))

    def backward(g):
        return (g * out_data * (1.0 - out_data),)
    return Tensor(out_data, parents=(t,), backward=backward)


def concat(tensors: list[Tensor], axis: int) -> Tensor:
    datas = [t.data for t in tensors]
    out_data = np.concatenate(datas, axis=axis)
    sizes = [d.shape[axis] for d in datas]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        return tuple(np.split(g, splits, axis=axis))
    return Tensor(out_data, parents=tuple(tensors), backward=backward)


def softmax_over_axis(t: Tensor, axis: int) -> Tensor:
    """Numerically stable softmax along one axis.

    The max shift is treated as a constant: softmax is invariant to it, so
    the gradient is unchanged.
    """
    shift = Tensor(t.data.max(axis=axis, keepdims=True))
    e = exp(t - shift)
    return e / e.sum(axis=axis, keepdims=True)
