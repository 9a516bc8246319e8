"""Minimal reverse-mode automatic differentiation on dense numpy arrays.

Covers exactly the operations the three policy architectures need: affine
maps (with broadcasting and batched matmul), tanh/sigmoid, softmax and
log-softmax, reductions, stacking/slicing, and the clipped-minimum used by
the PPO objective. Gradients are exact analytic expressions; the finite
difference suite in gradcheck.py verifies every op in situ.
"""

from __future__ import annotations

import numpy as np


class Tensor:
    """A node in the computation graph wrapping an ndarray."""

    __slots__ = ("data", "grad", "requires_grad", "_backward", "_parents")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data)
        self.grad = None
        self.requires_grad = requires_grad
        self._backward = None
        self._parents: tuple[Tensor, ...] = ()

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        if self.data.size != 1:
            raise ValueError("item() requires a single-element tensor")
        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    def backward(self, grad=None):
        """Propagate gradients from this node to every reachable leaf."""
        if grad is None:
            if self.data.size != 1:
                raise ValueError("implicit gradient only for scalar outputs")
            grad = np.ones_like(self.data)
        backward_from([self], [np.asarray(grad, dtype=self.data.dtype)])

    # operator sugar -------------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __sub__(self, other):
        return add(self, -_wrap(other))

    def __rsub__(self, other):
        return add(_wrap(other), -self)

    def __matmul__(self, other):
        return matmul(self, other)


def _wrap(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(np.asarray(value))


def _accumulate(tensor: Tensor, grad: np.ndarray):
    if not tensor.requires_grad and tensor._backward is None:
        return
    if tensor.grad is None:
        tensor.grad = grad.copy()
    else:
        tensor.grad += grad


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to the original operand shape."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def backward_from(outputs: list[Tensor], output_grads: list[np.ndarray]):
    """Seed the given outputs with gradients and run the tape backward."""
    for out, g in zip(outputs, output_grads):
        _accumulate(out, np.broadcast_to(np.asarray(g, dtype=out.data.dtype),
                                         out.data.shape).copy()
                    if np.shape(g) != out.data.shape else np.asarray(g))
    ordered: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(out, False) for out in outputs]
    while stack:
        node, processed = stack.pop()
        if processed:
            ordered.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    for node in reversed(ordered):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)


def _make(data, parents, backward_fn) -> Tensor:
    out = Tensor(data)
    if any(p.requires_grad or p._backward is not None for p in parents):
        out._parents = tuple(parents)
        out._backward = backward_fn
        out.requires_grad = False  # only leaves mark requires_grad
    return out


# --- primitive operations --------------------------------------------------

def add(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    data = a.data + b.data

    def backward(grad):
        _accumulate(a, _unbroadcast(grad, a.data.shape))
        _accumulate(b, _unbroadcast(grad, b.data.shape))

    return _make(data, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    data = a.data * b.data

    def backward(grad):
        _accumulate(a, _unbroadcast(grad * b.data, a.data.shape))
        _accumulate(b, _unbroadcast(grad * a.data, b.data.shape))

    return _make(data, (a, b), backward)


def matmul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    data = a.data @ b.data

    def backward(grad):
        ga = grad @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ grad
        _accumulate(a, _unbroadcast(ga, a.data.shape))
        _accumulate(b, _unbroadcast(gb, b.data.shape))

    return _make(data, (a, b), backward)


def transpose_last2(a: Tensor) -> Tensor:
    a = _wrap(a)
    data = np.swapaxes(a.data, -1, -2)

    def backward(grad):
        _accumulate(a, np.swapaxes(grad, -1, -2))

    return _make(data, (a,), backward)


def tanh(a: Tensor) -> Tensor:
    a = _wrap(a)
    data = np.tanh(a.data)

    def backward(grad):
        _accumulate(a, grad * (1.0 - data * data))

    return _make(data, (a,), backward)


def sigmoid(a: Tensor) -> Tensor:
    a = _wrap(a)
    data = 1.0 / (1.0 + np.exp(-a.data))

    def backward(grad):
        _accumulate(a, grad * data * (1.0 - data))

    return _make(data, (a,), backward)


def exp(a: Tensor) -> Tensor:
    a = _wrap(a)
    data = np.exp(a.data)

    def backward(grad):
        _accumulate(a, grad * data)

    return _make(data, (a,), backward)


def log(a: Tensor) -> Tensor:
    a = _wrap(a)
    data = np.log(a.data)

    def backward(grad):
        _accumulate(a, grad / a.data)

    return _make(data, (a,), backward)


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    a = _wrap(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    data = e / e.sum(axis=axis, keepdims=True)

    def backward(grad):
        inner = (grad * data).sum(axis=axis, keepdims=True)
        _accumulate(a, data * (grad - inner))

    return _make(data, (a,), backward)


def log_softmax(a: Tensor, axis: int = -1) -> Tensor:
    a = _wrap(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    data = shifted - log_z
    soft = np.exp(data)

    def backward(grad):
        _accumulate(a, grad - soft * grad.sum(axis=axis, keepdims=True))

    return _make(data, (a,), backward)


def tsum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    a = _wrap(a)
    data = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(grad):
        g = grad
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        _accumulate(a, np.broadcast_to(g, a.data.shape).copy())

    return _make(data, (a,), backward)


def tmean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    a = _wrap(a)
    data = a.data.mean(axis=axis, keepdims=keepdims)
    count = a.data.size if axis is None else a.data.shape[axis]

    def backward(grad):
        g = grad
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        _accumulate(a, np.broadcast_to(g, a.data.shape) / count)

    return _make(data, (a,), backward)


def stack(tensors: list[Tensor], axis: int = 1) -> Tensor:
    tensors = [_wrap(t) for t in tensors]
    data = np.stack([t.data for t in tensors], axis=axis)

    def backward(grad):
        pieces = np.split(grad, len(tensors), axis=axis)
        for t, piece in zip(tensors, pieces):
            _accumulate(t, piece.squeeze(axis=axis))

    return _make(data, tuple(tensors), backward)


def concat(tensors: list[Tensor], axis: int = -1) -> Tensor:
    tensors = [_wrap(t) for t in tensors]
    data = np.concatenate([t.data for t in tensors], axis=axis)
    widths = [t.data.shape[axis] for t in tensors]

    def backward(grad):
        offsets = np.cumsum(widths)[:-1]
        for t, piece in zip(tensors, np.split(grad, offsets, axis=axis)):
            _accumulate(t, piece)

    return _make(data, tuple(tensors), backward)


def minimum(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    take_a = a.data <= b.data
    data = np.where(take_a, a.data, b.data)

    def backward(grad):
        _accumulate(a, _unbroadcast(grad * take_a, a.data.shape))
        _accumulate(b, _unbroadcast(grad * ~take_a, b.data.shape))

    return _make(data, (a, b), backward)


def clip(a: Tensor, lo: float, hi: float) -> Tensor:
    a = _wrap(a)
    inside = (a.data >= lo) & (a.data <= hi)
    data = np.clip(a.data, lo, hi)

    def backward(grad):
        _accumulate(a, grad * inside)

    return _make(data, (a,), backward)
