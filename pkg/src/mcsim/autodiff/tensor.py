"""Tape-based reverse-mode automatic differentiation over dense float64 arrays.

Ops executed while a :class:`Tape` is active append (output, parents, vjp)
records in execution order, which is a valid topological order by
construction. :func:`backward` walks the tape once in reverse and
accumulates vector-Jacobian products into leaf ``grad`` fields. Without an
active tape everything runs eagerly with zero recording overhead.

Supported shapes are deliberately small: scalars, vectors, matrices,
elementwise ops on equal shapes, matrix products, row-broadcast bias adds,
concatenation and reductions. No op ever mutates its inputs.
"""

from __future__ import annotations

import numpy as np

from ..errors import ContractViolation

_TAPE = None  # currently recording tape, at most one per worker


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "is_leaf")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = None
        self.is_leaf = True

    # -- introspection ----------------------------------------------------
    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # -- operator sugar ---------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(_const(other, self), self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    # -- elementwise / reduction methods -----------------------------------
    def sum(self):
        return _sum(self)

    def mean(self, axis=None):
        return _mean(self, axis)

    def abs(self):
        return _abs(self)

    def sigmoid(self):
        return sigmoid(self)

    def tanh(self):
        return tanh(self)

    def relu(self):
        return relu(self)

    def softplus(self):
        return softplus(self)

    def exp(self):
        return _exp(self)

    def log(self):
        return _log(self)

    def square(self):
        return mul(self, self)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 else shape[0])

    def transpose(self):
        return transpose(self)


class Tape:
    """Ordered record of primitive ops with parent refs and saved activations."""

    def __init__(self):
        self._nodes = []
        self._consumed = False

    def __len__(self):
        return len(self._nodes)

    def __enter__(self):
        global _TAPE
        if _TAPE is not None:
            raise ContractViolation("another tape is already recording in this worker")
        _TAPE = self
        return self

    def __exit__(self, exc_type, exc, tb):
        global _TAPE
        _TAPE = None
        return False

    def release(self):
        self._nodes.clear()


def _record(out: Tensor, parents, vjp):
    out.is_leaf = False
    if _TAPE is not None and out.requires_grad:
        _TAPE._nodes.append((out, parents, vjp))


def _const(value, like: Tensor) -> Tensor:
    arr = np.asarray(value, dtype=np.float64)
    if arr.shape != like.data.shape:
        arr = np.broadcast_to(arr, like.data.shape)
    return Tensor(arr)


def backward(tape: Tape, loss: Tensor):
    """Accumulate d(loss)/d(leaf) into ``grad`` for every reachable leaf.

    Returns a dict mapping leaf tensors to their gradient arrays. Leaves
    with ``requires_grad`` that never appear on the tape are simply absent
    (their gradient is zero); callers keep ``grad`` zeroed via
    :func:`zero_grad`.
    """
    if loss.data.size != 1:
        raise ContractViolation("backward expects a scalar loss")
    if tape._consumed:
        raise ContractViolation("tape already consumed by a previous backward pass")
    tape._consumed = True

    pending = {id(loss): np.ones_like(loss.data)}
    leaf_grads = {}
    for out, parents, vjp in reversed(tape._nodes):
        gout = pending.pop(id(out), None)
        if gout is None:
            continue
        for parent, gp in zip(parents, vjp(gout)):
            if gp is None or not parent.requires_grad:
                continue
            if parent.is_leaf:
                store = leaf_grads.setdefault(id(parent), [parent, None])
                store[1] = gp if store[1] is None else store[1] + gp
            else:
                prev = pending.get(id(parent))
                pending[id(parent)] = gp if prev is None else prev + gp

    result = {}
    for tensor, grad in leaf_grads.values():
        grad = np.asarray(grad, dtype=np.float64).reshape(tensor.data.shape)
        tensor.grad = grad if tensor.grad is None else tensor.grad + grad
        result[tensor] = grad
    if loss.is_leaf and loss.requires_grad:
        g = np.ones_like(loss.data)
        loss.grad = g if loss.grad is None else loss.grad + g
        result[loss] = g
    return result


def zero_grad(params):
    for p in params.values() if isinstance(params, dict) else params:
        p.grad = None


# -- primitives -----------------------------------------------------------

def _as_operand(x, like=None):
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=np.float64))


def add(a, b):
    a = _as_operand(a)
    b = _as_operand(b)
    out_data = a.data + b.data
    out = Tensor(out_data)
    out.requires_grad = a.requires_grad or b.requires_grad

    def vjp(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)

    _record(out, (a, b), vjp)
    return out


def sub(a, b):
    a = _as_operand(a)
    b = _as_operand(b)
    out = Tensor(a.data - b.data)
    out.requires_grad = a.requires_grad or b.requires_grad

    def vjp(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(-g, b.data.shape)

    _record(out, (a, b), vjp)
    return out


def neg(a):
    out = Tensor(-a.data)
    out.requires_grad = a.requires_grad
    _record(out, (a,), lambda g: (-g,))
    return out


def mul(a, b):
    a = _as_operand(a)
    b = _as_operand(b)
    out = Tensor(a.data * b.data)
    out.requires_grad = a.requires_grad or b.requires_grad
    a_data, b_data = a.data, b.data

    def vjp(g):
        return _unbroadcast(g * b_data, a_data.shape), _unbroadcast(g * a_data, b_data.shape)

    _record(out, (a, b), vjp)
    return out


def _unbroadcast(g, shape):
    """Sum a gradient back down to the shape of the broadcast operand."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def matmul(a: Tensor, b: Tensor):
    if a.data.ndim > 2 or b.data.ndim > 2:
        raise ContractViolation("matmul supports at most 2-D operands")
    out = Tensor(a.data @ b.data)
    out.requires_grad = a.requires_grad or b.requires_grad
    a_data, b_data = a.data, b.data

    def vjp(g):
        g = np.asarray(g)
        if a_data.ndim == 1 and b_data.ndim == 2:      # (k,)@(k,m) -> (m,)
            return g @ b_data.T, np.outer(a_data, g)
        if a_data.ndim == 2 and b_data.ndim == 1:      # (n,k)@(k,) -> (n,)
            return np.outer(g, b_data), a_data.T @ g
        if a_data.ndim == 1 and b_data.ndim == 1:      # dot -> scalar
            return g * b_data, g * a_data
        return g @ b_data.T, a_data.T @ g              # (n,k)@(k,m)

    _record(out, (a, b), vjp)
    return out


def affine(x: Tensor, w: Tensor, b: Tensor):
    """x @ w + b with a row-broadcast bias."""
    return add(matmul(x, w), b)


def concat(parts, axis=0):
    parts = [_as_operand(p) for p in parts]
    out = Tensor(np.concatenate([p.data for p in parts], axis=axis))
    out.requires_grad = any(p.requires_grad for p in parts)
    sizes = [p.data.shape[axis] for p in parts]
    splits = np.cumsum(sizes)[:-1]

    def vjp(g):
        return tuple(np.split(g, splits, axis=axis))

    _record(out, tuple(parts), vjp)
    return out


def _sum(a: Tensor):
    out = Tensor(a.data.sum())
    out.requires_grad = a.requires_grad
    shape = a.data.shape
    _record(out, (a,), lambda g: (np.broadcast_to(g, shape).copy(),))
    return out


def _mean(a: Tensor, axis=None):
    out = Tensor(a.data.mean(axis=axis))
    out.requires_grad = a.requires_grad
    shape = a.data.shape
    if axis is None:
        n = a.data.size

        def vjp(g):
            return (np.broadcast_to(g / n, shape).copy(),)
    else:
        n = shape[axis]

        def vjp(g):
            return (np.broadcast_to(np.expand_dims(g / n, axis), shape).copy(),)

    _record(out, (a,), vjp)
    return out


def _abs(a: Tensor):
    out = Tensor(np.abs(a.data))
    out.requires_grad = a.requires_grad
    sign = np.sign(a.data)  # 0 at ties: subgradient convention
    _record(out, (a,), lambda g: (g * sign,))
    return out


def relu(a: Tensor):
    out = Tensor(np.maximum(a.data, 0.0))
    out.requires_grad = a.requires_grad
    mask = a.data > 0.0
    _record(out, (a,), lambda g: (g * mask,))
    return out


def sigmoid(a: Tensor):
    with np.errstate(over="ignore"):
        s = 1.0 / (1.0 + np.exp(-a.data))
    out = Tensor(s)
    out.requires_grad = a.requires_grad
    _record(out, (a,), lambda g: (g * s * (1.0 - s),))
    return out


def tanh(a: Tensor):
    t = np.tanh(a.data)
    out = Tensor(t)
    out.requires_grad = a.requires_grad
    _record(out, (a,), lambda g: (g * (1.0 - t * t),))
    return out


def softplus(a: Tensor):
    out = Tensor(np.logaddexp(0.0, a.data))
    out.requires_grad = a.requires_grad
    with np.errstate(over="ignore"):
        s = 1.0 / (1.0 + np.exp(-a.data))
    _record(out, (a,), lambda g: (g * s,))
    return out


def _exp(a: Tensor):
    e = np.exp(a.data)
    out = Tensor(e)
    out.requires_grad = a.requires_grad
    _record(out, (a,), lambda g: (g * e,))
    return out


def _log(a: Tensor):
    out = Tensor(np.log(a.data))
    out.requires_grad = a.requires_grad
    data = a.data
    _record(out, (a,), lambda g: (g / data,))
    return out


def log_softmax(a: Tensor, axis=-1):
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    ls = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    out = Tensor(ls)
    out.requires_grad = a.requires_grad
    p = np.exp(ls)

    def vjp(g):
        return (g - p * g.sum(axis=axis, keepdims=True),)

    _record(out, (a,), vjp)
    return out


def reshape(a: Tensor, shape):
    out = Tensor(a.data.reshape(shape))
    out.requires_grad = a.requires_grad
    orig = a.data.shape
    _record(out, (a,), lambda g: (g.reshape(orig),))
    return out


def transpose(a: Tensor):
    if a.data.ndim != 2:
        raise ContractViolation("transpose expects a 2-D tensor")
    out = Tensor(a.data.T.copy())
    out.requires_grad = a.requires_grad
    _record(out, (a,), lambda g: (g.T.copy(),))
    return out
