"""Differentiable primitives.

Each primitive registers a forward rule and a vector-Jacobian product. The
public functions validate shapes, lift Python scalars to constants of the
matching dtype, and dispatch through :func:`tensor.apply` so that the
active tape records them.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from scipy.special import expit

from ..errors import ShapeError
from .tensor import Tensor, apply, register_primitive

LOG_EPS = 1e-12


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _expand(grad: np.ndarray, shape: tuple[int, ...], axis, keepdims: bool) -> np.ndarray:
    """Broadcast a reduced cotangent back over the reduced axes."""
    if axis is not None and not keepdims:
        grad = np.expand_dims(grad, axis)
    return np.broadcast_to(grad, shape)


register_primitive(
    "add",
    lambda a, b: a + b,
    lambda g, xs, y: (_unbroadcast(g, xs[0].shape), _unbroadcast(g, xs[1].shape)),
)
register_primitive(
    "sub",
    lambda a, b: a - b,
    lambda g, xs, y: (_unbroadcast(g, xs[0].shape), _unbroadcast(-g, xs[1].shape)),
)
register_primitive(
    "mul",
    lambda a, b: a * b,
    lambda g, xs, y: (_unbroadcast(g * xs[1], xs[0].shape), _unbroadcast(g * xs[0], xs[1].shape)),
)
register_primitive(
    "div",
    lambda a, b: a / b,
    lambda g, xs, y: (
        _unbroadcast(g / xs[1], xs[0].shape),
        _unbroadcast(-g * xs[0] / (xs[1] * xs[1]), xs[1].shape),
    ),
)
register_primitive(
    "scale",
    lambda a, factor: a * factor,
    lambda g, xs, y, factor: (g * factor,),
)
register_primitive(
    "matmul",
    lambda a, b: a @ b,
    lambda g, xs, y: (g @ xs[1].T, xs[0].T @ g),
)
register_primitive(
    "transpose",
    lambda a: a.T,
    lambda g, xs, y: (g.T,),
)
register_primitive(
    "reshape",
    lambda a, shape: a.reshape(shape),
    lambda g, xs, y, shape: (g.reshape(xs[0].shape),),
)


def _concat_vjp(g, xs, y, axis):
    bounds = np.cumsum([x.shape[axis] for x in xs])[:-1]
    return tuple(np.split(g, bounds, axis=axis))


register_primitive(
    "concat",
    lambda *arrays, axis: np.concatenate(arrays, axis=axis),
    _concat_vjp,
)


def _slice_forward(a, start, stop, axis):
    index = [slice(None)] * a.ndim
    index[axis] = slice(start, stop)
    return a[tuple(index)]


def _slice_vjp(g, xs, y, start, stop, axis):
    grad = np.zeros_like(xs[0])
    index = [slice(None)] * grad.ndim
    index[axis] = slice(start, stop)
    grad[tuple(index)] = g
    return (grad,)


register_primitive("slice", _slice_forward, _slice_vjp)

register_primitive(
    "tanh",
    np.tanh,
    lambda g, xs, y: (g * (1.0 - y * y),),
)
register_primitive(
    "sigmoid",
    expit,
    lambda g, xs, y: (g * y * (1.0 - y),),
)
register_primitive(
    "relu",
    lambda a: np.maximum(a, 0.0),
    lambda g, xs, y: (g * (xs[0] > 0),),
)
register_primitive(
    "exp",
    np.exp,
    lambda g, xs, y: (g * y,),
)
register_primitive(
    "log",
    lambda a, eps: np.log(np.maximum(a, eps)),
    lambda g, xs, y, eps: (np.where(xs[0] > eps, g / np.maximum(xs[0], eps), 0.0),),
)
register_primitive(
    "sqrt",
    np.sqrt,
    lambda g, xs, y: (np.where(y > 0, g * 0.5 / np.where(y > 0, y, 1.0), 0.0),),
)
register_primitive(
    "clip",
    lambda a, lo, hi: np.clip(a, lo, hi),
    lambda g, xs, y, lo, hi: (g * ((xs[0] >= lo) & (xs[0] <= hi)),),
)
register_primitive(
    "sum",
    lambda a, axis, keepdims: np.sum(a, axis=axis, keepdims=keepdims),
    lambda g, xs, y, axis, keepdims: (_expand(g, xs[0].shape, axis, keepdims),),
)
register_primitive(
    "mean",
    lambda a, axis, keepdims: np.mean(a, axis=axis, keepdims=keepdims),
    lambda g, xs, y, axis, keepdims: (
        _expand(g, xs[0].shape, axis, keepdims) * (y.size / xs[0].size),
    ),
)
register_primitive(
    "sq_norm",
    lambda a: np.sum(a * a),
    lambda g, xs, y: (2.0 * g * xs[0],),
)


def _softmax_forward(a, axis):
    shifted = a - np.max(a, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True)


register_primitive(
    "softmax",
    _softmax_forward,
    lambda g, xs, y, axis: (y * (g - np.sum(g * y, axis=axis, keepdims=True)),),
)


def _lift(value, like: Tensor) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=like.dtype))


def _binary(op: str, a, b) -> Tensor:
    if not isinstance(a, Tensor) and not isinstance(b, Tensor):
        raise TypeError(f"{op} needs at least one Tensor operand")
    a = _lift(a, b if isinstance(b, Tensor) else a)
    b = _lift(b, a)
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} are not compatible") from None
    return apply(op, a, b)


def add(a, b) -> Tensor:
    return _binary("add", a, b)


def sub(a, b) -> Tensor:
    return _binary("sub", a, b)


def mul(a, b) -> Tensor:
    return _binary("mul", a, b)


def div(a, b) -> Tensor:
    return _binary("div", a, b)


def scale(a: Tensor, factor: float) -> Tensor:
    """Multiply by a constant scalar."""
    return apply("scale", a, factor=float(factor))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product of two 2-D tensors."""
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects 2-D tensors, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: inner dimensions differ, {a.shape} @ {b.shape}")
    return apply("matmul", a, b)


def transpose(a: Tensor) -> Tensor:
    if a.ndim != 2:
        raise ShapeError(f"transpose expects a 2-D tensor, got {a.shape}")
    return apply("transpose", a)


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(int(s) for s in shape)
    if int(np.prod(shape)) != a.value.size:
        raise ShapeError(f"Cannot reshape {a.shape} to {shape}")
    return apply("reshape", a, shape=shape)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    """Concatenate along ``axis``; all other dimensions must agree."""
    if not tensors:
        raise ShapeError("concat needs at least one tensor")
    ndim = tensors[0].ndim
    axis = axis % ndim
    for t in tensors:
        if t.ndim != ndim or any(t.shape[i] != tensors[0].shape[i] for i in range(ndim) if i != axis):
            raise ShapeError(f"concat: incompatible shapes {[t.shape for t in tensors]}")
    return apply("concat", *tensors, axis=axis)


def slice_(a: Tensor, start: int, stop: int, axis: int = -1) -> Tensor:
    """Take ``a[..., start:stop, ...]`` along ``axis``."""
    axis = axis % a.ndim
    if not 0 <= start < stop <= a.shape[axis]:
        raise ShapeError(f"slice [{start}:{stop}] out of range for axis {axis} of shape {a.shape}")
    return apply("slice", a, start=int(start), stop=int(stop), axis=axis)


def tanh(a: Tensor) -> Tensor:
    return apply("tanh", a)


def sigmoid(a: Tensor) -> Tensor:
    return apply("sigmoid", a)


def relu(a: Tensor) -> Tensor:
    return apply("relu", a)


def exp(a: Tensor) -> Tensor:
    return apply("exp", a)


def log(a: Tensor, eps: float = LOG_EPS) -> Tensor:
    """Natural log of ``max(a, eps)``."""
    return apply("log", a, eps=float(eps))


def sqrt(a: Tensor) -> Tensor:
    """Square root; the gradient at 0 is taken as 0."""
    if np.any(a.value < 0):
        raise ValueError("sqrt of a negative value")
    return apply("sqrt", a)


def clip(a: Tensor, lo: float, hi: float) -> Tensor:
    return apply("clip", a, lo=float(lo), hi=float(hi))


def sum_(a: Tensor, axis: int | None = None, keepdims: bool = False) -> Tensor:
    return apply("sum", a, axis=axis, keepdims=keepdims)


def mean(a: Tensor, axis: int | None = None, keepdims: bool = False) -> Tensor:
    return apply("mean", a, axis=axis, keepdims=keepdims)


def sq_norm(a: Tensor) -> Tensor:
    """Squared L2 norm over all entries."""
    return apply("sq_norm", a)


def softmax_(a: Tensor, axis: int = -1) -> Tensor:
    return apply("softmax", a, axis=axis % a.ndim)
