"""Immutable tensors and the tape that records computations on them."""

from __future__ import annotations

import itertools
import logging
from collections.abc import Callable, Mapping, Sequence
from contextvars import ContextVar
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..errors import NonFiniteError, RecordError, ShapeError

logger = logging.getLogger(__name__)

_next_id = itertools.count()
_active_tape: ContextVar["Tape | None"] = ContextVar("active_tape", default=None)


class Tensor:
    """Dense, immutable array of finite floats.

    Tensors are values: the wrapped array is read-only, so a tensor can be
    shared between threads and between computation records.
    """

    __slots__ = ("_value", "_id")

    def __init__(self, value: Any, dtype: np.dtype | type | None = None):
        array = np.array(value, dtype=dtype if dtype is not None else _default_dtype(value))
        if any(dim <= 0 for dim in array.shape):
            raise ShapeError(f"Tensor dimensions must be positive, got shape {array.shape}")
        if not np.all(np.isfinite(array)):
            raise NonFiniteError("Tensor values must be finite")
        array.flags.writeable = False
        self._value = array
        self._id = next(_next_id)

    @classmethod
    def _wrap(cls, array: np.ndarray) -> "Tensor":
        """Wrap an already-validated array without copying."""
        tensor = cls.__new__(cls)
        array.flags.writeable = False
        tensor._value = array
        tensor._id = next(_next_id)
        return tensor

    @property
    def value(self) -> np.ndarray:
        """Read-only view of the underlying array."""
        return self._value

    @property
    def id(self) -> int:
        return self._id

    @property
    def shape(self) -> tuple[int, ...]:
        return self._value.shape

    @property
    def dtype(self) -> np.dtype:
        return self._value.dtype

    @property
    def ndim(self) -> int:
        return self._value.ndim

    def numpy(self) -> np.ndarray:
        """Return a writable copy of the values."""
        return self._value.copy()

    def item(self) -> float:
        return float(self._value)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.dtype})"

    # Operators dispatch to the primitives in ``ops``.
    def __add__(self, other):
        from . import ops
        return ops.add(self, other)

    def __radd__(self, other):
        from . import ops
        return ops.add(other, self)

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from . import ops
        return ops.mul(self, other)

    def __rmul__(self, other):
        from . import ops
        return ops.mul(other, self)

    def __truediv__(self, other):
        from . import ops
        return ops.div(self, other)

    def __neg__(self):
        from . import ops
        return ops.scale(self, -1.0)

    def __matmul__(self, other):
        from . import ops
        return ops.matmul(self, other)


def _default_dtype(value: Any) -> np.dtype:
    if isinstance(value, np.ndarray) and np.issubdtype(value.dtype, np.floating):
        return value.dtype
    if isinstance(value, Tensor):
        return value.dtype
    return np.dtype(np.float64)


def as_tensor(value: Any, dtype: np.dtype | type | None = None) -> Tensor:
    """Return ``value`` as a Tensor, passing tensors through unchanged."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value, dtype=dtype)


@dataclass(frozen=True)
class Primitive:
    """A differentiable operation.

    ``forward`` maps input arrays to an output array. ``vjp`` maps the
    output cotangent to one cotangent per input (None for inputs that
    receive no gradient, such as integer attributes).
    """

    name: str
    forward: Callable[..., np.ndarray]
    vjp: Callable[..., tuple[np.ndarray | None, ...]]


PRIMITIVES: dict[str, Primitive] = {}


def register_primitive(name: str, forward: Callable, vjp: Callable) -> Primitive:
    """Add a primitive to the registry used by recording and replay."""
    primitive = Primitive(name=name, forward=forward, vjp=vjp)
    PRIMITIVES[name] = primitive
    return primitive


@dataclass(frozen=True)
class Node:
    """One primitive application captured on a tape."""

    op: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    attrs: tuple[tuple[str, Any], ...] = ()

    def attr_dict(self) -> dict[str, Any]:
        return dict(self.attrs)


def apply(op: str, *inputs: Tensor, **attrs: Any) -> Tensor:
    """Evaluate primitive ``op`` and record it on the active tape.

    Raises:
        NonFiniteError: If the primitive produces NaN or Inf.
    """
    primitive = PRIMITIVES[op]
    arrays = [t.value for t in inputs]
    with np.errstate(all="ignore"):
        result = np.asarray(primitive.forward(*arrays, **attrs))
    if not np.all(np.isfinite(result)):
        raise NonFiniteError(f"Primitive '{op}' produced non-finite values")
    if result.base is not None or not result.flags.owndata:
        result = result.copy()
    output = Tensor._wrap(result)

    tape = _active_tape.get()
    if tape is not None:
        tape._record(op, inputs, output, attrs)
    return output


@dataclass
class Tape:
    """Computation record built while primitives execute.

    Use as a context manager; tensors passed to :meth:`watch` become
    trainable leaves, and every primitive whose inputs depend on a leaf is
    appended in evaluation order, so the record is topologically sorted.

    Example:
        with Tape() as tape:
            tape.watch(w)
            loss = ops.sum(ops.matmul(x, w))
        grads = tape.gradient(loss, {"w": w})
    """

    persistent: bool = False
    nodes: list[Node] = field(default_factory=list)
    _watched: dict[int, Tensor] = field(default_factory=dict)
    _tracked: set[int] = field(default_factory=set)
    _consumed: bool = False
    _token: Any = None

    def __enter__(self) -> "Tape":
        self._token = _active_tape.set(self)
        return self

    def __exit__(self, *exc_info) -> None:
        _active_tape.reset(self._token)
        self._token = None

    def watch(self, *tensors: Tensor | Mapping[str, Tensor] | Sequence[Tensor]) -> None:
        """Mark tensors (or mappings/sequences of tensors) as trainable leaves."""
        for item in tensors:
            if isinstance(item, Tensor):
                self._watched[item.id] = item
                self._tracked.add(item.id)
            elif isinstance(item, Mapping):
                self.watch(*item.values())
            else:
                self.watch(*item)

    def _record(self, op: str, inputs: Sequence[Tensor], output: Tensor, attrs: Mapping[str, Any]) -> None:
        if not any(t.id in self._tracked for t in inputs):
            return
        self._tracked.add(output.id)
        self.nodes.append(Node(op=op, inputs=tuple(inputs), output=output, attrs=tuple(attrs.items())))

    def backward(self, output: Tensor, seed: np.ndarray | None = None) -> dict[int, np.ndarray]:
        """Reverse-mode pass from ``output``.

        Args:
            output: A tensor produced under this tape.
            seed: Cotangent for ``output``; defaults to ones (so a scalar
                output yields its plain gradient).

        Returns:
            Mapping from watched tensor id to its gradient. Leaves that do not
            influence ``output`` receive zeros.

        Raises:
            RecordError: If the record was already consumed.
            ShapeError: If ``seed`` does not match the output shape.
            NonFiniteError: If any gradient is non-finite.
        """
        if self._consumed:
            raise RecordError("Computation record already consumed; use persistent=True to reuse it")
        if seed is None:
            seed = np.ones(output.shape, dtype=output.dtype)
        seed = np.asarray(seed, dtype=output.dtype)
        if seed.shape != output.shape:
            raise ShapeError(f"Seed gradient shape {seed.shape} does not match output shape {output.shape}")

        adjoints: dict[int, np.ndarray] = {output.id: seed}
        for node in reversed(self.nodes):
            cotangent = adjoints.get(node.output.id)
            if cotangent is None:
                continue
            primitive = PRIMITIVES[node.op]
            arrays = [t.value for t in node.inputs]
            with np.errstate(all="ignore"):
                input_grads = primitive.vjp(cotangent, arrays, node.output.value, **node.attr_dict())
            for tensor, grad in zip(node.inputs, input_grads):
                if grad is None or tensor.id not in self._tracked:
                    continue
                if tensor.id in adjoints:
                    adjoints[tensor.id] = adjoints[tensor.id] + grad
                else:
                    adjoints[tensor.id] = grad

        if not self.persistent:
            self._consumed = True

        gradients: dict[int, np.ndarray] = {}
        for leaf_id, leaf in self._watched.items():
            grad = adjoints.get(leaf_id)
            if grad is None:
                grad = np.zeros(leaf.shape, dtype=leaf.dtype)
            else:
                grad = np.asarray(grad, dtype=leaf.dtype).reshape(leaf.shape)
            if not np.all(np.isfinite(grad)):
                raise NonFiniteError("Non-finite gradient encountered during backward pass")
            gradients[leaf_id] = grad
        return gradients

    def gradient(
        self,
        target: Tensor,
        sources: Mapping[str, Tensor] | Sequence[Tensor],
        seed: np.ndarray | None = None,
    ) -> dict[str, np.ndarray] | list[np.ndarray]:
        """Gradients of ``target`` w.r.t. ``sources`` (which must be watched)."""
        by_id = self.backward(target, seed)
        if isinstance(sources, Mapping):
            return {name: _lookup(by_id, tensor) for name, tensor in sources.items()}
        return [_lookup(by_id, tensor) for tensor in sources]

    def replay(self) -> dict[int, np.ndarray]:
        """Re-execute the record from its leaf values.

        Returns:
            Mapping from output tensor id to the recomputed array.
        """
        env: dict[int, np.ndarray] = {}
        for node in self.nodes:
            arrays = [env.get(t.id, t.value) for t in node.inputs]
            with np.errstate(all="ignore"):
                env[node.output.id] = np.asarray(PRIMITIVES[node.op].forward(*arrays, **node.attr_dict()))
        return env


def _lookup(gradients: Mapping[int, np.ndarray], tensor: Tensor) -> np.ndarray:
    try:
        return gradients[tensor.id]
    except KeyError:
        raise RecordError("Requested gradient for a tensor that was not watched") from None


def forward(fn: Callable[..., Tensor], *inputs: Tensor, persistent: bool = False) -> tuple[Tensor, Tape]:
    """Evaluate ``fn(*inputs)`` on a fresh tape that watches ``inputs``.

    Returns:
        Tuple of (output, record).
    """
    with Tape(persistent=persistent) as tape:
        tape.watch(*inputs)
        output = fn(*inputs)
    return output, tape
