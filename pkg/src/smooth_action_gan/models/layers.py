"""Dense and LSTM building blocks on the tape primitives.

Weights are stored as (fan_in, fan_out) so that a batch of row vectors
``x`` of shape (m, fan_in) maps to ``x @ W + b``. Initialization draws
every weight from U[-1/sqrt(fan_in), 1/sqrt(fan_in)] with zero biases;
LSTM gates are packed in the order input, forget, cell, output, and the
forget-gate bias starts at +1.
"""

from collections.abc import Mapping, Sequence

import numpy as np

from ..errors import ShapeError
from ..numerics import Tensor, ops

Params = dict[str, Tensor]


def uniform_weights(rng: np.random.Generator, fan_in: int, fan_out: int, dtype) -> Tensor:
    bound = 1.0 / np.sqrt(fan_in)
    return Tensor(rng.uniform(-bound, bound, size=(fan_in, fan_out)), dtype=dtype)


def init_dense(rng: np.random.Generator, fan_in: int, fan_out: int, dtype=np.float64) -> Params:
    return {
        "W": uniform_weights(rng, fan_in, fan_out, dtype),
        "b": Tensor(np.zeros(fan_out), dtype=dtype),
    }


def init_lstm(rng: np.random.Generator, input_dim: int, hidden_dim: int, dtype=np.float64) -> Params:
    bias = np.zeros(4 * hidden_dim)
    bias[hidden_dim : 2 * hidden_dim] = 1.0
    return {
        "W": uniform_weights(rng, input_dim + hidden_dim, 4 * hidden_dim, dtype),
        "b": Tensor(bias, dtype=dtype),
    }


def dense(params: Mapping[str, Tensor], x: Tensor) -> Tensor:
    """Affine map ``x @ W + b``."""
    if x.shape[-1] != params["W"].shape[0]:
        raise ShapeError(f"Dense layer expects input width {params['W'].shape[0]}, got {x.shape[-1]}")
    return ops.add(ops.matmul(x, params["W"]), params["b"])


def lstm_hidden_dim(params: Mapping[str, Tensor]) -> int:
    return params["W"].shape[1] // 4


def lstm_input_dim(params: Mapping[str, Tensor]) -> int:
    return params["W"].shape[0] - lstm_hidden_dim(params)


def lstm_step(params: Mapping[str, Tensor], x: Tensor, h: Tensor, c: Tensor) -> tuple[Tensor, Tensor]:
    """One LSTM cell update; returns (h_next, c_next)."""
    hidden = lstm_hidden_dim(params)
    gates = dense(params, ops.concat([x, h], axis=1))
    i = ops.sigmoid(ops.slice_(gates, 0, hidden, axis=1))
    f = ops.sigmoid(ops.slice_(gates, hidden, 2 * hidden, axis=1))
    g = ops.tanh(ops.slice_(gates, 2 * hidden, 3 * hidden, axis=1))
    o = ops.sigmoid(ops.slice_(gates, 3 * hidden, 4 * hidden, axis=1))
    c_next = ops.add(ops.mul(f, c), ops.mul(i, g))
    h_next = ops.mul(o, ops.tanh(c_next))
    return h_next, c_next


def lstm_unroll(params: Mapping[str, Tensor], inputs: Sequence[Tensor]) -> list[Tensor]:
    """
    Run the cell over ``inputs`` (each (m, input_dim)) from zero state.

    Returns:
        Hidden states h_1..h_T, each of shape (m, hidden).
    """
    if not inputs:
        raise ShapeError("LSTM needs at least one input step")
    expected = lstm_input_dim(params)
    batch = inputs[0].shape[0]
    for x in inputs:
        if x.ndim != 2 or x.shape != (batch, expected):
            raise ShapeError(f"LSTM input step has shape {x.shape}, expected ({batch}, {expected})")
    dtype = params["W"].dtype
    h = Tensor(np.zeros((batch, lstm_hidden_dim(params))), dtype=dtype)
    c = h
    states = []
    for x in inputs:
        h, c = lstm_step(params, x, h, c)
        states.append(h)
    return states


def prefixed(prefix: str, params: Mapping[str, Tensor]) -> Params:
    return {f"{prefix}.{name}": tensor for name, tensor in params.items()}


def unprefixed(prefix: str, params: Mapping[str, Tensor]) -> Params:
    start = len(prefix) + 1
    return {name[start:]: tensor for name, tensor in params.items() if name.startswith(prefix + ".")}


def zeros_like(params: Mapping[str, Tensor]) -> Params:
    return {name: Tensor(np.zeros(t.shape), dtype=t.dtype) for name, t in params.items()}
