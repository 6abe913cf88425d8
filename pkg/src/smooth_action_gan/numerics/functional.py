"""Probability helpers built on the primitives."""

import numpy as np

from ..errors import ShapeError
from . import ops
from .tensor import Tensor, as_tensor

PROBABILITY_TOLERANCE = 1e-6
CE_EPS = 1e-12


def softmax(logits: Tensor | np.ndarray) -> Tensor:
    """Softmax over the last axis, computed after subtracting the row max.

    Raises:
        ShapeError: If the input is empty.
    """
    logits = as_tensor(logits)
    if logits.ndim == 0:
        raise ShapeError("softmax needs at least one entry")
    return ops.softmax_(logits, axis=-1)


def _check_distribution(name: str, values: np.ndarray) -> None:
    totals = values.sum(axis=-1)
    if np.any(np.abs(totals - 1.0) > PROBABILITY_TOLERANCE):
        raise ValueError(f"{name} must sum to 1 within {PROBABILITY_TOLERANCE}")


def cross_entropy(predicted: Tensor, target: Tensor | np.ndarray) -> Tensor:
    """H(target, predicted) = -sum(target * log(predicted)) over the last axis.

    ``predicted`` is clamped to [1e-12, 1] before the log. Leading axes are
    kept, so a batch of shape (m, C) yields a tensor of shape (m,).

    Raises:
        ShapeError: If the two shapes differ.
        ValueError: If either argument is not a probability vector.
    """
    target = as_tensor(target, dtype=predicted.dtype)
    if predicted.shape != target.shape:
        raise ShapeError(f"cross_entropy: shapes {predicted.shape} and {target.shape} differ")
    _check_distribution("predicted", predicted.value)
    _check_distribution("target", target.value)
    clamped = ops.clip(predicted, CE_EPS, 1.0)
    return ops.scale(ops.sum_(ops.mul(target, ops.log(clamped, CE_EPS)), axis=-1), -1.0)
