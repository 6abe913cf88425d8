"""Seeded random sources."""

from collections.abc import Sequence
from typing import Any

import numpy as np

from ..errors import ShapeError
from .tensor import Tensor

RngLike = int | np.random.Generator


def make_rng(seed: RngLike) -> np.random.Generator:
    """A PCG64 generator for an integer seed; generators pass through."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def rng_state(rng: np.random.Generator) -> dict[str, Any]:
    """JSON-serializable snapshot of a generator."""
    return rng.bit_generator.state


def restore_rng(state: dict[str, Any]) -> np.random.Generator:
    """Rebuild a generator from :func:`rng_state` output."""
    bit_generator = np.random.PCG64()
    bit_generator.state = state
    return np.random.Generator(bit_generator)


def sample_gaussian(shape: Sequence[int], rng: RngLike, dtype=np.float64) -> Tensor:
    """I.i.d. standard normal tensor; identical seeds give identical output.

    Raises:
        ShapeError: If any dimension is not positive.
    """
    shape = tuple(int(s) for s in shape)
    if any(s <= 0 for s in shape):
        raise ShapeError(f"Invalid shape {shape}: dimensions must be positive")
    return Tensor(make_rng(rng).standard_normal(shape), dtype=dtype)
