"""Tensor arithmetic with reverse-mode gradients and the Adam update."""

from . import ops
from .adam import AdamState, adam_step
from .functional import cross_entropy, softmax
from .gradcheck import finite_difference_gradient, relative_error
from .rng import make_rng, restore_rng, rng_state, sample_gaussian
from .tensor import Node, Tape, Tensor, as_tensor, forward

ComputationRecord = Tape

__all__ = [
    "ops",
    "AdamState",
    "adam_step",
    "cross_entropy",
    "softmax",
    "finite_difference_gradient",
    "relative_error",
    "make_rng",
    "restore_rng",
    "rng_state",
    "sample_gaussian",
    "ComputationRecord",
    "Node",
    "Tape",
    "Tensor",
    "as_tensor",
    "forward",
]
