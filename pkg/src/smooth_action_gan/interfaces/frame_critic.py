"""Abstract interface for frame-level critics."""

from abc import abstractmethod

from ..numerics import Tensor
from .parameter_set import ParameterSet


class FrameCritic(ParameterSet):
    """Scores single frames with an unconstrained real value.

    ``input_gradient`` must be written with first-order primitives so that
    the gradient penalty built from it stays differentiable w.r.t. the
    critic's parameters.
    """

    @abstractmethod
    def score(self, frames: Tensor, labels: Tensor | None = None) -> Tensor:
        """Critic values of shape (m, 1) for frames of shape (m, d)."""
        pass

    @abstractmethod
    def input_gradient(self, frames: Tensor, labels: Tensor | None = None) -> Tensor:
        """d score / d frames, shape (m, d), as a tape expression."""
        pass
