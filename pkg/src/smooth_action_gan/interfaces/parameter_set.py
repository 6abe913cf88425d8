"""Abstract interface for collections of trainable tensors."""

from abc import ABC, abstractmethod
from collections.abc import Mapping

from ..numerics import Tensor


class ParameterSet(ABC):
    """A network's trainable tensors addressed by dotted names.

    The optimizer and the checkpoint writer only see this interface, so
    any network works with them interchangeably.
    """

    @abstractmethod
    def named_parameters(self) -> dict[str, Tensor]:
        """Return every trainable tensor keyed by a stable dotted name."""
        pass

    @abstractmethod
    def with_parameters(self, params: Mapping[str, Tensor]) -> "ParameterSet":
        """Return a copy with the named tensors replaced."""
        pass
