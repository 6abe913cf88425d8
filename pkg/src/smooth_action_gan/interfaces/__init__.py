"""Abstract interfaces for the Smooth Action GAN."""

from .frame_critic import FrameCritic
from .parameter_set import ParameterSet

__all__ = ["FrameCritic", "ParameterSet"]
