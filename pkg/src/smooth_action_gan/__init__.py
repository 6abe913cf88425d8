"""Smooth Action GAN - stochastic skeleton-action generation from smooth latent transitions."""

__version__ = "0.1.0"
