"""Compliant-hand manipulation stack: simulator, tactile codec, diffusion policy."""

__version__ = "0.1.0"
