"""Federated daisy-chaining: simulator, aggregation operators and guarantee checks."""

from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
