"""Markov-modulated infinite-server queue: exact simulation and limit analytics."""
from ._backend import BACKEND
from .model import ModelSpec, ScalingSpec, example_model

__version__ = "0.1.0"

__all__ = ["BACKEND", "ModelSpec", "ScalingSpec", "example_model", "__version__"]
