"""Minimal reverse-mode autodiff with the layers and optimizers the models need."""

from . import autodiff, checkpoint, layers, optim
from .autodiff import Parameter, Tensor, backward

__all__ = ["autodiff", "checkpoint", "layers", "optim", "Parameter", "Tensor", "backward"]
