"""Physics-informed Laplace neural operator toolkit."""

from . import autodiff, benchmarks, fourier, grf, solvers
from .fields import Axis, SpaceTimeField

__all__ = ["autodiff", "benchmarks", "fourier", "grf", "solvers", "Axis",
           "SpaceTimeField"]

__version__ = "0.1.0"
