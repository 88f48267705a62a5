"""Simulation and numerical verification toolkit for self-similar Gaussian
processes: fractional, sub-fractional and bi-fractional Brownian motion,
their local times and the fluctuation limits of occupation functionals."""
from .functionals import FunctionFamily, TestFunction
from .kernels import BACKEND
from .process_models import Family, ProcessSpec
from .simulate import GridPath, sample_path

__version__ = "0.1.0"

__all__ = ["BACKEND", "Family", "FunctionFamily", "GridPath", "ProcessSpec", "TestFunction", "sample_path"]
