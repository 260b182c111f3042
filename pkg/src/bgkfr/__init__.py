"""High-order flux reconstruction solver for the 1D Boltzmann-BGK equation
with internal degrees of freedom and a discretely conservative velocity model."""
from . import kernels
from .config import Config, parse_config
from .solver import BGKSolver, run, setup

__version__ = "0.1.0"
__all__ = ["BGKSolver", "Config", "kernels", "parse_config", "run", "setup"]
