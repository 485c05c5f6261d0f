"""Rearrangement comparison for Robin and Neumann Poisson problems."""
from . import cylinder, harness, manufactured, measure, scenarios, solver, sources, sphere

__version__ = "0.1.0"
