"""Pseudospectral toolkit for cubic NLS with unit-scale Wiener-randomized data."""
from .grid import Field, Grid, SpaceTimeField, fft, ifft, quadrature_norm
from .propagator import duhamel, free_evolution, propagate

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "Field",
    "SpaceTimeField",
    "fft",
    "ifft",
    "quadrature_norm",
    "propagate",
    "free_evolution",
    "duhamel",
    "__version__",
]
