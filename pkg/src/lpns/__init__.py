"""Littlewood-Paley diagnostics for periodic Navier-Stokes trajectories."""
from .spectral import FourierGrid, ScalarField, VectorField, make_grid

__version__ = "0.1.0"

__all__ = ["FourierGrid", "ScalarField", "VectorField", "make_grid", "__version__"]
