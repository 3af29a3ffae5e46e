"""Numerical laboratory for banded Toeplitz matrices under small random perturbations."""

__version__ = "0.1.0"
