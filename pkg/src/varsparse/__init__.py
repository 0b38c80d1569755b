"""Numerical toolkit for variable-exponent norms, sparse operators and weights on dyadic grids."""

__version__ = "0.1.0"
