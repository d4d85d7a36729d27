"""Numerical toolkit for multi-dimensional Weyl almost periodic functions."""

__version__ = "0.1.0"
