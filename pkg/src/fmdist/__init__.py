"""Factorial moment and total variation distances for matching laws vs Poisson."""

__version__ = "0.1.0"
