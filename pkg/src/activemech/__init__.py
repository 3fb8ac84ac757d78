"""Coupling schemes for active force generation and zero-dimensional tissue mechanics."""

__version__ = "1.0.0"
