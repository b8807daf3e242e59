"""Numerical laboratory for c-projective geometry of Kähler metrics."""

__version__ = "0.1.0"
