"""Numerical laboratory for trace-free conjugate symmetric statistical structures."""

__version__ = "0.1.0"
