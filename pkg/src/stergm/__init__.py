"""Discrete-time separable temporal ERGM simulation and tie-duration analytics."""

__version__ = "0.1.0"
