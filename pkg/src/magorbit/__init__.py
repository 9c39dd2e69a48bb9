"""Magnetic geodesic flows and pendulums on adjoint orbits of compact Lie groups."""

__version__ = "0.1.0"
