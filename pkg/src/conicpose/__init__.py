"""Ellipse detection and 3D circle pose recovery."""

__version__ = "0.1.0"
