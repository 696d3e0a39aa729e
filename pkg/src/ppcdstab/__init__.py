"""Exact stability analysis of planar probabilistic piecewise constant derivative systems."""

__version__ = "0.1.0"
