"""Numerical laboratory for the negative-dispersion Ostrovsky equation at H^{-3/4}."""

__version__ = "0.1.0"
