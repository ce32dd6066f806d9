"""Exact numerics for the PXP chain."""

__version__ = "0.1.0"
