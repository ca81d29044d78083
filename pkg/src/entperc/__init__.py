"""Certified numerics for surrounding-sphere / 1-entanglement percolation."""

__version__ = "0.1.0"
