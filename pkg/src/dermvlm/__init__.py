"""Desk-scale interactive dermatology diagnosis pipeline."""

__version__ = "0.1.0"
