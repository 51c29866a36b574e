"""Criticality-enhanced metrology near the triple point of the anisotropic Rabi model."""
__version__ = "0.1.0"
