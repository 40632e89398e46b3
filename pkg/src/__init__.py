"""Nonlocal NS Lab - Vanishing-viscosity laboratory for 1D compressible flow with nonlocal forces"""

__version__ = "0.1.0"
__author__ = "Petar Nikolic"
