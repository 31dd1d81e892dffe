"""Numerical laboratory for random operators with power-law long-range hopping.

Finite-volume Hamiltonians H = T/lam + V on cubes of Z^d, their Green's
functions and good/bad cube classification, eigenfunction localization
diagnostics, multi-scale bad-pair statistics, and moment dynamics.
"""

__version__ = "0.1.0"
