"""Numerical checks of the sphere inequality ``I_alpha(u) >= (alpha - 2/3) |grad u|^2``."""
__version__ = "0.1.0"
