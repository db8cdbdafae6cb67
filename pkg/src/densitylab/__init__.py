"""Exact-rational laboratory for density, porosity, and martingale bounds.

Every quantity is a fractions.Fraction; every reported inequality is decided
by exact comparison, never by floating point.
"""

__all__ = ["__version__"]

__version__ = "0.1.0"
