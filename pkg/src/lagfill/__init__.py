"""Numerical verification of an immersed Lagrangian cobordism between Legendrian
unknots, its Maslov data at the double point, surgery bookkeeping and front spinning."""

__version__ = "0.1.0"
