"""Numerical toolkit for one-sided (parabolic) Muckenhoupt weights on
finite space-time grids: dyadic systems, lagged cylinders/rectangles,
parabolic maximal operators, reverse Hoelder search, factorization, and
parabolic BMO."""

__version__ = "0.1.0"
