"""Quadratic derivative Schrodinger system toolkit.

Exact null-structure algebra, periodic pseudo-spectral primitives,
Galilean vector-field norms, smoothing operators, a moving-frame RK4
integrator, and decay/scattering diagnostics for the three-component
system with mass-resonant dispersion coefficients.
"""

__version__ = "0.1.0"
