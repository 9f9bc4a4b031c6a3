"""Anisotropic elastodynamic boundary quantities.

Stiffness tensors, Christoffel modes, quadratic-polynomial spectral
factorization, surface impedance tensors, region classification,
Rayleigh/Stoneley waves, reflection/transmission, and a layered
plane-wave simulator.
"""

__version__ = "0.1.0"
