"""Semiclassical quantum dynamics with Coulomb-singular potentials.

Desk-scale numerical laboratory for the quantum-to-classical passage:
split-operator Schrodinger propagation, Wigner/Husimi phase-space
representations, symplectic particle transport of the limiting measure,
and the a priori estimates (singular-potential L^2 bound,
no-concentration ladder, tightness propagation, commutator positivity)
that tie the two descriptions together.
"""

__version__ = "0.1.0"
