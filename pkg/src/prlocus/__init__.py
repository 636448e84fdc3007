"""Pappas-Rapoport stratification toolkit.

Exact-arithmetic models for filtered torsion modules with ramification,
their polygon invariants (Hodge, Newton, Pappas-Rapoport), deformation of
crystals along explicit infinitesimal directions, and small unitary local
models, with a CLI front end.
"""

__version__ = "0.1.0"
