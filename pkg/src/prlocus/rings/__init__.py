"""Coefficient rings: finite fields, polynomial matrices, truncated Witt vectors,
ramified extensions, and the truncated family ring used by the deformation engine.
"""

from .gf import GF, gaussian_binomial
from .polyring import Poly, FracPoly
from .polymat import PolyMatrix, generic_rank
from .witt import WittRing, witt_frobenius
from .ramified import RamifiedRing, ramified_val
from .famring import FamilyRing

__all__ = [
    "GF",
    "gaussian_binomial",
    "Poly",
    "FracPoly",
    "PolyMatrix",
    "generic_rank",
    "WittRing",
    "witt_frobenius",
    "RamifiedRing",
    "ramified_val",
    "FamilyRing",
]
