"""Pappas-Rapoport filtrations on modules with a nilpotent uniformizer action."""

from .core import (
    FilteredModule,
    PairedFilteredModule,
    case_c_gram,
    check_pairing_compat,
    dual_datum,
    extend_duality,
    is_rapoport,
    kernel_jump_profile,
    standard_ambient,
    torsion_profile,
    validate_pr,
)
from .counterexample import NilpotentFlagPoint, counterexample_check
from .e2step import e2_deformation_step
from .enumerate import enumerate_pr

__all__ = [
    "FilteredModule",
    "PairedFilteredModule",
    "NilpotentFlagPoint",
    "validate_pr",
    "extend_duality",
    "dual_datum",
    "check_pairing_compat",
    "torsion_profile",
    "kernel_jump_profile",
    "is_rapoport",
    "enumerate_pr",
    "counterexample_check",
    "e2_deformation_step",
    "standard_ambient",
    "case_c_gram",
]
