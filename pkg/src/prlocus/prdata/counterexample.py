"""The stratification counterexample: profile readings and the empty-set scan.

Works on the flag 0 = V_0 < V_1 < V_2 < V_3 with dims (2, 4, 6).  The two
reference nilpotents have kernel-jump profiles (4, 2) and (3, 3); the scan
shows no flag-lowering pi can combine pi^2 = 0, rank pi = 3 and
pi(V_2) = V_1, which is the finite form of the non-existence argument.
"""

from __future__ import annotations

from dataclasses import dataclass

from .. import _kernels
from ..errors import ValidationError
from ..polygons import TorsionProfile
from ..rings import GF, PolyMatrix
from ..rings.gf import mat_mul
from .core import kernel_jump_profile

_DIMS = (2, 4, 6)


@dataclass(frozen=True)
class NilpotentFlagPoint:
    """A matrix lowering the standard flag of the given dims, over F_q."""

    q: int
    dims: tuple
    entries: tuple  # row-major tuple of tuples, encoded field elements

    def __post_init__(self):
        n = self.dims[-1]
        if len(self.entries) != n or any(len(r) != n for r in self.entries):
            raise ValidationError("entry matrix must be square of flag size")
        lo = 0
        for k, hi in enumerate(self.dims):
            prev = self.dims[k - 1] if k else 0
            for j in range(lo, hi):
                for i in range(prev, n):
                    if self.entries[i][j]:
                        raise ValidationError(
                            f"column {j} leaves V_{k} (nonzero row {i})"
                        )
            lo = hi

    def field(self) -> GF:
        n = self.q
        p = next(c for c in range(2, n + 1) if n % c == 0)
        s = 0
        while n > 1:
            n //= p
            s += 1
        return GF(p, s)

    def matrix(self) -> PolyMatrix:
        K = self.field()
        from ..rings import Poly

        return PolyMatrix.from_field(Poly(K), [list(r) for r in self.entries])

    def jump_profile(self) -> TorsionProfile:
        K = self.field()
        from ..rings import Poly

        P = Poly(K)
        n = self.dims[-1]
        return kernel_jump_profile(self.matrix(), PolyMatrix.identity(P, n))

    def is_square_zero(self) -> bool:
        K = self.field()
        rows = [list(r) for r in self.entries]
        sq = mat_mul(K, rows, rows)
        return all(not x for row in sq for x in row)


def reference_points(q: int):
    """The two nilpotents from the non-strong-stratification argument.

    pi_1 carries I_2 from V_2 onto V_1; pi_2 carries I_3 from V_3 onto V_2.
    """
    n = 6
    m1 = [[0] * n for _ in range(n)]
    m1[0][2] = m1[1][3] = 1
    m2 = [[0] * n for _ in range(n)]
    m2[0][3] = m2[1][4] = m2[2][5] = 1
    return (
        NilpotentFlagPoint(q, _DIMS, tuple(tuple(r) for r in m1)),
        NilpotentFlagPoint(q, _DIMS, tuple(tuple(r) for r in m2)),
    )


def counterexample_check(q: int = 2, backend=None) -> dict:
    """Profiles of the two reference points plus the exhaustive scan count.

    The scan runs over all q**12 flag-lowering matrices (blocks B in
    rows 0-1 x cols 2-3 and C in rows 0-3 x cols 4-5) and counts those with
    pi^2 = 0, rank pi = 3 and pi(V_2) = V_1.  The expected count is 0.
    """
    if q < 2:
        raise ValidationError("q must be a prime")
    for c in range(2, q):
        if q % c == 0:
            raise ValidationError("scan kernels need q prime")
    p1, p2 = reference_points(q)
    impl = _kernels.get_backend(backend)
    count, scanned = impl.count_flag_matrices(q)
    return {
        "q": q,
        "dims": _DIMS,
        "profile_pi1": p1.jump_profile(),
        "profile_pi2": p2.jump_profile(),
        "constrained_count": count,
        "scanned": scanned,
        "backend": impl.NAME,
    }
