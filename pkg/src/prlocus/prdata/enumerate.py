"""Exhaustive enumeration of Pappas-Rapoport flags over small finite fields."""

from __future__ import annotations

from ..errors import BudgetExceeded, UnsupportedCase, ValidationError
from ..polygons import Signature
from ..rings import GF, PolyMatrix, gaussian_binomial
from ..rings.gf import enumerate_subspaces, mat_rank, right_kernel
from .core import (
    FilteredModule,
    PairedFilteredModule,
    case_c_gram,
    check_pairing_compat,
    standard_ambient,
)


def field_from_order(q: int) -> GF:
    """GF(q) for a prime power q."""
    n = q
    p = None
    for cand in range(2, q + 1):
        if q % cand == 0:
            p = cand
            break
    s = 0
    while n > 1:
        if n % p:
            raise ValidationError(f"{q} is not a prime power")
        n //= p
        s += 1
    return GF(p, s)


def _preimage_basis(K, pi_rows, sub_cols, n):
    """Basis columns of {x : pi x in span(sub_cols)} over the field."""
    if not sub_cols:
        return [list(v) for v in right_kernel(K, pi_rows)]
    aug = [pi_rows[i] + [K.neg(c[i]) for c in sub_cols] for i in range(n)]
    cols = [list(v[:n]) for v in right_kernel(K, aug)]
    # kernel vectors of the augmented system can repeat x-parts; keep a basis
    basis = []
    for c in cols:
        trial = basis + [c]
        mat = [[col[i] for col in trial] for i in range(n)]
        if mat_rank(K, mat) == len(trial):
            basis.append(c)
    return basis


def _complement_cols(K, sub_cols, big_cols, n):
    """Columns of big_cols extending sub_cols to a basis of their joint span."""
    acc = [c[:] for c in sub_cols]
    rank = mat_rank(K, [[c[i] for c in acc] for i in range(n)]) if acc else 0
    out = []
    for c in big_cols:
        trial = acc + [c]
        if mat_rank(K, [[col[i] for col in trial] for i in range(n)]) > rank:
            acc = trial
            rank += 1
            out.append(c)
    return out


def enumerate_pr(q, e, f, h, sig, case="AL", budget=500_000, pi=None):
    """Yield every PR flag over F_q for the signature, in a fixed order.

    The ambient is the standard one unless a conjugated pi matrix is passed;
    f only shapes the embedding labels.  Case C additionally filters for
    pairing compatibility (standard ambient only).
    """
    K = field_from_order(q)
    if isinstance(sig, Signature):
        signature = sig
    else:
        signature = Signature(tuple(sig), h)
    if signature.e != e or signature.h != h:
        raise ValidationError("signature shape disagrees with e, h")
    if case not in ("AL", "C"):
        raise UnsupportedCase(f"enumeration for case {case}")
    n = e * h
    # each level picks a d_j-subspace of a quotient of dim <= dim ker pi = h
    bound = 1
    for d in signature.d:
        bound *= gaussian_binomial(h, d, q)
    if bound > budget:
        raise BudgetExceeded(
            f"search space bound {bound} exceeds budget {budget}", bound=bound
        )
    P, std_pi = standard_ambient(K, e, h)
    if pi is None:
        pi = std_pi
    elif case == "C":
        raise UnsupportedCase("case C enumeration needs the standard ambient")
    elif pi.nrows != n or pi.ncols != n:
        raise ValidationError("pi must act on the rank e*h ambient")
    pi_rows = pi.mod_t()
    gram = None
    if case == "C":
        gram = _case_c_gram_checked(K, e, h)
    # the flag data lives at a single unramified embedding; f is recorded in
    # the labels but does not change the search space
    if f < 1:
        raise ValidationError("f must be positive")
    labels = tuple(f"sigma_{j}" for j in range(1, e + 1))

    def emit(chain_cols):
        chain = [
            PolyMatrix.from_field(P, [[c[i] for c in cols] for i in range(n)])
            if cols
            else PolyMatrix.from_cols(P, [], n)
            for cols in chain_cols
        ]
        F = FilteredModule(K, pi, chain, signature, labels=labels)
        if gram is not None:
            PF = PairedFilteredModule(F, gram)
            if not check_pairing_compat(PF):
                return None
            return F
        return F

    def rec(j, chain_cols):
        if j > e:
            F = emit(chain_cols)
            if F is not None:
                yield F
            return
        prev = chain_cols[-1]
        pre = _preimage_basis(K, pi_rows, prev, n)
        comp = _complement_cols(K, prev, pre, n)
        quo_dim = len(comp)
        d_j = signature.d[j - 1]
        if d_j > quo_dim:
            return
        for S in enumerate_subspaces(K, quo_dim, d_j):
            new_cols = [c[:] for c in prev]
            for srow in S:
                vec = [0] * n
                for t, coeff in enumerate(srow):
                    if coeff:
                        for i in range(n):
                            vec[i] = K.add(vec[i], K.mul(coeff, comp[t][i]))
                new_cols.append(vec)
            yield from rec(j + 1, chain_cols + [new_cols])

    yield from rec(1, [[]])


def _case_c_gram_checked(K, e, h):
    if e == 1:
        if h % 2:
            raise ValidationError("alternating perfect pairing needs even h")
        from ..rings import Poly

        P = Poly(K)
        g = h // 2
        rows = [[() for _ in range(h)] for _ in range(h)]
        for i in range(g):
            rows[i][g + i] = (1,)
            rows[g + i][i] = (K.neg(1),)
        return PolyMatrix(P, rows)
    return case_c_gram(K, e, h)
