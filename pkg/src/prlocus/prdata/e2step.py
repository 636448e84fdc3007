"""One deformation step at e = 2: lower the torsion profile by a unit square.

Given special-fiber data with jump profile (a_1, a_2) and a_1 above the
minimum, produce data over k[t] that restricts to the input at t = 0 and has
generic jump profile (a_1 - 1, a_2 + 1).  The construction follows the
adapted-basis recipe: keep the flag constant and replace one torsion
generator pi e by pi e + t w with a transversal w.
"""

from __future__ import annotations

from ..errors import (
    AlreadyMinimal,
    StageDataInvalid,
    UnsupportedCase,
    ValidationError,
)
from ..rings import PolyMatrix, generic_rank
from ..rings.gf import mat_mul, mat_rank, right_kernel, solve
from .core import (
    FilteredModule,
    PairedFilteredModule,
    kernel_jump_profile,
    validate_pr,
)


def _col(mat_rows, j):
    return [row[j] for row in mat_rows]


def _rank_cols(K, cols, n):
    if not cols:
        return 0
    return mat_rank(K, [[c[i] for c in cols] for i in range(n)])


def _greedy_extend(K, base, candidates, n, want):
    """Extend `base` by columns from `candidates` until rank reaches `want`."""
    acc = [c[:] for c in base]
    rank = _rank_cols(K, acc, n)
    picked = []
    for c in candidates:
        if rank >= want:
            break
        if _rank_cols(K, acc + [c], n) > rank:
            acc.append(c)
            picked.append(c)
            rank += 1
    if rank < want:
        raise ValidationError("could not complete the adapted basis")
    return picked


def _adapted_basis(F: FilteredModule):
    """Vectors e_1..e_{a_1} with pi e_1..pi e_{d_1} spanning omega^[1],
    pi e_1..pi e_{a_1} spanning omega[pi], and e_1..e_{a_2} the free part."""
    K = F.K
    n = F.ambient_rank
    pi = F.pi.mod_t()
    omega_cols = [[c[0] if c else 0 for c in col] for col in F.omega.cols()]
    omega1_cols = [[c[0] if c else 0 for c in col] for col in F.chain[1].cols()]
    d1 = F.signature.d[0]

    # free-part representatives: omega columns whose pi-images stay independent
    xs = []
    pix = []
    for c in omega_cols:
        img = _col(mat_mul(K, pi, [[v] for v in c]), 0)
        if any(img) and _rank_cols(K, pix + [img], n) > len(pix):
            xs.append(c)
            pix.append(img)
    a2 = len(pix)

    # complete pi x_i to a basis of omega^[1]
    ys_mid = _greedy_extend(K, pix, omega1_cols, n, d1)

    # omega[pi] = omega intersect ker pi, as a column set
    om_mat = [[c[i] for c in omega_cols] for i in range(n)]
    ker_pi = right_kernel(K, pi)
    torsion_cols = []
    aug = [
        [om_mat[i][j] for j in range(len(omega_cols))]
        + [K.neg(v[i]) for v in ker_pi]
        for i in range(n)
    ]
    for vec in right_kernel(K, aug):
        comb = [0] * n
        for j, coeff in enumerate(vec[: len(omega_cols)]):
            if coeff:
                for i in range(n):
                    comb[i] = K.add(comb[i], K.mul(coeff, omega_cols[j][i]))
        if any(comb) and _rank_cols(K, torsion_cols + [comb], n) > len(
            torsion_cols
        ):
            torsion_cols.append(comb)
    a1 = len(torsion_cols)
    ys_top = _greedy_extend(K, pix + ys_mid, torsion_cols, n, a1)

    # solve pi e_i = y_i for the non-free generators
    es = list(xs)
    for y in ys_mid + ys_top:
        sol = solve(K, pi, y)
        if sol is None:
            raise ValidationError("omega[pi] vector escaped the image of pi")
        es.append(sol)
    pies = pix + ys_mid + ys_top
    if _rank_cols(K, pies, n) != a1:
        raise ValidationError("adapted pi-images are dependent")
    if _rank_cols(K, pies[:a2] + xs, n) != 2 * a2:
        raise ValidationError("free part of the adapted basis is dependent")
    return es, pies, a1, a2


def _build_deformed(F, es, pies, a1, a2, w):
    """Chain over k[t] with generator pi e_{d1+1} replaced by it + t w."""
    P = F.P
    n = F.ambient_rank
    d1 = F.signature.d[0]
    n1_cols = [[P.const(v) for v in pies[j]] for j in range(d1)]
    gen_cols = []
    for j in range(a1):
        if j == d1:
            g = [
                P.add(P.const(pies[j][i]), P.mul((0, 1), P.const(w[i])))
                for i in range(n)
            ]
            gen_cols.append(g)
        else:
            gen_cols.append([P.const(v) for v in pies[j]])
    for x in es[:a2]:
        gen_cols.append([P.const(v) for v in x])
    chain = [
        PolyMatrix.from_cols(P, [], n),
        PolyMatrix.from_cols(P, n1_cols, n),
        PolyMatrix.from_cols(P, gen_cols, n),
    ]
    return FilteredModule(
        F.K, F.pi, chain, F.signature, labels=F.labels, pi_images=F.pi_images
    )


def _certify(F, out, a1, a2):
    bad = validate_pr(out)
    if bad:
        return False
    generic = kernel_jump_profile(out.pi, out.omega, generic=True)
    if tuple(generic.padded(2)) != (a1 - 1, a2 + 1):
        return False
    # special fiber must be the original omega
    t0 = out.omega.mod_t()
    om = F.omega.mod_t()
    n = F.ambient_rank
    joint = [t0[i] + om[i] for i in range(n)]
    if mat_rank(F.K, joint) != F.omega.ncols:
        return False
    return True


def _isotropy_exact(gram: PolyMatrix, omega: PolyMatrix) -> bool:
    return omega.transpose().mul(gram).mul(omega).is_zero()


def _case_c_candidates(F, gram, es, pies, a1, a2):
    """Transversals w with pi w in omega^[1] and w orthogonal to the kept
    generators, in deterministic order: kernel basis, then pairwise sums."""
    K = F.K
    n = F.ambient_rank
    pi = F.pi.mod_t()
    d1 = F.signature.d[0]
    kept = [pies[j] for j in range(a1) if j != d1] + es[:a2]
    gram0 = gram.mod_t()
    rows = []
    for v in kept:
        gv = [0] * n
        for r in range(n):
            if v[r]:
                for i in range(n):
                    gv[i] = K.add(gv[i], K.mul(v[r], gram0[r][i]))
        rows.append(gv)
    # pi w must stay in omega^[1]: augment against the span of those columns
    om1 = [pies[j] for j in range(d1)]
    aug = [
        [pi[i][j] for j in range(n)] + [K.neg(c[i]) for c in om1]
        for i in range(n)
    ]
    pre = []
    for vec in right_kernel(K, aug):
        cand = list(vec[:n])
        if any(cand) and _rank_cols(K, pre + [cand], n) > len(pre):
            pre.append(cand)
    if not rows:
        return pre
    basis = [c for c in pre if all(not _dot(K, r, c) for r in rows)]
    extra = []
    for i in range(len(pre)):
        for j in range(i + 1, len(pre)):
            s = [K.add(a, b) for a, b in zip(pre[i], pre[j])]
            if all(not _dot(K, r, s) for r in rows):
                extra.append(s)
    return basis + extra


def _dot(K, a, b):
    acc = 0
    for x, y in zip(a, b):
        if x and y:
            acc = K.add(acc, K.mul(x, y))
    return acc


def e2_deformation_step(F: FilteredModule, case="AL", gram=None):
    """Deform valid e = 2 special-fiber data one step toward the minimum.

    Returns a FilteredModule over k[t] (entries of degree at most 1).  For
    case C pass the ambient Gram matrix; the chosen transversal then keeps
    omega exactly isotropic.  Raises AlreadyMinimal when the jump profile
    cannot drop and UnsupportedCase for the split-ramified case.
    """
    if case == "AR":
        raise UnsupportedCase("no deformation recipe for case AR data")
    if case not in ("AL", "AU", "C"):
        raise ValidationError(f"unknown case {case!r}")
    if F.e != 2:
        raise ValidationError("the one-step deformation needs e = 2")
    if not F.is_special_fiber or F.max_deg() > 0:
        raise ValidationError("input must be special-fiber data over a field")
    bad = validate_pr(F)
    if bad:
        raise ValidationError("; ".join(bad))
    if case == "C" and gram is None:
        raise ValidationError("case C needs the ambient Gram matrix")

    prof = kernel_jump_profile(F.pi, F.omega).padded(2)
    a1, a2 = prof[0], prof[1]
    d1, d2 = F.signature.d
    if a1 == max(d1, d2):
        raise AlreadyMinimal(
            f"profile ({a1}, {a2}) already matches the signature minimum"
        )

    es, pies, a1_chk, a2_chk = _adapted_basis(F)
    assert (a1_chk, a2_chk) == (a1, a2)

    if case == "C":
        if not _isotropy_exact(gram, F.omega):
            raise ValidationError("case C input omega is not isotropic")
        for w in _case_c_candidates(F, gram, es, pies, a1, a2):
            out = _build_deformed(F, es, pies, a1, a2, w)
            if _certify(F, out, a1, a2) and _isotropy_exact(gram, out.omega):
                return out
        raise StageDataInvalid(
            "no isotropic transversal lowers the profile for this datum"
        )

    w = es[a2]
    out = _build_deformed(F, es, pies, a1, a2, w)
    if not _certify(F, out, a1, a2):
        raise StageDataInvalid("default transversal failed certification")
    return out
