"""One-parameter deformations of crystals and the densification driver.

A deformation endomorphism N acts per embedding and replaces the structure
maps by F_N = (1 + [t] N) F and V_N^{-1} = (1 + [t] N) V^{-1}.  Over the
family coefficient ring this reads

    A_N[tau] = (I + t N_{tau+1}) A[tau]
    B_N[tau] = B[tau] sigma^{-1}((I + t N_{tau+1})^{-1})

and satisfies F_N V_N = V_N F_N = p exactly whenever N is nilpotent, which
every construction here guarantees.  The Newton polygon of the generic fiber
never rises above the special one, and suitably chosen N strictly lower it;
iterating such steps drives a crystal to the mu-ordinary polygon of its
signature.
"""

import math
from collections import namedtuple
from dataclasses import dataclass
from fractions import Fraction
from itertools import product as _iproduct

from .crystals import (
    Crystal,
    _check_pairing,
    _coerce_matrix,
    _freeze_matrix,
    _hull_value,
    _lower_hull,
    _mat_eq,
    _residue_matrix,
    conj_index,
    newton_polygon,
    pr_polygon,
    slope_split,
)
from .errors import (
    BudgetExceeded,
    PairingViolated,
    PrecisionExhausted,
    RelationViolated,
    StageDataInvalid,
    UnsupportedCase,
    ValidationError,
)
from .polygons import Polygon, dominates
from .rings.famring import FamilyRing
from .rings.gf import mat_rank, mat_vec
from .rings.ramified import (
    berkowitz_charpoly,
    rmat_conj,
    rmat_identity,
    rmat_inv,
    rmat_mul,
    rmat_scalar,
    rmat_sigma,
    rmat_transpose,
)

__all__ = [
    "DeformationOp",
    "deformation_op",
    "validate_N",
    "pairing_adjoint",
    "CrystalFamily",
    "deform",
    "family_relation_ok",
    "family_adjunction_ok",
    "reduce_t0",
    "family_newton",
    "family_nilpotent_mod_pi",
    "family_frobenius_iterate",
    "lift_vector",
    "lift_residue_vector",
    "vector_zero_mod_pi",
    "specialize_family",
    "DefseqResult",
    "find_defseq",
    "validate_defseq",
    "build_N_AL",
    "build_N_AU",
    "build_N_C",
    "au_isotropy_adjust",
    "DensifyStep",
    "densify",
    "trace_to_json_obj",
]


# ---------------------------------------------------------------------------
# Deformation endomorphisms.


@dataclass(frozen=True)
class DeformationOp:
    """Per-embedding endomorphism N = (N_tau) over O_m, with a free-form note."""

    case: str
    mats: tuple
    note: str = ""

    def __post_init__(self):
        object.__setattr__(
            self, "mats", tuple(_freeze_matrix(M) for M in self.mats)
        )

    def tau_mat(self, tau):
        return self.mats[tau % len(self.mats)]


def deformation_op(c, mats, note=""):
    """Checked constructor; integer entries are coerced into the ring."""
    if len(mats) != c.f:
        raise ValidationError(f"expected {c.f} matrices, got {len(mats)}")
    R = c.ring
    coerced = tuple(
        _coerce_matrix(R, M, c.h, f"N[{tau}]") for tau, M in enumerate(mats)
    )
    return DeformationOp(c.case, coerced, note)


def pairing_adjoint(c, M, tau):
    """Adjoint of M in End(M_tau) w.r.t. the pairing; lands in End(M_taubar).

    Characterized by h(M u, v) = h(u, M^* v); concretely
    M^* = conj(G_tau^{-1} M^T G_tau), exact over O_m.
    """
    if c.pairing is None:
        raise ValidationError("crystal carries no pairing")
    R = c.ring
    G = [list(row) for row in c.pairing.gram(tau)]
    Ginv = rmat_inv(R, G)
    sandwich = rmat_mul(R, Ginv, rmat_mul(R, rmat_transpose(M), G))
    return rmat_conj(R, sandwich)


def _mat_is_zero(R, A):
    return all(x == R.zero for row in A for x in row)


def _nilpotency_index(R, M, bound):
    """Least k <= bound with M^k = 0 exactly, or None."""
    P = [list(row) for row in M]
    for k in range(1, bound + 1):
        if _mat_is_zero(R, P):
            return k
        P = rmat_mul(R, P, M)
    return None


def validate_N(c, op):
    """Report on the deformation conditions for N.

    Nilpotency and skewness are the two conditions a deformation must satisfy
    in the polarized cases; neither is required in case AL.  O-linearity holds
    by representation (per-embedding matrices over O_m commute with O).
    """
    R = c.ring
    h = c.h
    shape_ok = len(op.mats) == c.f and all(
        len(M) == h and all(len(row) == h for row in M) for M in op.mats
    )
    report = {"shape": shape_ok, "o_linear": True, "nilpotent": False, "skew": None}
    if not shape_ok:
        report["valid"] = False
        return report
    report["nilpotent"] = all(
        _nilpotency_index(R, M, h) is not None for M in op.mats
    )
    if c.pairing is not None:
        skew = True
        for tau in range(c.f):
            tb = conj_index(c.case, c.f, tau)
            G = c.pairing.gram(tau)
            lhs = rmat_mul(R, rmat_transpose(op.mats[tau]), G)
            rhs = rmat_mul(R, G, rmat_conj(R, op.mats[tb]))
            total = [
                [R.add(a, b) for a, b in zip(r1, r2)]
                for r1, r2 in zip(lhs, rhs)
            ]
            if not _mat_is_zero(R, total):
                skew = False
                break
        report["skew"] = skew
    if c.case == "AL":
        report["valid"] = True
    else:
        report["valid"] = report["nilpotent"] and report["skew"] is not False
    return report


# ---------------------------------------------------------------------------
# The deformed crystal over the family base.


@dataclass(frozen=True)
class CrystalFamily:
    fam: FamilyRing
    special: Crystal
    op: DeformationOp
    F: tuple
    V: tuple

    @property
    def f(self):
        return self.special.f

    @property
    def h(self):
        return self.special.h


def _lift_fam_matrix(fam, A):
    return tuple(tuple(fam.from_scalar(x) for x in row) for row in A)


def _one_plus_t(fam, N):
    R = fam.R
    h = len(N)
    out = []
    for i in range(h):
        row = []
        for j in range(h):
            pairs = [(Fraction(1), N[i][j])]
            if i == j:
                pairs.append((Fraction(0), R.one))
            row.append(fam.make(pairs))
        out.append(tuple(row))
    return out


def _inv_one_plus_t(fam, N):
    """(I + t N)^{-1} = sum (-t)^k N^k; terminates since N is nilpotent."""
    R = fam.R
    h = len(N)
    acc = [
        [fam.one if i == j else fam.zero for j in range(h)] for i in range(h)
    ]
    P = [list(row) for row in N]
    k = 1
    while not _mat_is_zero(R, P):
        if k > h:
            raise ValidationError("inverse of 1 + tN needs a nilpotent N")
        for i in range(h):
            for j in range(h):
                coeff = P[i][j] if k % 2 == 0 else R.neg(P[i][j])
                acc[i][j] = fam.add(acc[i][j], fam.make([(Fraction(k), coeff)]))
        P = rmat_mul(R, P, N)
        k += 1
    return acc


def deform(c, op, T=None, denom_budget=16):
    """Deform c along N, returning the family crystal with exact relations.

    Raises ValidationError when N is not nilpotent (the model inverts 1 + tN
    as a polynomial) and PairingViolated when a polarized crystal is handed a
    non-skew N.  The t = 0 reduction, the relation F_N V_N = V_N F_N = p and,
    in polarized cases, the adjunction over the family are all verified.
    """
    report = validate_N(c, op)
    if not report["shape"]:
        raise ValidationError("deformation matrices have the wrong shape")
    if not report["nilpotent"]:
        raise ValidationError("deformation model requires a nilpotent N")
    if c.pairing is not None and report["skew"] is False:
        raise PairingViolated("N is not skew for the crystal's pairing")
    R = c.ring
    if T is None:
        T = Fraction(c.p) ** (2 * c.h * c.f + 2)
    fam = FamilyRing(R, T=T, denom_budget=denom_budget)
    AN = []
    BN = []
    for tau in range(c.f):
        j = (tau + 1) % c.f
        one_plus = _one_plus_t(fam, op.mats[j])
        inv = _inv_one_plus_t(fam, op.mats[j])
        AN.append(rmat_mul(fam, one_plus, _lift_fam_matrix(fam, c.F[tau])))
        BN.append(
            rmat_mul(
                fam, _lift_fam_matrix(fam, c.V[tau]), rmat_sigma(fam, inv, -1)
            )
        )
    fc = CrystalFamily(
        fam,
        c,
        op,
        tuple(tuple(tuple(r) for r in A) for A in AN),
        tuple(tuple(tuple(r) for r in B) for B in BN),
    )
    if not family_relation_ok(fc):
        raise RelationViolated("family relation F_N V_N = p fails")
    zero = reduce_t0(fc)
    t0_ok = all(_mat_eq(A, B) for A, B in zip(zero.F, c.F)) and all(
        _mat_eq(A, B) for A, B in zip(zero.V, c.V)
    )
    if not t0_ok:
        raise ValidationError("t = 0 reduction does not recover the crystal")
    if c.pairing is not None and not family_adjunction_ok(fc):
        raise PairingViolated("family adjunction fails for the deformed maps")
    return fc


def family_relation_ok(fc):
    fam = fc.fam
    R = fam.R
    pid = [
        [
            fam.from_scalar(R.from_int(R.p)) if i == j else fam.zero
            for j in range(fc.h)
        ]
        for i in range(fc.h)
    ]
    for tau in range(fc.f):
        sB = rmat_sigma(fam, fc.V[tau], 1)
        if rmat_mul(fam, [list(r) for r in fc.F[tau]], sB) != pid:
            return False
        if rmat_mul(fam, sB, [list(r) for r in fc.F[tau]]) != pid:
            return False
    return True


def family_adjunction_ok(fc):
    """Adjunction h(x, F_N y) = sigma(h(V_N x, y)) over the family base."""
    c = fc.special
    if c.pairing is None:
        return True
    fam = fc.fam
    grams = [
        _lift_fam_matrix(fam, c.pairing.gram(tau)) for tau in range(c.f)
    ]
    for tau in range(c.f):
        tb = conj_index(c.case, c.f, tau)
        lhs = rmat_mul(
            fam,
            [list(r) for r in grams[(tau + 1) % c.f]],
            rmat_conj(fam, fc.F[tb]),
        )
        rhs = rmat_mul(
            fam,
            rmat_transpose(rmat_sigma(fam, fc.V[tau], 1)),
            rmat_sigma(fam, grams[tau], 1),
        )
        if lhs != rhs:
            return False
    return True


def reduce_t0(fc):
    """The special fiber recovered from constant terms; equals fc.special."""
    fam = fc.fam
    F = tuple(
        tuple(tuple(fam.constant_term(x) for x in row) for row in A)
        for A in fc.F
    )
    V = tuple(
        tuple(tuple(fam.constant_term(x) for x in row) for row in B)
        for B in fc.V
    )
    c = fc.special
    return Crystal(c.case, c.ring, F, V, c.pairing)


# ---------------------------------------------------------------------------
# Generic fiber: iteration, Newton polygon, nilpotency mod pi.


def lift_vector(fc, vec):
    """Constant family vector from O_m entries."""
    return tuple(fc.fam.from_scalar(x) for x in vec)


def lift_residue_vector(fc, codes):
    R = fc.fam.R
    return lift_vector(fc, _lift_vec(R, codes))


def vector_zero_mod_pi(fc, vec):
    return all(fc.fam.is_zero_mod_pi(x) for x in vec)


def family_frobenius_iterate(fc, tau, vec, k):
    """F_N^k applied to a family vector sitting at embedding tau."""
    fam = fc.fam
    cur = list(vec)
    for step in range(k):
        j = (tau + step) % fc.f
        twisted = [fam.sigma(x, 1) for x in cur]
        A = fc.F[j]
        cur = []
        for row in A:
            acc = fam.zero
            for a, x in zip(row, twisted):
                if a != fam.zero and x != fam.zero:
                    acc = fam.add(acc, fam.mul(a, x))
            cur.append(acc)
    return tuple(cur)


def _family_linearized(fc, tau0=0):
    fam = fc.fam
    f = fc.f
    B = [list(r) for r in fc.F[(tau0 - 1) % f]]
    for k in range(1, f):
        B = rmat_mul(fam, B, rmat_sigma(fam, fc.F[(tau0 - 1 - k) % f], k))
    return B


def family_newton(fc):
    """Newton polygon of the generic fiber, with certified absent coefficients.

    The valuation of a family element is the minimum over its t-monomials of
    the coefficient valuation: t specializes to a unit on the generic fiber
    and distinct monomials cannot cancel.
    """
    fam = fc.fam
    c = fc.special
    coeffs = berkowitz_charpoly(fam, _family_linearized(fc))
    pts = []
    absent = []
    for i, coef in enumerate(coeffs):
        v = fam.val(coef)
        if v is math.inf:
            absent.append(i)
        else:
            pts.append((i, v))
    if absent and absent[-1] == c.h:
        raise PrecisionExhausted(
            "det of the family Frobenius vanishes at working precision"
        )
    hull = _lower_hull(pts)
    floor = Fraction(c.ring.m)
    for i in absent:
        if floor < _hull_value(hull, i):
            raise PrecisionExhausted(
                f"family charpoly coefficient {i} vanishes at precision "
                f"{c.ring.m} but could still shift the Newton hull"
            )
    pairs = []
    for (x0, y0), (x1, y1) in zip(hull, hull[1:]):
        s = Fraction(y1 - y0, x1 - x0) / c.f
        if s < 0 or s > 1:
            raise ValidationError(f"family Newton slope {s} escapes [0, 1]")
        pairs.append((s, Fraction(x1 - x0)))
    return Polygon(pairs, e=c.e * c.f)


def family_nilpotent_mod_pi(fc, steps=None):
    """Whether F_N is nilpotent mod pi on the whole family fiber.

    Checks, for every base embedding, h twisted powers of the linearized
    F_N^f; over the perfect generic fiber this bound is exact.
    """
    fam = fc.fam
    if steps is None:
        steps = fc.h
    for tau0 in range(fc.f):
        M = _family_linearized(fc, tau0)
        acc = M
        dead = all(fam.is_zero_mod_pi(x) for row in acc for x in row)
        j = 1
        while not dead and j < steps:
            acc = rmat_mul(fam, acc, rmat_sigma(fam, M, j * fc.f))
            dead = all(fam.is_zero_mod_pi(x) for row in acc for x in row)
            j += 1
        if not dead:
            return False
    return True


def specialize_family(fc, c0):
    """Honest crystal at t = [c0], the Teichmueller lift of a residue element.

    Fractional exponents evaluate through the inverse residue Frobenius,
    which makes the substitution commute with sigma; the exact family
    relations and pairing therefore specialize exactly.
    """
    c = fc.special
    R = c.ring
    K = R.W.res
    p = R.p
    if not 0 <= c0 < K.q:
        raise ValidationError(f"residue code {c0} out of range")

    def eval_monomial(alpha):
        den = alpha.denominator
        num = alpha.numerator
        r = c0
        while den > 1:
            if den % p:
                raise ValidationError(f"exponent denominator {den} not a p-power")
            den //= p
            r = K.frob_inv(r)
        return R.teich(K.pow(r, num))

    def spec_mat(A):
        return tuple(
            tuple(
                fc.fam.specialize(x, eval_monomial, R, lambda cc: cc)
                for x in row
            )
            for row in A
        )

    F = tuple(spec_mat(A) for A in fc.F)
    V = tuple(spec_mat(B) for B in fc.V)
    out = Crystal(c.case, R, F, V, c.pairing)
    pid = rmat_scalar(R, R.from_int(p), rmat_identity(R, c.h))
    for tau in range(c.f):
        sB = rmat_sigma(R, out.V[tau])
        if not _mat_eq(rmat_mul(R, out.F[tau], sB), pid):
            raise RelationViolated("specialized relation F V = p fails")
        if not _mat_eq(rmat_mul(R, sB, out.F[tau]), pid):
            raise RelationViolated("specialized relation V F = p fails")
    if c.pairing is not None:
        _check_pairing(out, c.pairing, raise_on_fail=True)
    return out


# ---------------------------------------------------------------------------
# Residue-level scaffolding for the stage constructions.


def _res_F(c):
    R = c.ring
    return [_residue_matrix(R, A) for A in c.F]


def _apply_F_res(K, Fbar, tau, vec):
    twisted = [K.frob(x) for x in vec]
    return tuple(mat_vec(K, Fbar[tau % len(Fbar)], twisted))


def _iter_F_res(K, Fbar, tau, vec, k):
    cur = tuple(vec)
    for step in range(k):
        cur = _apply_F_res(K, Fbar, tau + step, cur)
    return cur


def _death(K, Fbar, tau, vec, bound):
    """Least k with Fbar^k vec = 0, or None when it survives past bound."""
    cur = tuple(vec)
    for k in range(bound + 1):
        if not any(cur):
            return k
        cur = _apply_F_res(K, Fbar, tau + k, cur)
    return None


def _vectors(K, h):
    return _iproduct(K.elements(), repeat=h)


def _lift_vec(R, codes):
    return tuple(R.from_witt(R.W.from_res(a)) for a in codes)


def _outer(R, col, row):
    return tuple(tuple(R.mul(a, b) for b in row) for a in col)


def _mat_add(R, A, B):
    return tuple(
        tuple(R.add(a, b) for a, b in zip(r1, r2)) for r1, r2 in zip(A, B)
    )


def _zeros(R, h):
    return tuple(tuple(R.zero for _ in range(h)) for _ in range(h))


def _r_solve(R, rows, rhs):
    """Exact solution phi of <rows[i], phi> = rhs[i] over O_m.

    Requires the rows to be independent mod pi; Gaussian elimination then
    always finds unit pivots.
    """
    M = [list(r) for r in rows]
    b = list(rhs)
    r = len(M)
    n = len(M[0])
    used = []
    for i in range(r):
        pc = next(
            (j for j in range(n) if j not in used and R.is_unit(M[i][j])),
            None,
        )
        if pc is None:
            raise StageDataInvalid("dependent constraints in a dyad solve")
        inv = R.inv(M[i][pc])
        M[i] = [R.mul(inv, a) for a in M[i]]
        b[i] = R.mul(inv, b[i])
        for k2 in range(r):
            if k2 != i and M[k2][pc] != R.zero:
                coef = M[k2][pc]
                M[k2] = [
                    R.sub(a, R.mul(coef, a2)) for a, a2 in zip(M[k2], M[i])
                ]
                b[k2] = R.sub(b[k2], R.mul(coef, b[i]))
        used.append(pc)
    phi = [R.zero] * n
    for i, pc in enumerate(used):
        phi[pc] = b[i]
    return tuple(phi)


def _rank1(R, image_codes, constraints, rhs_units):
    """Dyad sending constraints[k] to rhs_units[k] * image, zero transversally."""
    phi = _r_solve(R, [_lift_vec(R, v) for v in constraints], rhs_units)
    return _outer(R, _lift_vec(R, image_codes), phi)


def _res_conj_vec(c, vec):
    K = c.ring.W.res
    if c.case == "AU":
        out = vec
        for _ in range(c.f // 2):
            out = tuple(K.frob(x) for x in out)
        return out
    return tuple(vec)


def _res_pairing(c, tau, v, w):
    """Residue of h_tau(v, w) for residue vectors v, w."""
    K = c.ring.W.res
    G = _residue_matrix(c.ring, c.pairing.gram(tau))
    Gw = mat_vec(K, G, list(_res_conj_vec(c, w)))
    acc = 0
    for a, b in zip(v, Gw):
        acc = K.add(acc, K.mul(a, b))
    return acc


# ---------------------------------------------------------------------------
# Deformation sequences.


DefseqResult = namedtuple("DefseqResult", ["found", "sequence", "report"])


def validate_defseq(c, seq):
    """Clauses: x_tau in M_tau, F x_tau != 0 mod pi, and F x_tau = x_{tau+1}
    whenever F^2 x_tau survives mod pi."""
    if len(seq) != c.f:
        return False
    K = c.ring.W.res
    Fbar = _res_F(c)
    for tau in range(c.f):
        x = tuple(seq[tau])
        if len(x) != c.h:
            return False
        fx = _apply_F_res(K, Fbar, tau, x)
        if not any(fx):
            return False
        ffx = _apply_F_res(K, Fbar, tau + 1, fx)
        if any(ffx) and fx != tuple(seq[(tau + 1) % c.f]):
            return False
    return True


def find_defseq(c):
    """Greedy lowest-index search for a deformation sequence.

    Returns an absence witness in the report when the structural
    preconditions (bi-infinitesimal, nowhere vanishing Frobenius) fail.
    """
    K = c.ring.W.res
    Fbar = _res_F(c)
    f = c.f
    nonzero = tuple(
        any(x != 0 for row in Fbar[tau] for x in row) for tau in range(f)
    )
    split = slope_split(c)
    bi_inf = split.etale == 0 and split.multiplicative == 0
    seq = [None] * f

    def clause2(tau, x):
        return any(_apply_F_res(K, Fbar, tau, x))

    def backtrack(tau):
        if tau == f:
            last = seq[f - 1]
            fx = _apply_F_res(K, Fbar, f - 1, last)
            if any(_apply_F_res(K, Fbar, f, fx)) and fx != seq[0]:
                return False
            return True
        forced = None
        if tau > 0:
            fx = _apply_F_res(K, Fbar, tau - 1, seq[tau - 1])
            if any(_apply_F_res(K, Fbar, tau, fx)):
                forced = fx
        cands = [forced] if forced is not None else _vectors(K, c.h)
        for x in cands:
            x = tuple(x)
            if not clause2(tau, x):
                continue
            seq[tau] = x
            if backtrack(tau + 1):
                return True
        seq[tau] = None
        return False

    report = {"bi_infinitesimal": bi_inf, "frobenius_nonzero": nonzero}
    if backtrack(0):
        report["reason"] = None
        return DefseqResult(True, tuple(seq), report)
    if not bi_inf:
        report["reason"] = "crystal is not bi-infinitesimal"
    elif not all(nonzero):
        report["reason"] = "Frobenius vanishes mod pi at some embedding"
    else:
        report["reason"] = "search exhausted"
    return DefseqResult(False, None, report)


# ---------------------------------------------------------------------------
# Stage constructions.


def build_N_AL(c, x, stage="auto", tau=0):
    """N for the unpolarized stages, from a vector x dying mod pi.

    Stage "early" realizes the i <= f construction (needs f >= 2): with y the
    last surviving iterate and w a companion with F w != 0, N sends y to w.
    Stage "cycle" uses the minimal r0 with F^{r0 f} x = 0 and sends F^f x to
    x, killing the rest of the cycle family.  Claimed stage data is recomputed
    and certified, never trusted.
    """
    R = c.ring
    K = R.W.res
    Fbar = _res_F(c)
    x = tuple(x)
    if len(x) != c.h:
        raise StageDataInvalid("vector has the wrong length")
    if not any(_apply_F_res(K, Fbar, tau, x)):
        raise StageDataInvalid("F(x) = 0 mod pi; no stage applies")
    bound = c.h * c.f + 2
    death = _death(K, Fbar, tau, x, bound)
    if death is None:
        raise StageDataInvalid("x survives Frobenius iteration; nothing to deform")
    if stage == "auto":
        stage = "early" if (c.f >= 2 and death <= c.f) else "cycle"
    if stage == "early":
        if c.f < 2:
            raise StageDataInvalid("early stage needs at least two embeddings")
        if not 2 <= death <= c.f:
            raise StageDataInvalid(
                f"death index {death} outside [2, f] for the early stage"
            )
        i = death
        j = (tau + i - 1) % c.f
        y = _iter_F_res(K, Fbar, tau, x, i - 1)
        w = None
        for cand in _vectors(K, c.h):
            if not any(_apply_F_res(K, Fbar, j, cand)):
                continue
            if mat_rank(K, [list(y), list(cand)]) == 2:
                w = tuple(cand)
                break
        if w is None:
            raise StageDataInvalid("no companion vector with F w != 0 mod pi")
        Nj = _rank1(R, w, [y, w], [R.one, R.zero])
        mats = [_zeros(R, c.h) for _ in range(c.f)]
        mats[j] = Nj
        note = f"AL early i={i} tau={tau}"
    elif stage == "cycle":
        if c.f >= 2 and death <= c.f:
            raise StageDataInvalid("chain dies too early for the cycle stage")
        r0 = -(-death // c.f)
        if r0 < 2:
            raise StageDataInvalid("cycle stage needs F^f x != 0 mod pi")
        chain = [
            _iter_F_res(K, Fbar, tau, x, i * c.f) for i in range(r0)
        ]
        if mat_rank(K, [list(v) for v in chain]) != r0:
            raise StageDataInvalid("cycle family is dependent mod pi")
        rhs = [R.one if i == 1 else R.zero for i in range(r0)]
        Ntau = _rank1(R, x, chain, rhs)
        mats = [_zeros(R, c.h) for _ in range(c.f)]
        mats[tau % c.f] = Ntau
        note = f"AL cycle r0={r0} tau={tau}"
    else:
        raise ValidationError(f"unknown AL stage {stage!r}")
    return DeformationOp(c.case, tuple(mats), note)


def au_isotropy_adjust(c, x, tau):
    """Replace x by x + V(m) so that h(x, F^d x) = 0 mod pi, if possible.

    Exhausts correction vectors m; returns None when no correction works
    (in particular when F^{d+1} x = 0 mod pi, where the adjustment lever
    vanishes).  Assumes an NNP-normalized crystal, where V plays the role
    of the divided operator.
    """
    if c.pairing is None:
        raise ValidationError("isotropy adjustment needs the pairing")
    R = c.ring
    K = R.W.res
    Fbar = _res_F(c)
    Bbar = _residue_matrix(R, c.V[tau % c.f])
    d = c.f // 2
    for m in _vectors(K, c.h):
        back = [K.frob_inv(v) for v in m]
        corr = mat_vec(K, Bbar, back)
        x2 = tuple(K.add(a, b) for a, b in zip(x, corr))
        if not any(_apply_F_res(K, Fbar, tau, x2)):
            continue
        fdx = _iter_F_res(K, Fbar, tau, x2, d)
        if _res_pairing(c, tau, x2, fdx) == 0:
            return x2
    return None


def build_N_AU(c, data, stage):
    """N for the polarized AU stages; the conjugate block is minus the adjoint.

    Stage "extend" sends the last surviving iterate F^r x to a companion y
    with F y != 0.  Stage "final" requires F^d x != 0 and F^{2d} x = 0 and
    sends F^d x to a companion y on the conjugate side with F^d y != 0;
    when h(x, F^d x) != 0 mod pi an isotropy adjustment is attempted first.
    """
    if c.pairing is None:
        raise ValidationError("AU constructions need the polarization")
    R = c.ring
    K = R.W.res
    Fbar = _res_F(c)
    d = c.f // 2
    tau = data.get("tau", 0)
    x = tuple(data["x"])
    if not any(_apply_F_res(K, Fbar, tau, x)):
        raise StageDataInvalid("F(x) = 0 mod pi")
    bound = c.h * c.f + 2
    if stage == "extend":
        death = _death(K, Fbar, tau, x, bound)
        if death is None:
            raise StageDataInvalid("x survives iteration; no maximal r exists")
        r = death - 1
        if "r" in data and data["r"] != r:
            raise StageDataInvalid(
                f"claimed maximal r={data['r']} but certified r={r}"
            )
        j = (tau + r) % c.f
        u = _iter_F_res(K, Fbar, tau, x, r)
        y = data.get("y")
        if y is not None:
            y = tuple(y)
            if not any(_apply_F_res(K, Fbar, j, y)):
                raise StageDataInvalid("companion y has F y = 0 mod pi")
            if mat_rank(K, [list(u), list(y)]) != 2:
                raise StageDataInvalid("companion y not independent from F^r x")
        else:
            for cand in _vectors(K, c.h):
                if not any(_apply_F_res(K, Fbar, j, cand)):
                    continue
                if mat_rank(K, [list(u), list(cand)]) == 2:
                    y = tuple(cand)
                    break
            if y is None:
                raise StageDataInvalid("no companion vector at the target embedding")
        Nj = _rank1(R, y, [u, y], [R.one, R.zero])
        jb = conj_index(c.case, c.f, j)
        mats = [_zeros(R, c.h) for _ in range(c.f)]
        mats[j] = Nj
        mats[jb] = tuple(
            tuple(R.neg(v) for v in row) for row in pairing_adjoint(c, Nj, j)
        )
        note = f"AU extend r={r} tau={tau}"
    elif stage == "final":
        fdx = _iter_F_res(K, Fbar, tau, x, d)
        if not any(fdx):
            raise StageDataInvalid("F^d x = 0 mod pi; final stage needs it nonzero")
        if any(_iter_F_res(K, Fbar, tau, x, 2 * d)):
            raise StageDataInvalid("F^{2d} x != 0 mod pi; crystal already escapes")
        adjusted = False
        if _res_pairing(c, tau, x, fdx) != 0:
            x2 = au_isotropy_adjust(c, x, tau)
            if x2 is not None and not any(_iter_F_res(K, Fbar, tau, x2, 2 * d)):
                fdx2 = _iter_F_res(K, Fbar, tau, x2, d)
                if any(fdx2):
                    x, fdx, adjusted = x2, fdx2, True
        tb = (tau + d) % c.f
        y = data.get("y")
        if y is not None:
            y = tuple(y)
            if not any(_iter_F_res(K, Fbar, tb, y, d)):
                raise StageDataInvalid("companion y has F^d y = 0 mod pi")
            if mat_rank(K, [list(fdx), list(y)]) != 2:
                raise StageDataInvalid("companion y not independent from F^d x")
        else:
            for cand in _vectors(K, c.h):
                if not any(_iter_F_res(K, Fbar, tb, cand, d)):
                    continue
                if mat_rank(K, [list(fdx), list(cand)]) == 2:
                    y = tuple(cand)
                    break
            if y is None:
                raise StageDataInvalid("no companion vector on the conjugate side")
        Ntb = _rank1(R, y, [fdx, y], [R.one, R.zero])
        mats = [_zeros(R, c.h) for _ in range(c.f)]
        mats[tb] = Ntb
        mats[conj_index(c.case, c.f, tb)] = tuple(
            tuple(R.neg(v) for v in row) for row in pairing_adjoint(c, Ntb, tb)
        )
        note = f"AU final tau={tau} adjusted={adjusted}"
    else:
        raise ValidationError(f"unknown AU stage {stage!r}")
    return DeformationOp(c.case, tuple(mats), note)


def build_N_C(c, seq):
    """N from a deformation sequence in the polarized case C.

    At each embedding where F x_tau differs from x_{tau+1}, a pairing dyad
    sends F x_tau to x_{tau+1}; the alternating Gram makes every dyad skew
    and square-zero exactly over O_m.
    """
    if c.pairing is None:
        raise ValidationError("case C construction needs the polarization")
    if not validate_defseq(c, seq):
        raise StageDataInvalid("not a deformation sequence for this crystal")
    R = c.ring
    K = R.W.res
    Fbar = _res_F(c)
    mats = [_zeros(R, c.h) for _ in range(c.f)]
    moved = 0
    for tau in range(c.f):
        j = (tau + 1) % c.f
        u = _apply_F_res(K, Fbar, tau, seq[tau])
        target = tuple(seq[j])
        if u == target:
            continue
        moved += 1
        G = c.pairing.gram(j)
        ul = _lift_vec(R, u)
        xl = _lift_vec(R, target)
        s = _res_pairing(c, j, u, target)
        if s != 0:
            # h(u, x) is a unit: the single dyad v -> lam h(v, x) x works.
            hux = _dot(R, ul, _gmat_vec(R, G, xl))
            lam = R.inv(hux)
            row = _gmat_vec(R, G, xl)
            Nj = tuple(
                tuple(R.mul(lam, R.mul(a, b)) for b in row) for a in xl
            )
        else:
            # Need b with h(u, b) = 1, h(x, b) = 0; then the symmetric pair
            # of dyads v -> h(v, b) x + h(v, x) b is skew and square-zero.
            rows = [_vec_gmat(R, ul, G), _vec_gmat(R, xl, G)]
            b = _r_solve(R, rows, [R.one, R.zero])
            Nj = _mat_add(
                R,
                _outer(R, xl, _gmat_vec(R, G, b)),
                _outer(R, b, _gmat_vec(R, G, xl)),
            )
        mats[j] = _mat_add(R, mats[j], Nj)
    if not moved:
        raise StageDataInvalid(
            "deformation sequence is already Frobenius-stable; no step needed"
        )
    return DeformationOp(c.case, tuple(mats), f"C defseq moved={moved}")


def _gmat_vec(R, G, v):
    """The column G v; the functional w -> h(w, v) in case C is w^T (G v)."""
    out = []
    for row in G:
        acc = R.zero
        for a, b in zip(row, v):
            acc = R.add(acc, R.mul(a, b))
        out.append(acc)
    return tuple(out)


def _vec_gmat(R, v, G):
    """The row v^T G; the functional b -> h(v, b) in case C."""
    h = len(G)
    return tuple(
        _dot(R, v, tuple(G[i][jj] for i in range(h))) for jj in range(h)
    )


def _dot(R, u, v):
    acc = R.zero
    for a, b in zip(u, v):
        acc = R.add(acc, R.mul(a, b))
    return acc


# ---------------------------------------------------------------------------
# Densification driver.


@dataclass(frozen=True)
class DensifyStep:
    index: int
    op: DeformationOp
    special_newton: Polygon
    generic_newton: Polygon
    mu_ordinary: bool


def _best_dying(c):
    """(tau, x) with F x != 0 mod pi and maximal finite death; None if none."""
    K = c.ring.W.res
    Fbar = _res_F(c)
    bound = c.h * c.f + 2
    best = None
    for tau in range(c.f):
        for x in _vectors(K, c.h):
            x = tuple(x)
            if not any(_apply_F_res(K, Fbar, tau, x)):
                continue
            death = _death(K, Fbar, tau, x, bound)
            if death is None:
                continue
            if best is None or death > best[0]:
                best = (death, tau, x)
    return None if best is None else (best[1], best[2])


def _first_final_candidate(c):
    K = c.ring.W.res
    Fbar = _res_F(c)
    d = c.f // 2
    for tau in range(c.f):
        for x in _vectors(K, c.h):
            x = tuple(x)
            if not any(_iter_F_res(K, Fbar, tau, x, d)):
                continue
            if not any(_iter_F_res(K, Fbar, tau, x, 2 * d)):
                return tau, x
    return None


def _next_op(c):
    if c.pairing is not None and c.case == "C":
        res = find_defseq(c)
        if res.found:
            return build_N_C(c, res.sequence)
        raise ValidationError(
            f"no deformation sequence: {res.report['reason']}"
        )
    if c.pairing is not None and c.case == "AU":
        cand = _first_final_candidate(c)
        if cand is not None:
            return build_N_AU(c, {"x": cand[1], "tau": cand[0]}, "final")
        cand = _best_dying(c)
        if cand is not None:
            return build_N_AU(c, {"x": cand[1], "tau": cand[0]}, "extend")
        raise ValidationError("no AU deformation step applies")
    cand = _best_dying(c)
    if cand is None:
        raise ValidationError("no dying vector mod pi; no deformation applies")
    tau, x = cand
    return build_N_AL(c, x, "auto", tau)


def _generic_witness(fc, generic):
    """A specialization whose Newton polygon realizes the generic one."""
    K = fc.special.ring.W.res
    for c0 in K.elements():
        if c0 == 0:
            continue
        cand = specialize_family(fc, c0)
        if newton_polygon(cand) == generic:
            return cand
    raise ValidationError(
        "no witness of the generic Newton polygon in the residue field"
    )


def densify(c, sig, budget=None, T=None, denom_budget=16):
    """Deform step by step until the Newton polygon meets the PR polygon.

    Returns (chain, report); raises BudgetExceeded (with the partial chain on
    the .trace attribute) when the budget runs out or a step makes no Newton
    progress, and UnsupportedCase for case AR.  T and denom_budget are passed
    through to each family construction.
    """
    if c.case == "AR":
        raise UnsupportedCase("case AR deformations are not modeled")
    target = pr_polygon(sig, c.f)
    start = newton_polygon(c)
    if not dominates(start, target):
        raise ValidationError(
            "signature PR polygon is not below the Newton polygon"
        )
    if budget is None:
        budget = 2 * c.h * c.e * c.f
    chain = []
    cur = c
    while True:
        special = newton_polygon(cur)
        if special == target:
            break
        if len(chain) >= budget:
            err = BudgetExceeded(
                f"densification budget {budget} exhausted", bound=budget
            )
            err.trace = tuple(chain)
            raise err
        op = _next_op(cur)
        fc = deform(cur, op, T=T, denom_budget=denom_budget)
        generic = family_newton(fc)
        if not dominates(special, generic):
            raise ValidationError("generisation raised the Newton polygon")
        if generic == special:
            err = BudgetExceeded(
                f"no Newton progress at step {len(chain) + 1}", bound=budget
            )
            err.trace = tuple(chain)
            raise err
        chain.append(
            DensifyStep(
                len(chain) + 1, op, special, generic, generic == target
            )
        )
        cur = _generic_witness(fc, generic)
    report = {
        "mu_ordinary": True,
        "steps": len(chain),
        "newton": newton_polygon(cur),
        "target": target,
        "crystal": cur,
    }
    return tuple(chain), report


def _poly_json(P):
    return [[str(s), str(m)] for s, m in P.slopes]


def trace_to_json_obj(chain):
    """Ordered JSON trace: step, N matrices, both polygons, ordinariness flag."""
    out = []
    for st in chain:
        out.append(
            {
                "step": st.index,
                "N": [
                    [[[list(w) for w in x] for x in row] for row in M]
                    for M in st.op.mats
                ],
                "special": _poly_json(st.special_newton),
                "generic": _poly_json(st.generic_newton),
                "mu_ordinary": st.mu_ordinary,
            }
        )
    return out
