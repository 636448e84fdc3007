"""Semilinear crystals over ramified extensions of Witt vectors.

A crystal here is a tuple of free O_m-modules M_0, ..., M_{f-1} (one per
embedding index tau, taken mod f) together with matrices

    F[tau] : M_tau -> M_{tau+1},   sigma-linear,   F(x) = F[tau] . sigma(x)
    V[tau] : M_{tau+1} -> M_tau,   sigma^{-1}-linear

subject to F V = V F = p on every embedding.  All matrices act on column
vectors; sigma acts on coordinates through the Witt Frobenius.  Newton
slopes come from the linearization F^f at embedding 0, which is honestly
linear because the residue field is exactly F_{p^f}.
"""

import math
from collections import namedtuple
from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    NotDivisible,
    PairingViolated,
    PrecisionExhausted,
    PrecisionTooLow,
    RelationViolated,
    UnsupportedCase,
    ValidationError,
)
from .polygons import Polygon, Signature, hodge_from_profile, mean, pr_from_signature
from .rings.gf import mat_rank
from .rings.ramified import (
    RamifiedRing,
    berkowitz_charpoly,
    rmat_conj,
    rmat_identity,
    rmat_inv,
    rmat_mul,
    rmat_scalar,
    rmat_sigma,
    rmat_transpose,
    smith_profile,
)

CASES = ("AL", "AU", "C", "AR")

_CONJ_KIND = {"AL": None, "AU": "AU", "C": "C", "AR": "AR"}


def default_precision(f, h):
    """Working p-adic precision; f*h bounds every charpoly valuation we need."""
    return f * h + 2


def conj_index(case, f, tau):
    """Index of the embedding conjugate to tau."""
    if case == "AU":
        return (tau + f // 2) % f
    return tau % f


def _freeze_matrix(A):
    return tuple(tuple(row) for row in A)


def _coerce_matrix(R, A, h, what):
    if len(A) != h or any(len(row) != h for row in A):
        raise ValidationError(f"{what} is not a square matrix of size {h}")
    out = []
    for row in A:
        new = []
        for x in row:
            if isinstance(x, int):
                new.append(R.from_int(x))
            else:
                new.append(tuple(tuple(w) for w in x))
        out.append(tuple(new))
    return tuple(out)


def _mat_eq(A, B):
    return all(a == b for ra, rb in zip(A, B) for a, b in zip(ra, rb))


@dataclass(frozen=True)
class HermitianPairing:
    """Per-embedding Gram matrices of an O-sesquilinear pairing.

    grams[tau] pairs M_tau with the conjugate module: h(x, y) = x^T G conj(y),
    O-linear in x and conj-semilinear in y.  The fixed generator of the
    inverse different is absorbed into the Gram matrices, so values live in
    O_m and the associated W-form is read off by trace_form_value.
    """

    grams: tuple

    def __post_init__(self):
        object.__setattr__(
            self, "grams", tuple(_freeze_matrix(G) for G in self.grams)
        )

    def gram(self, tau):
        return self.grams[tau % len(self.grams)]


@dataclass(frozen=True)
class Crystal:
    case: str
    ring: RamifiedRing
    F: tuple
    V: tuple
    pairing: HermitianPairing = None

    def __post_init__(self):
        object.__setattr__(self, "F", tuple(_freeze_matrix(A) for A in self.F))
        object.__setattr__(self, "V", tuple(_freeze_matrix(B) for B in self.V))

    @property
    def p(self):
        return self.ring.p

    @property
    def f(self):
        return self.ring.f

    @property
    def e(self):
        return self.ring.e

    @property
    def h(self):
        return len(self.F[0])

    @property
    def m(self):
        return self.ring.m


def make_crystal(case, p, f, e, F, V, m=None, pairing=None, eis=None):
    """Checked constructor; F and V are sequences of f square matrices.

    Integer entries are coerced into the ring.  Raises RelationViolated when
    FV = VF = p fails at the working precision, PairingViolated when a
    supplied pairing fails its axioms, PrecisionTooLow for m < 2.
    """
    if case not in CASES:
        raise ValidationError(f"unknown case tag {case!r}")
    if len(F) != f or len(V) != f:
        raise ValidationError(f"expected {f} matrices for F and V")
    if not F[0]:
        raise ValidationError("empty crystal")
    if case == "AU" and f % 2:
        raise ValidationError("case AU needs an even number of embeddings")
    h = len(F[0])
    if m is None:
        m = default_precision(f, h)
    if m < 2:
        raise PrecisionTooLow(f"precision m={m} cannot see the relation FV = p")
    R = RamifiedRing(p, f, e, m, eis=eis, conj=_CONJ_KIND[case])
    Fs = tuple(_coerce_matrix(R, A, h, f"F[{tau}]") for tau, A in enumerate(F))
    Vs = tuple(_coerce_matrix(R, B, h, f"V[{tau}]") for tau, B in enumerate(V))
    pid = rmat_scalar(R, R.from_int(p), rmat_identity(R, h))
    for tau in range(f):
        sB = rmat_sigma(R, Vs[tau])
        if not _mat_eq(rmat_mul(R, Fs[tau], sB), pid):
            raise RelationViolated(f"F V != p at embedding {tau}")
        if not _mat_eq(rmat_mul(R, sB, Fs[tau]), pid):
            raise RelationViolated(f"V F != p at embedding {tau}")
    c = Crystal(case, R, Fs, Vs, None)
    if pairing is not None:
        if case == "AL":
            raise ValidationError("case AL carries no pairing")
        raw = pairing.grams if isinstance(pairing, HermitianPairing) else pairing
        pairing = HermitianPairing(
            tuple(
                _coerce_matrix(R, G, h, f"gram[{tau}]")
                for tau, G in enumerate(raw)
            )
        )
        if len(pairing.grams) != f:
            raise ValidationError("pairing needs one Gram matrix per embedding")
        _check_pairing(c, pairing, raise_on_fail=True)
        c = Crystal(case, R, Fs, Vs, pairing)
    return c


def _residue_matrix(R, A):
    return [[R.to_res(x) for x in row] for row in A]


def _check_pairing(c, pairing, raise_on_fail=False):
    """Perfectness, antihermitian symmetry, F/V adjunction, alternating for C."""

    def fail(msg):
        if raise_on_fail:
            raise PairingViolated(msg)
        return False

    R = c.ring
    h = c.h
    for tau in range(c.f):
        G = pairing.gram(tau)
        if len(G) != h or any(len(row) != h for row in G):
            return fail(f"gram[{tau}] has the wrong shape")
        if mat_rank(R.W.res, _residue_matrix(R, G)) != h:
            return fail(f"gram[{tau}] is not perfect")
        # h(y, x) = -conj(h(x, y)) links the Gram at tau to the one at taubar.
        Gbar = pairing.gram(conj_index(c.case, c.f, tau))
        minus = _neg_conj_transpose(R, G)
        if not _mat_eq(Gbar, minus):
            return fail(f"gram[{tau}] is not antihermitian")
        if c.case == "C":
            if any(G[i][i] != R.zero for i in range(h)):
                return fail(f"gram[{tau}] is not alternating")
    for tau in range(c.f):
        # h(x, F y) = sigma(h(V x, y)) with x in M_{tau+1}, y conjugate-side.
        tb = conj_index(c.case, c.f, tau)
        lhs = rmat_mul(
            R, pairing.gram((tau + 1) % c.f), rmat_conj(R, c.F[tb])
        )
        rhs = rmat_mul(
            R,
            rmat_transpose(rmat_sigma(R, c.V[tau])),
            rmat_sigma(R, pairing.gram(tau)),
        )
        if not _mat_eq(lhs, rhs):
            return fail(f"adjunction h(x, Fy) = h(Vx, y)^sigma fails at {tau}")
    return True


def _neg_conj_transpose(R, G):
    return tuple(
        tuple(R.neg(R.conj(G[j][i])) for j in range(len(G)))
        for i in range(len(G))
    )


def validate_hermitian(c, pairing=None, trace_grams=None):
    """True iff the pairing satisfies all axioms against the crystal.

    When trace_grams is supplied (one W-matrix of size e*h per embedding,
    indexed by coordinate*e + pi-power), additionally checks the trace
    identity <x, y> = tr(h(x, y) / delta) entry by entry.
    """
    pairing = pairing if pairing is not None else c.pairing
    if pairing is None:
        return False
    if c.case == "AL":
        return False
    if _check_pairing(c, pairing) is not True:
        return False
    if trace_grams is not None:
        got = pairing_trace_gram(c, pairing)
        for T, S in zip(got, trace_grams):
            if len(T) != len(S):
                return False
            for ra, rb in zip(T, S):
                if tuple(ra) != tuple(rb):
                    return False
    return True


def trace_form_value(R, x):
    """tr(x / delta) for delta = E'(pi): the top pi-coordinate of x.

    Euler's formulas give tr(pi^k / E'(pi)) = 0 for k < e-1 and 1 for
    k = e-1, so the twisted trace is exact coefficient extraction.
    """
    return x[R.e - 1]


def pairing_trace_gram(c, pairing=None):
    """W-valued Gram matrices of tr(h(., .) / delta) on the pi-power bases.

    Row index i*e + a stands for pi^a times basis vector i of M_tau; the
    column index runs over the conjugate module the same way.
    """
    pairing = pairing if pairing is not None else c.pairing
    R = c.ring
    h = c.h
    e = R.e
    pows = [R.pow(R.pi, a) for a in range(e)]
    cpows = [R.conj(x) for x in pows]
    out = []
    for tau in range(c.f):
        G = pairing.gram(tau)
        T = [[None] * (e * h) for _ in range(e * h)]
        for i in range(h):
            for j in range(h):
                for a in range(e):
                    for b in range(e):
                        val = R.mul(pows[a], R.mul(cpows[b], G[i][j]))
                        T[i * e + a][j * e + b] = trace_form_value(R, val)
        out.append(tuple(tuple(row) for row in T))
    return tuple(out)


def _w_gauss_solve(W, M, rhs):
    """Solve M x = rhs over W_m; the pivots must be units."""
    n = len(M)
    A = [list(row) + [rhs[i]] for i, row in enumerate(M)]
    for col in range(n):
        piv = next(
            (r for r in range(col, n) if W.is_unit(A[r][col])), None
        )
        if piv is None:
            raise ValidationError("trace form degenerated; no unit pivot")
        A[col], A[piv] = A[piv], A[col]
        inv = W.inv(A[col][col])
        A[col] = [W.mul(inv, x) for x in A[col]]
        for r in range(n):
            if r != col and A[r][col] != W.zero:
                cft = A[r][col]
                A[r] = [W.sub(x, W.mul(cft, y)) for x, y in zip(A[r], A[col])]
    return [A[i][n] for i in range(n)]


def pairing_from_trace_gram(c, trace_grams):
    """Recover the unique O-sesquilinear pairing with the given trace data.

    Inverts the b = 0 block of each trace Gram through the (unimodular)
    power-basis trace matrix, then verifies the whole grid; inconsistent
    data raises ValidationError.  This realizes the uniqueness statement:
    equal trace forms force equal pairings.
    """
    R = c.ring
    W = R.W
    h = c.h
    e = R.e
    tmat = [
        [trace_form_value(R, R.pow(R.pi, a + k)) for k in range(e)]
        for a in range(e)
    ]
    grams = []
    for tau in range(c.f):
        T = trace_grams[tau]
        if len(T) != e * h or any(len(row) != e * h for row in T):
            raise ValidationError("trace gram has the wrong shape")
        G = []
        for i in range(h):
            row = []
            for j in range(h):
                rhs = [T[i * e + a][j * e] for a in range(e)]
                row.append(tuple(_w_gauss_solve(W, tmat, rhs)))
            G.append(tuple(row))
        grams.append(tuple(G))
    pairing = HermitianPairing(tuple(grams))
    if pairing_trace_gram(c, pairing) != tuple(
        tuple(tuple(row) for row in T) for T in trace_grams
    ):
        raise ValidationError("trace data is not sesquilinear-consistent")
    return pairing


def _mut(A):
    return [list(row) for row in A]


def _linearized_frobenius(c):
    """Matrix of F^f : M_0 -> M_0; linear since sigma^f = id on W(F_{p^f})."""
    R = c.ring
    B = c.F[c.f - 1]
    for k in range(1, c.f):
        B = rmat_mul(R, B, rmat_sigma(R, c.F[c.f - 1 - k], k))
    return B


def _lower_hull(pts):
    hull = []
    for x, y in pts:
        while len(hull) >= 2:
            x0, y0 = hull[-2]
            x1, y1 = hull[-1]
            if (y1 - y0) * (x - x0) >= (y - y0) * (x1 - x0):
                hull.pop()
            else:
                break
        hull.append((x, y))
    return hull


def _hull_value(hull, x):
    for (x0, y0), (x1, y1) in zip(hull, hull[1:]):
        if x0 <= x <= x1:
            return y0 + Fraction(y1 - y0, x1 - x0) * (x - x0)
    raise AssertionError("x outside hull range")


def newton_polygon(c):
    """Newton polygon of the crystal, slopes normalized into [0, 1].

    Characteristic polynomial of the linearized F^f (division-free), then
    the pi-adic lower hull with slopes divided by f.  Coefficients that are
    zero to working precision are tolerated only where they provably cannot
    dent the hull; otherwise PrecisionExhausted.
    """
    R = c.ring
    coeffs = berkowitz_charpoly(R, _linearized_frobenius(c))
    pts = []
    absent = []
    for i, coef in enumerate(coeffs):
        v = R.val(coef)
        if v is math.inf:
            absent.append(i)
        else:
            pts.append((i, v))
    if absent and absent[-1] == c.h:
        raise PrecisionExhausted(
            "det(F^f) is zero at working precision; raise m to bound the slopes"
        )
    hull = _lower_hull(pts)
    floor = Fraction(R.m)
    for i in absent:
        if floor < _hull_value(hull, i):
            raise PrecisionExhausted(
                f"charpoly coefficient {i} vanishes at precision {R.m} "
                "but could still shift the Newton hull"
            )
    pairs = []
    for (x0, y0), (x1, y1) in zip(hull, hull[1:]):
        s = Fraction(y1 - y0, x1 - x0) / c.f
        if s < 0 or s > 1:
            raise ValidationError(f"Newton slope {s} escapes [0, 1]")
        pairs.append((s, Fraction(x1 - x0)))
    return Polygon(pairs, e=c.e * c.f)


def hodge_polygon(c, tau=None):
    """Hodge polygon from the torsion of M_tau / F M_{tau-1}.

    With tau given, the polygon at that embedding; otherwise the average
    over all embeddings (the one that Newton dominates).
    """
    R = c.ring
    if tau is not None:
        prof = smith_profile(R, _mut(c.F[(tau - 1) % c.f]))
        return hodge_from_profile(prof, c.e, c.h)
    return mean(*(hodge_polygon(c, tau=t) for t in range(c.f)))


NNPCrystal = namedtuple("NNPCrystal", ["crystal", "amplitudes", "original"])


def _divide_matrix_pi(R, A, k, sign):
    out = []
    for row in A:
        new = []
        for x in row:
            v = R.val(x)
            if v is not math.inf and v < Fraction(k, R.e):
                raise NotDivisible(
                    f"entry with valuation {v} not divisible by pi^{k}"
                )
            y = R.divide_pi_power(x, k)
            if sign < 0:
                y = R.neg(y)
            new.append(y)
        out.append(tuple(new))
    return tuple(out)


def normalize_nnp(c):
    """Split off the parallel pi-powers of a conjugate-case crystal.

    amplitudes[tau] is the exact power of pi dividing F[tau] (the first
    Hodge slope numerator at the target embedding); F is divided by
    pi^{a_tau} and V by the conjugate power pibar^{a_taubar}.  The
    normalized pair satisfies V0 F0 = p pi^{-a_tau} pibar^{-a_taubar} and
    has first Hodge slope zero at every embedding.  Restore the input with
    restore_nnp.
    """
    if c.case == "AL":
        raise UnsupportedCase("normalize_nnp needs a conjugation case")
    R = c.ring
    amps = []
    for tau in range(c.f):
        prof = smith_profile(R, _mut(c.F[tau]))
        amps.append(int(prof[-1]) if prof else 0)
    amps = tuple(amps)
    F0 = []
    V0 = []
    for tau in range(c.f):
        a = amps[tau]
        ab = amps[conj_index(c.case, c.f, tau)]
        if a + ab > c.e:
            raise NotDivisible(
                f"amplitudes {a} + {ab} exceed e={c.e}; crystal is not NNP"
            )
        F0.append(_divide_matrix_pi(R, c.F[tau], a, +1))
        # pibar = conj(pi) is pi up to the sign (-1)^k in case AR.
        sign = -1 if (c.case == "AR" and ab % 2) else +1
        V0.append(_divide_matrix_pi(R, c.V[tau], ab, sign))
    norm = Crystal(c.case, R, tuple(F0), tuple(V0), None)
    for tau in range(c.f):
        a = amps[tau]
        ab = amps[conj_index(c.case, c.f, tau)]
        sign = -1 if (c.case == "AR" and ab % 2) else +1
        target = R.divide_pi_power(R.from_int(c.p), a + ab)
        if sign < 0:
            target = R.neg(target)
        tid = rmat_scalar(R, target, rmat_identity(R, c.h))
        sB = rmat_sigma(R, norm.V[tau])
        got = rmat_mul(R, sB, norm.F[tau])
        if not _mats_close(R, got, tid, R.m - 1):
            raise RelationViolated(
                f"normalized pair violates the NNP relation at embedding {tau}"
            )
        prof = smith_profile(R, _mut(norm.F[tau]))
        if prof and prof[-1] != 0:
            raise NotDivisible("normalization left a positive first Hodge slope")
    return NNPCrystal(norm, amps, c)


def _mats_close(R, A, B, digits):
    """Entrywise val(A - B) >= digits; divisions cost one stored digit."""
    for ra, rb in zip(A, B):
        for a, b in zip(ra, rb):
            v = R.val(R.sub(a, b))
            if v is not math.inf and v < digits:
                return False
    return True


def restore_nnp(n):
    """Multiply the amplitudes back in; inverse of normalize_nnp."""
    c = n.crystal
    R = c.ring
    F = []
    V = []
    for tau in range(c.f):
        a = n.amplitudes[tau]
        ab = n.amplitudes[conj_index(c.case, c.f, tau)]
        pa = R.pow(R.pi, a)
        pb = R.conj(R.pow(R.pi, ab))
        F.append(rmat_scalar(R, pa, c.F[tau]))
        V.append(rmat_scalar(R, pb, c.V[tau]))
    return Crystal(c.case, R, tuple(F), tuple(V), n.original.pairing)


def _signature_list(sig, f=None):
    """Normalize signature input to a list of per-embedding Signatures."""
    if isinstance(sig, Signature):
        sigs = [sig]
    elif sig and all(isinstance(s, Signature) for s in sig):
        sigs = list(sig)
    else:
        raise ValidationError("pass Signature objects (one per embedding)")
    if f is not None and len(sigs) not in (1, f):
        raise ValidationError(f"expected {f} signatures, got {len(sigs)}")
    if f is not None and len(sigs) == 1:
        sigs = sigs * f
    return sigs


def _flat(x):
    return [int(v) for v in x]


def pr_polygon(sig, f=None):
    """Average of per-embedding Pappas-Rapoport polygons."""
    sigs = _signature_list(sig, f)
    return mean(*(pr_from_signature(s) for s in sigs))


def is_mu_ordinary(c, sig):
    """Newton polygon equals the (averaged) PR polygon of the signature."""
    return newton_polygon(c) == pr_polygon(sig, c.f)


def ordinary_possible(sig):
    """True iff every filtration jump rank coincides across stages and embeddings.

    Equivalent to the PR polygon having slopes only in {0, 1}.
    """
    if isinstance(sig, Signature):
        vals = set(sig.d)
    else:
        vals = set()
        for s in sig:
            vals |= set(s.d if isinstance(s, Signature) else _flat(s))
    return len(vals) <= 1


SlopeSplit = namedtuple("SlopeSplit", ["etale", "middle", "multiplicative"])


def slope_split(c):
    """Multiplicities of Newton slopes 0, strictly between, and 1."""
    P = newton_polygon(c)
    et = mid = mu = Fraction(0)
    for s, m_ in P.slopes:
        if s == 0:
            et += m_
        elif s == 1:
            mu += m_
        else:
            mid += m_
    return SlopeSplit(int(et), int(mid), int(mu))


# ---------------------------------------------------------------------------
# Generators used by the randomized invariants and the acceptance sweeps.


def _random_invertible(R, h, rng):
    while True:
        A = tuple(tuple(R.random(rng) for _ in range(h)) for _ in range(h))
        if mat_rank(R.W.res, _residue_matrix(R, A)) == h:
            return A


def conjugate_partition(d, h):
    """Parts c_i = #{j : d_(j) >= i}, padded/truncated to height h entries."""
    ds = sorted((int(x) for x in d), reverse=True)
    out = [sum(1 for x in ds if x >= i) for i in range(1, h + 1)]
    return out


def _dominance_moves(cs, e, rng, tries):
    """Robin Hood moves: flatten the profile, which raises the Hodge polygon."""
    cs = list(cs)
    for _ in range(tries):
        i = rng.randrange(len(cs))
        j = rng.randrange(len(cs))
        if cs[i] > cs[j] + 1 and cs[i] >= 1 and cs[j] + 1 <= e:
            cs[i] -= 1
            cs[j] += 1
    return sorted(cs, reverse=True)


def random_crystal(case, p, f, e, sig, rng, m=None, spread=0):
    """Random crystal whose Hodge polygon dominates the signature's PR polygon.

    Per embedding the profile starts at the conjugate partition of the
    signature (where Hodge equals PR) and takes `spread` random
    majorization-lowering moves; F is unit * diag(pi^{c_i}) * unit and V is
    forced by the relation.  Returns the crystal; pair it with `sig` for
    dominance tests.
    """
    sigs = _signature_list(sig, f)
    h = sigs[0].h
    if any(s.h != h or s.e != e for s in sigs):
        raise ValidationError("signatures disagree on height or e")
    R = RamifiedRing(p, f, e, m or default_precision(f, h), conj=_CONJ_KIND[case])
    F = []
    V = []
    for tau in range(f):
        cs = conjugate_partition(sigs[tau].d, h)
        cs = _dominance_moves(cs, e, rng, spread)
        U = _random_invertible(R, h, rng)
        Wm = _random_invertible(R, h, rng)
        D = [
            [R.pow(R.pi, cs[i]) if i == j else R.zero for j in range(h)]
            for i in range(h)
        ]
        Dc = [
            [R.pow(R.pi, e - cs[i]) if i == j else R.zero for j in range(h)]
            for i in range(h)
        ]
        A = rmat_mul(R, U, rmat_mul(R, D, Wm))
        # sigma(V) = p A^{-1} = W^{-1} diag(pi^{e-c}) U^{-1} since pi^e = p.
        sB = rmat_mul(R, rmat_inv(R, Wm), rmat_mul(R, Dc, rmat_inv(R, U)))
        F.append(A)
        V.append(rmat_sigma(R, sB, f - 1))
    return make_crystal(case, p, f, e, F, V, m=R.m)


def standard_symplectic_gram(R, g):
    """Block Gram [[0, I], [-I, 0]] of size 2g."""
    h = 2 * g
    G = [[R.zero] * h for _ in range(h)]
    for i in range(g):
        G[i][g + i] = R.one
        G[g + i][i] = R.neg(R.one)
    return tuple(tuple(row) for row in G)


def _random_symplectic(R, g, rng, steps=4):
    """Random product of elementary Sp(2g) generators for the standard Gram."""
    h = 2 * g
    M = rmat_identity(R, h)
    for _ in range(steps):
        kind = rng.randrange(3)
        if kind == 0:
            U = _random_invertible(R, g, rng)
            Ui = rmat_transpose(rmat_inv(R, U))
            E = [[R.zero] * h for _ in range(h)]
            for i in range(g):
                for j in range(g):
                    E[i][j] = U[i][j]
                    E[g + i][g + j] = Ui[i][j]
        else:
            S = [[R.zero] * g for _ in range(g)]
            for i in range(g):
                for j in range(i, g):
                    x = R.random(rng)
                    S[i][j] = x
                    S[j][i] = x
            E = [[R.zero] * h for _ in range(h)]
            for i in range(h):
                E[i][i] = R.one
            for i in range(g):
                for j in range(g):
                    if kind == 1:
                        E[i][g + j] = S[i][j]
                    else:
                        E[g + i][j] = S[i][j]
        M = rmat_mul(R, M, tuple(tuple(r) for r in E))
    return M


def random_polarized_crystal(p, e, g, rng, m=None, profile=None):
    """Case C crystal of height 2g with the standard alternating pairing.

    F = T D T' with T, T' symplectic and D a torus element
    diag(pi^{c_i}, pi^{e-c_i}), so F is a symplectic similitude with factor
    p and the standard Gram satisfies the adjunction automatically.
    """
    h = 2 * g
    if m is None:
        m = default_precision(1, h)
    R = RamifiedRing(p, 1, e, m, conj="C")
    if profile is None:
        profile = [rng.randrange(e + 1) for _ in range(g)]
    if len(profile) != g or any(cv < 0 or cv > e for cv in profile):
        raise ValidationError("profile needs g entries in [0, e]")
    D = [[R.zero] * h for _ in range(h)]
    for i, cv in enumerate(profile):
        D[i][i] = R.pow(R.pi, cv)
        D[g + i][g + i] = R.pow(R.pi, e - cv)
    T1 = _random_symplectic(R, g, rng)
    T2 = _random_symplectic(R, g, rng)
    A = rmat_mul(R, T1, rmat_mul(R, tuple(tuple(r) for r in D), T2))
    B = rmat_mul(
        R,
        rmat_inv(R, T2),
        rmat_mul(R, _torus_complement(R, g, profile), rmat_inv(R, T1)),
    )
    F = [A]
    V = [B]
    return make_crystal(
        "C", p, 1, e, F, V, m=m, pairing=[standard_symplectic_gram(R, g)]
    )


def _torus_complement(R, g, profile):
    h = 2 * g
    D = [[R.zero] * h for _ in range(h)]
    for i, cv in enumerate(profile):
        D[i][i] = R.pow(R.pi, R.e - cv)
        D[g + i][g + i] = R.pow(R.pi, cv)
    return tuple(tuple(row) for row in D)


def conjugate_crystal(c):
    """The conjugate crystal M'_tau = M_taubar with structure maps s F s, s V s."""
    if c.case == "AL":
        raise UnsupportedCase("case AL has no conjugation")
    R = c.ring
    F = []
    V = []
    for tau in range(c.f):
        tb = conj_index(c.case, c.f, tau)
        F.append(rmat_conj(R, c.F[tb]))
        V.append(rmat_conj(R, c.V[tb]))
    return Crystal(c.case, R, tuple(F), tuple(V), None)


# ---------------------------------------------------------------------------
# JSON round-trip for crystals.


def crystal_to_json_obj(c):
    def enc_mat(A):
        return [[[list(w) for w in x] for x in row] for row in A]

    obj = {
        "case": c.case,
        "p": c.p,
        "f": c.f,
        "e": c.e,
        "m": c.m,
        "F": [enc_mat(A) for A in c.F],
        "V": [enc_mat(B) for B in c.V],
    }
    if c.pairing is not None:
        obj["pairing"] = [enc_mat(G) for G in c.pairing.grams]
    return obj


def crystal_from_json_obj(obj):
    def dec_mat(A):
        return [
            [tuple(tuple(int(v) for v in w) for w in x) for x in row] for row in A
        ]

    pairing = obj.get("pairing")
    return make_crystal(
        obj["case"],
        int(obj["p"]),
        int(obj["f"]),
        int(obj["e"]),
        [dec_mat(A) for A in obj["F"]],
        [dec_mat(B) for B in obj["V"]],
        m=int(obj["m"]),
        pairing=[dec_mat(G) for G in pairing] if pairing is not None else None,
    )
