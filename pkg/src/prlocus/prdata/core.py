"""Filtered modules with pi-action: validation, duality, pairings, profiles.

The ambient module has rank e*h over the base and carries a nilpotent pi with
pi^e = 0 (special fiber) or, more generally, prod (pi - pi_j) = 0.  All
submodules are stored as saturated column-basis matrices over the polynomial
base, so field-level data is simply the degree-0 case and deformed data over
k[t] goes through the same code paths.
"""

from __future__ import annotations

from ..errors import NotFree, UnsupportedCase, ValidationError
from ..polygons import Signature, TorsionProfile
from ..rings import GF, Poly, PolyMatrix, generic_rank
from ..rings.gf import mat_inv, mat_mul, mat_rank, rref, solve
from ..rings.polymat import (
    contains_integral,
    kernel_module,
    preimage_module,
    saturate_columns,
)


def standard_ambient(K: GF, e: int, h: int):
    """(Poly namespace, pi matrix) for (k[pi]/pi^e)^h.

    Basis blocks are (pi^(e-1) e_*, ..., pi e_*, e_*), h vectors each, so pi
    sends block j identically onto block j-1 and kills block 0.
    """
    P = Poly(K)
    n = e * h
    rows = [[() for _ in range(n)] for _ in range(n)]
    for j in range(1, e):
        for i in range(h):
            rows[(j - 1) * h + i][j * h + i] = (1,)
    return P, PolyMatrix(P, rows)


def case_c_gram(K: GF, e: int, h: int) -> PolyMatrix:
    """Perfect alternating pi-symmetric Gram on the standard ambient.

    Needs e = 2 and h = 2g; the value is the pi-coefficient of the O-valued
    symplectic form, giving blocks [[0, J],[J, 0]] with J = [[0,I],[-I,0]].
    """
    if e != 2:
        raise UnsupportedCase("pi-symmetric pairing implemented for e = 2")
    if h % 2:
        raise ValidationError("alternating perfect pairing needs even h")
    g = h // 2
    P = Poly(K)
    n = 2 * h
    one, neg = (1,), (K.neg(1),)
    rows = [[() for _ in range(n)] for _ in range(n)]
    for blk in ((0, h), (h, 0)):
        r0, c0 = blk
        for i in range(g):
            rows[r0 + i][c0 + g + i] = one
            rows[r0 + g + i][c0 + i] = neg
    return PolyMatrix(P, rows)


class FilteredModule:
    """Chain N^[0] <= ... <= N^[e] with jump ranks d_j inside (base[pi])^h."""

    def __init__(self, K, pi, chain, signature, labels=None, pi_images=None):
        self.K = K
        self.P = pi.P
        self.pi = pi
        self.chain = list(chain)
        self.signature = (
            signature
            if isinstance(signature, Signature)
            else Signature(tuple(signature), self._height())
        )
        self.e = self.signature.e
        self.h = self.signature.h
        if labels is None:
            labels = tuple(f"sigma_{j}" for j in range(1, self.e + 1))
        self.labels = tuple(labels)
        if pi_images is None:
            pi_images = ((),) * self.e
        self.pi_images = tuple(self.P.trim(x) for x in pi_images)
        if len(self.chain) != self.e + 1:
            raise ValidationError("chain must have e + 1 members")
        if len(self.labels) != self.e or len(self.pi_images) != self.e:
            raise ValidationError("labels and uniformizer images must match e")

    def _height(self):
        n = self.pi.nrows
        # only used when the signature is passed as a bare tuple
        raise ValidationError(
            f"pass a Signature so the height is unambiguous (ambient rank {n})"
        )

    @property
    def ambient_rank(self):
        return self.pi.nrows

    @property
    def is_special_fiber(self):
        return all(not x for x in self.pi_images)

    @property
    def omega(self) -> PolyMatrix:
        return self.chain[-1]

    def max_deg(self):
        return max(
            [self.pi.max_deg()] + [N.max_deg() for N in self.chain]
        )


class PairedFilteredModule:
    def __init__(self, fm: FilteredModule, gram: PolyMatrix):
        self.fm = fm
        self.gram = gram

    def pair_cols(self, A: PolyMatrix, B: PolyMatrix) -> PolyMatrix:
        return A.transpose().mul(self.gram).mul(B)


def _field_rank(M: PolyMatrix, K) -> int:
    return mat_rank(K, M.mod_t())


def _module_contains(big: PolyMatrix, small: PolyMatrix) -> bool:
    return all(
        contains_integral(big, small.col(j)) for j in range(small.ncols)
    )


def validate_pr(F: FilteredModule):
    """List of violated clauses; empty means the datum is valid."""
    out = []
    K, P = F.K, F.P
    if F.chain[0].ncols != 0:
        out.append("chain must start at the zero submodule")
    for j in range(1, F.e + 1):
        N = F.chain[j]
        d_j = F.signature.d[j - 1]
        if _field_rank(N, K) != N.ncols:
            out.append(f"N^[{j}] basis is not a direct factor")
            continue
        expect = sum(F.signature.d[:j])
        if N.ncols != expect:
            out.append(
                f"N^[{j}] has rank {N.ncols}, expected {expect} "
                f"(jump d_{j} = {d_j})"
            )
        prev = F.chain[j - 1]
        if prev.ncols and not _module_contains(N, prev):
            out.append(f"N^[{j - 1}] is not contained in N^[{j}]")
        shifted = F.pi.mul(N)
        img = shifted.sub(N.scale(F.pi_images[j - 1]))
        if prev.ncols == 0:
            if not img.is_zero():
                out.append(f"(pi - pi_{j}) N^[{j}] does not vanish")
        elif not _module_contains(prev, img):
            out.append(f"(pi - pi_{j}) N^[{j}] not inside N^[{j - 1}]")
    return out


def _q_upper_matrix(F: FilteredModule, ell: int) -> PolyMatrix:
    """Matrix of Q^ell(pi) = prod_{i > ell} (pi - pi_i)."""
    P = F.P
    n = F.ambient_rank
    acc = PolyMatrix.identity(P, n)
    for i in range(ell, F.e):
        factor = F.pi.sub(PolyMatrix.identity(P, n).scale(F.pi_images[i]))
        acc = acc.mul(factor)
    return acc


def _certify_free_over_chain_ring(F: FilteredModule):
    """Greedy basis of the ambient over base[T]/Q; NotFree when impossible."""
    P, K = F.P, F.K
    n = F.ambient_rank
    chosen = []
    spanned = PolyMatrix.from_cols(P, [], n)
    for cand in range(n):
        col = [()] * n
        col[cand] = (1,)
        orbit = []
        vec = PolyMatrix.from_cols(P, [col], n)
        for _ in range(F.e):
            orbit.extend(vec.cols())
            vec = F.pi.mul(vec)
        trial = PolyMatrix.from_cols(P, spanned.cols() + orbit, n)
        if _field_rank(trial, K) == spanned.ncols + F.e:
            spanned = trial
            chosen.append(cand)
        if spanned.ncols == n:
            break
    if spanned.ncols != n:
        raise NotFree(
            "ambient is not free over base[T]/Q for the given pi-action"
        )
    return chosen


def extend_duality(F: FilteredModule):
    """Full chain N^[0] <= ... <= N^[2e] with N^[2e-l] = Q^l(pi)^{-1} N^[l]."""
    violations = validate_pr(F)
    if violations:
        raise ValidationError("; ".join(violations))
    _certify_free_over_chain_ring(F)
    full = list(F.chain)
    for j in range(1, F.e + 1):
        ell = F.e - j
        Q = _q_upper_matrix(F, ell)
        pre = preimage_module(Q, F.chain[ell])
        full.append(pre)
    # rank bookkeeping from the closed formula
    for j in range(1, F.e + 1):
        want = j * F.h + sum(F.signature.d[: F.e - j])
        got = full[F.e + j].ncols
        if got != want:
            raise ValidationError(
                f"extended rank at level {F.e + j}: got {got}, want {want}"
            )
    return full


def dual_datum(F: FilteredModule) -> FilteredModule:
    """Induced datum on M = ambient / N^[e], signature read in reversed labels."""
    if F.max_deg() > 0:
        raise UnsupportedCase("dual datum requires a field base")
    full = extend_duality(F)
    K, P = F.K, F.P
    n = F.ambient_rank
    Ne = full[F.e].mod_t()
    ne_cols = [[Ne[i][j] for i in range(n)] for j in range(full[F.e].ncols)]
    # complement of N^[e] among the standard basis vectors
    comp = []
    base_cols = [c[:] for c in ne_cols]
    rank = mat_rank(K, _cols_to_mat(base_cols, n))
    for cand in range(n):
        col = [0] * n
        col[cand] = 1
        trial = base_cols + [col]
        if mat_rank(K, _cols_to_mat(trial, n)) > rank:
            base_cols = trial
            rank += 1
            comp.append(col)
    D = _cols_to_mat(ne_cols + comp, n)
    Dinv = mat_inv(K, D)
    k0 = len(ne_cols)

    def quotient_coords(mat_cols):
        out = []
        for col in mat_cols:
            x = [
                _dot_field(K, Dinv[i], col) for i in range(n)
            ]
            out.append(x[k0:])
        return out

    m_rank = n - k0
    chain = [PolyMatrix.from_cols(P, [], m_rank)]
    for j in range(1, F.e + 1):
        img = quotient_coords(_mat_cols(full[F.e + j].mod_t()))
        basis = _column_basis(K, img, m_rank)
        chain.append(
            PolyMatrix.from_field(P, basis).transpose()
            if basis
            else PolyMatrix.from_cols(P, [], m_rank)
        )
    # pi action of the quotient in the complement coordinates
    pi_on_comp = quotient_coords(
        _mat_cols(mat_mul(K, F.pi.mod_t(), _cols_to_mat(comp, n)))
    )
    pi_m = _cols_to_mat(pi_on_comp, m_rank)
    sig = Signature(tuple(F.h - d for d in reversed(F.signature.d)), F.h)
    out = FilteredModule(
        K,
        PolyMatrix.from_field(P, pi_m),
        chain,
        sig,
        labels=tuple(reversed(F.labels)),
        pi_images=tuple(reversed(F.pi_images)),
    )
    bad = validate_pr(out)
    if bad:
        raise ValidationError("dual datum invalid: " + "; ".join(bad))
    return out


def _cols_to_mat(cols, n):
    if not cols:
        return [[] for _ in range(n)]
    return [[col[i] for col in cols] for i in range(n)]


def _mat_cols(mat):
    if not mat or not mat[0]:
        return []
    return [[row[j] for row in mat] for j in range(len(mat[0]))]


def _dot_field(K, row, col):
    acc = 0
    for a, b in zip(row, col):
        if a and b:
            acc = K.add(acc, K.mul(a, b))
    return acc


def _column_basis(K, cols, n):
    """Row-reduced basis (as rows) of the span of the given columns."""
    rows = [list(c) for c in cols]
    R, pivots = rref(K, rows)
    return [R[i] for i in range(len(pivots))]


def orthogonal_complement(PF: PairedFilteredModule, N: PolyMatrix) -> PolyMatrix:
    if N.ncols == 0:
        return PolyMatrix.identity(PF.fm.P, PF.fm.ambient_rank)
    return kernel_module(N.transpose().mul(PF.gram))


def check_pairing_compat(PF: PairedFilteredModule) -> bool:
    """N^[2e-l] = (N^[l])-perp for every l, via exact span comparison."""
    F = PF.fm
    full = extend_duality(F)
    for ell in range(0, F.e + 1):
        perp = orthogonal_complement(PF, full[ell])
        cand = full[2 * F.e - ell]
        if perp.ncols != cand.ncols:
            return False
        joint = perp.hstack(cand)
        if generic_rank(joint) != perp.ncols:
            return False
        if _field_rank(joint, F.K) != perp.ncols:
            return False
    return True


def hl_isotropy_check(PF: PairedFilteredModule, ell: int) -> bool:
    """Special-fiber h_l-isotropy of N^[l]: <x, v> = 0 for pi^(e-l) x = u.

    Independent of check_pairing_compat; used as the cross-check route.
    """
    F = PF.fm
    if not F.is_special_fiber or F.max_deg() > 0:
        raise UnsupportedCase("h_l check is a special-fiber construction")
    K = F.K
    N = F.chain[ell].mod_t() if ell <= F.e else None
    if N is None:
        raise ValidationError("l must be at most e")
    ncols = F.chain[ell].ncols
    if ncols == 0:
        return True
    pi_pow = _field_power(K, F.pi.mod_t(), F.e - ell)
    gram = PF.gram.mod_t()
    for j in range(ncols):
        u = [N[i][j] for i in range(len(N))]
        x = solve(K, pi_pow, u)
        if x is None:
            return False
        gx = [_dot_field(K, row, x) for row in _transpose_field(gram)]
        # gx_i = sum_r x_r * gram[r][i] = (x^T G)_i
        for jj in range(ncols):
            v = [N[i][jj] for i in range(len(N))]
            if _dot_field(K, gx, v) != 0:
                return False
    return True


def _transpose_field(mat):
    return [list(row) for row in zip(*mat)]


def _field_power(K, mat, k):
    n = len(mat)
    acc = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    for _ in range(k):
        acc = mat_mul(K, acc, mat)
    return acc


def torsion_profile(pi: PolyMatrix, basis: PolyMatrix, generic=False):
    """Cyclic decomposition exponents of span(basis) under pi.

    The module must be pi-stable.  With generic=True ranks are taken over
    k(t), otherwise at the special fiber t = 0.
    """
    jumps = _kernel_jumps(pi, basis, generic)
    return TorsionProfile(tuple(_conjugate_partition(jumps)))


def kernel_jump_profile(pi: PolyMatrix, basis: PolyMatrix, generic=False):
    """Kernel-dimension jump reading (dim ker pi^j - dim ker pi^(j-1))."""
    return TorsionProfile(tuple(_kernel_jumps(pi, basis, generic)))


def _kernel_jumps(pi: PolyMatrix, basis: PolyMatrix, generic):
    K = pi.P.K
    dim = basis.ncols

    def rk(M):
        return generic_rank(M) if generic else _field_rank(M, K)

    if rk(basis) != dim:
        raise ValidationError("basis columns are dependent")
    if rk(basis.hstack(pi.mul(basis))) != dim:
        raise ValidationError("module is not pi-stable")
    jumps = []
    prev_ker = 0
    power = basis
    j = 0
    while prev_ker < dim:
        power = pi.mul(power)
        j += 1
        if j > basis.nrows:
            raise ValidationError("pi is not nilpotent on the module")
        ker = dim - rk(power)
        jumps.append(ker - prev_ker)
        prev_ker = ker
    return jumps


def _conjugate_partition(parts):
    if not parts:
        return []
    out = []
    for i in range(1, parts[0] + 1):
        out.append(sum(1 for p in parts if p >= i))
    return out


def is_rapoport(F: FilteredModule) -> bool:
    """Torsion dims of N^[e] match the top-j signature sums for all j."""
    if not F.is_special_fiber:
        raise UnsupportedCase("Rapoport test is a special-fiber notion")
    K = F.K
    omega = F.omega
    dim = omega.ncols
    tops = sorted(F.signature.d, reverse=True)
    power = omega
    for j in range(1, F.e + 1):
        power = F.pi.mul(power)
        ker = dim - _field_rank(power, K)
        if ker != sum(tops[:j]):
            return False
    return True
