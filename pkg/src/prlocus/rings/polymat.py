"""Matrices over k[t] with exact rank and module arithmetic.

Generic (k(t)) ranks use Bareiss fraction-free elimination, so certification
never relies on evaluating at sample points.  Submodules of a free module are
held as column-generator matrices; `saturate_columns` normalizes them to bases
of t-saturated direct factors, which is what the k[[t]] statements need.
"""

from __future__ import annotations

from .gf import mat_rank, right_kernel
from .polyring import FracPoly, Poly


class PolyMatrix:
    """Dense matrix of polynomial tuples over a fixed Poly namespace."""

    __slots__ = ("P", "nrows", "ncols", "rows")

    def __init__(self, P: Poly, rows):
        self.P = P
        self.rows = [[P.trim(e) for e in row] for row in rows]
        self.nrows = len(self.rows)
        self.ncols = len(self.rows[0]) if self.rows else 0

    @classmethod
    def zeros(cls, P, n, m):
        return cls(P, [[()] * m for _ in range(n)])

    @classmethod
    def identity(cls, P, n):
        return cls(P, [[(1,) if i == j else () for j in range(n)] for i in range(n)])

    @classmethod
    def from_field(cls, P, A):
        """Lift a matrix of encoded field elements to constant polynomials."""
        return cls(P, [[P.const(c) for c in row] for row in A])

    @classmethod
    def from_cols(cls, P, cols, nrows):
        if not cols:
            return cls(P, [[] for _ in range(nrows)])
        return cls(P, [[col[i] for col in cols] for i in range(nrows)])

    def copy(self):
        return PolyMatrix(self.P, [row[:] for row in self.rows])

    def col(self, j):
        return [self.rows[i][j] for i in range(self.nrows)]

    def cols(self):
        return [self.col(j) for j in range(self.ncols)]

    def transpose(self):
        return PolyMatrix(self.P, [self.col(j) for j in range(self.ncols)])

    def add(self, other):
        P = self.P
        return PolyMatrix(
            P,
            [
                [P.add(a, b) for a, b in zip(r1, r2)]
                for r1, r2 in zip(self.rows, other.rows)
            ],
        )

    def sub(self, other):
        P = self.P
        return PolyMatrix(
            P,
            [
                [P.sub(a, b) for a, b in zip(r1, r2)]
                for r1, r2 in zip(self.rows, other.rows)
            ],
        )

    def mul(self, other):
        P = self.P
        assert self.ncols == other.nrows
        out = [[()] * other.ncols for _ in range(self.nrows)]
        for i in range(self.nrows):
            for k in range(self.ncols):
                a = self.rows[i][k]
                if not a:
                    continue
                for j in range(other.ncols):
                    b = other.rows[k][j]
                    if b:
                        out[i][j] = P.add(out[i][j], P.mul(a, b))
        return PolyMatrix(P, out)

    def scale(self, poly):
        P = self.P
        return PolyMatrix(P, [[P.mul(poly, e) for e in row] for row in self.rows])

    def hstack(self, other):
        assert self.nrows == other.nrows
        return PolyMatrix(
            self.P, [r1 + r2 for r1, r2 in zip(self.rows, other.rows)]
        )

    def vstack(self, other):
        assert self.ncols == other.ncols
        return PolyMatrix(self.P, self.rows + other.rows)

    def eval_at(self, x, field=None):
        """Field matrix of entry values at t = x (x encoded in `field` or K)."""
        K = field or self.P.K
        if field is None or field is self.P.K:
            return [[self.P.eval_at(e, x) for e in row] for row in self.rows]
        phi = self.P.K.embed_into(field)
        out = []
        for row in self.rows:
            out.append(
                [
                    _eval_embedded(K, phi, e, x)
                    for e in row
                ]
            )
        return out

    def mod_t(self):
        return [[e[0] if e else 0 for e in row] for row in self.rows]

    def max_deg(self):
        return max((self.P.deg(e) for row in self.rows for e in row), default=-1)

    def truncate(self, T):
        P = self.P
        return PolyMatrix(P, [[P.truncate(e, T) for e in row] for row in self.rows])

    def is_zero(self):
        return all(not e for row in self.rows for e in row)


def _eval_embedded(field, phi, poly, x):
    acc = 0
    for c in reversed(poly):
        acc = field.add(field.mul(acc, x), phi(c))
    return acc


def generic_rank(M: PolyMatrix) -> int:
    """Rank of M over the rational function field k(t)."""
    P = M.P
    A = [row[:] for row in M.rows]
    n, m = M.nrows, M.ncols
    rank = 0
    prev = (1,)
    r = 0
    for c in range(m):
        piv = None
        for i in range(r, n):
            if A[i][c]:
                piv = i
                break
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        try:
            for i in range(r + 1, n):
                for j in range(c + 1, m):
                    num = P.sub(P.mul(A[r][c], A[i][j]), P.mul(A[i][c], A[r][j]))
                    A[i][j] = P.exact_div(num, prev)
                A[i][c] = ()
        except ArithmeticError:
            # Pivot path invalidated the two-step minor identity; the
            # fraction-field elimination below is still exact.
            return _rank_frac(M)
        prev = A[r][c]
        r += 1
        rank += 1
        if r == n:
            break
    return rank


def _to_frac_rows(M: PolyMatrix, F: FracPoly):
    return [[F.from_poly(e) for e in row] for row in M.rows]


def _rank_frac(M: PolyMatrix) -> int:
    F = FracPoly(M.P)
    _, pivots = frac_rref(_to_frac_rows(M, F), F)
    return len(pivots)


def frac_rref(rows, F: FracPoly):
    """Reduced row echelon form of a list-of-lists of FracPoly entries."""
    rows = [row[:] for row in rows]
    n = len(rows)
    m = len(rows[0]) if rows else 0
    pivots = []
    r = 0
    for c in range(m):
        piv = None
        for i in range(r, n):
            if not F.is_zero(rows[i][c]):
                piv = i
                break
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = F.inv(rows[r][c])
        rows[r] = [F.mul(inv, e) for e in rows[r]]
        for i in range(n):
            if i != r and not F.is_zero(rows[i][c]):
                factor = rows[i][c]
                rows[i] = [
                    F.sub(e, F.mul(factor, rows[r][j]))
                    for j, e in enumerate(rows[i])
                ]
        pivots.append(c)
        r += 1
        if r == n:
            break
    return rows, pivots


def right_kernel_frac(M: PolyMatrix):
    """Basis of the right kernel over k(t), as lists of FracPoly entries."""
    F = FracPoly(M.P)
    rows, pivots = frac_rref(_to_frac_rows(M, F), F)
    m = M.ncols
    free = [c for c in range(m) if c not in pivots]
    basis = []
    for fc in free:
        vec = [F.zero] * m
        vec[fc] = F.one
        for r, pc in enumerate(pivots):
            vec[pc] = F.neg(rows[r][fc])
        basis.append(vec)
    return basis


def clear_denominators(vec, P: Poly):
    """Scale a FracPoly vector to a polynomial vector (lcm of denominators)."""
    lcm = (1,)
    for num, den in vec:
        if num:
            g = P.gcd(lcm, den)
            lcm = P.mul(lcm, P.exact_div(den, g))
    out = []
    for num, den in vec:
        if not num:
            out.append(())
        else:
            out.append(P.mul(num, P.exact_div(lcm, den)))
    return out


def saturate_columns(M: PolyMatrix) -> PolyMatrix:
    """Basis of the t-saturation of the column span, independent mod t."""
    P = M.P
    K = P.K
    cols = [c for c in M.cols() if any(c)]
    while True:
        # shared t powers come out column by column first
        for idx, c in enumerate(cols):
            v = min(P.t_val(e) for e in c if e)
            if v:
                cols[idx] = [P.shift_down(e, v) if e else () for e in c]
        if not cols:
            break
        red = [[(c[i][0] if c[i] else 0) for c in cols] for i in range(M.nrows)]
        ker = right_kernel(K, red)
        if not ker:
            break
        u = ker[0]
        combo = [()] * M.nrows
        for j, uj in enumerate(u):
            if uj:
                for i in range(M.nrows):
                    combo[i] = P.add(combo[i], P.scale(uj, cols[j][i]))
        combo = [P.shift_down(e, 1) if e else () for e in combo]
        last = max(j for j, uj in enumerate(u) if uj)
        if any(combo):
            cols[last] = combo
        else:
            cols.pop(last)
    return PolyMatrix.from_cols(P, cols, M.nrows)


def kernel_module(M: PolyMatrix) -> PolyMatrix:
    """Saturated generator matrix of {v over k[[t]] : Mv = 0}."""
    basis = right_kernel_frac(M)
    cols = [clear_denominators(vec, M.P) for vec in basis]
    return saturate_columns(PolyMatrix.from_cols(M.P, cols, M.ncols))


def intersect_modules(A: PolyMatrix, B: PolyMatrix) -> PolyMatrix:
    """Saturated basis of (column span of A) ∩ (column span of B)."""
    if A.ncols == 0 or B.ncols == 0:
        return PolyMatrix.from_cols(A.P, [], A.nrows)
    ker = kernel_module(A.hstack(B))
    top = PolyMatrix(A.P, ker.rows[: A.ncols])
    return saturate_columns(A.mul(top))


def preimage_module(X: PolyMatrix, L: PolyMatrix) -> PolyMatrix:
    """Saturated basis of {v : Xv in column span of L}."""
    if L.ncols == 0:
        return kernel_module(X)
    ker = kernel_module(X.hstack(L))
    top = PolyMatrix(X.P, ker.rows[: X.ncols])
    return saturate_columns(top)


def solve_frac(M: PolyMatrix, rhs_cols):
    """Solve M x = b over k(t) for each column b; None when inconsistent.

    M must have full column rank so solutions are unique.
    """
    P = M.P
    F = FracPoly(P)
    aug_rows = []
    for i in range(M.nrows):
        row = [F.from_poly(e) for e in M.rows[i]]
        for b in rhs_cols:
            row.append(F.from_poly(b[i]))
        aug_rows.append(row)
    rows, pivots = frac_rref(aug_rows, F)
    m = M.ncols
    if any(pc >= m for pc in pivots):
        return None
    assert len(pivots) == m, "solve_frac requires full column rank"
    sols = []
    for k in range(len(rhs_cols)):
        x = [F.zero] * m
        for r, pc in enumerate(pivots):
            x[pc] = rows[r][m + k]
        sols.append(x)
    return sols


def contains_integral(M: PolyMatrix, v) -> bool:
    """Membership of a polynomial column in the k[[t]]-span of M's columns."""
    sols = solve_frac(M, [v])
    if sols is None:
        return False
    F = FracPoly(M.P)
    return all(F.den_is_t_unit(e) for e in sols[0])


def complement_mod_t(K, sub_red, ambient_cols_red):
    """Indices of ambient columns completing sub_red to a full-rank family.

    All arguments are field matrices (columns as lists); greedy first-fit.
    """
    if not ambient_cols_red:
        return []
    nrows = len(ambient_cols_red[0])
    chosen = []
    current = [col[:] for col in sub_red]
    rank = mat_rank(K, _cols_to_rows(current, nrows))
    for j, col in enumerate(ambient_cols_red):
        trial = current + [col]
        if mat_rank(K, _cols_to_rows(trial, nrows)) > rank:
            current = trial
            rank += 1
            chosen.append(j)
    return chosen


def _cols_to_rows(cols, nrows):
    if not cols:
        return [[] for _ in range(nrows)]
    return [[col[i] for col in cols] for i in range(nrows)]


def split_off(L: PolyMatrix, Kmod: PolyMatrix) -> PolyMatrix:
    """Columns of Kmod spanning Kmod/L mod t; [L | W] is a basis of Kmod.

    Both arguments must be saturated bases with span(L) ⊆ span(Kmod).
    """
    K = L.P.K
    sub_red = [ [e[0] if e else 0 for e in L.col(j)] for j in range(L.ncols) ]
    amb_red = [ [e[0] if e else 0 for e in Kmod.col(j)] for j in range(Kmod.ncols) ]
    idx = complement_mod_t(K, sub_red, amb_red)
    return PolyMatrix.from_cols(L.P, [Kmod.col(j) for j in idx], L.nrows)


def adapt_chain(chain, ambient_dim):
    """Basis matrix Phi putting a chain of saturated direct factors in
    standard position: columns 0..rank(chain[i])-1 of Phi span chain[i].

    Returns (Phi, ranks); Phi is invertible over k[[t]].
    """
    assert chain, "empty chain"
    P = chain[0].P
    cols = []
    ranks = []
    prev = PolyMatrix.from_cols(P, [], ambient_dim)
    for N in chain:
        W = split_off(prev, N)
        cols.extend(W.cols())
        prev = PolyMatrix.from_cols(P, cols, ambient_dim)
        ranks.append(len(cols))
    ident = PolyMatrix.identity(P, ambient_dim)
    W = split_off(prev, ident) if len(cols) < ambient_dim else None
    if W is not None:
        cols.extend(W.cols())
    Phi = PolyMatrix.from_cols(P, cols, ambient_dim)
    assert Phi.ncols == ambient_dim
    K = P.K
    assert mat_rank(K, Phi.mod_t()) == ambient_dim
    return Phi, ranks
