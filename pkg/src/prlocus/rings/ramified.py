"""Truncated ramified extensions O_m = W_m[pi]/(E) and their matrix algebra.

E is Eisenstein with exact integer coefficients (default T^e - p), so the
Frobenius acts coefficientwise and pi-divisions can be done exactly: from
E(pi) = 0 one gets pi^e = p*w with w a unit whose coefficients are the exact
integers -E_i/p, and division by pi^a costs at most one stored p-digit per
full power of p.

Elements are length-e tuples of Witt elements (coefficients of pi^0..pi^(e-1)).
"""

from __future__ import annotations

import math
from fractions import Fraction

from ..errors import PrecisionExhausted, UnsupportedCase
from .witt import WittRing


class RamifiedRing:
    def __init__(self, p, f, e, m, eis=None, conj=None):
        self.W = WittRing(p, f, m)
        self.p = p
        self.f = f
        self.e = e
        self.m = m
        if eis is None:
            eis = [-p] + [0] * (e - 1) + [1]
        assert len(eis) == e + 1 and eis[e] == 1
        assert all(c % p == 0 for c in eis[:e]) and (eis[0] // p) % p != 0, (
            "Eisenstein condition violated"
        )
        self.eis = list(eis)
        if conj not in (None, "C", "AU", "AR"):
            raise UnsupportedCase(f"unknown conjugation {conj!r}")
        if conj == "AU" and f % 2:
            raise UnsupportedCase("AU conjugation needs even residue degree")
        if conj == "AR" and any(eis[i] for i in range(1, e + 1, 2)):
            raise UnsupportedCase("AR conjugation needs an even Eisenstein polynomial")
        self.conj_kind = conj
        self.zero = (self.W.zero,) * e
        self.one = tuple([self.W.one] + [self.W.zero] * (e - 1))
        self.pi = (
            tuple([self.W.zero, self.W.one] + [self.W.zero] * (e - 2))
            if e > 1
            else (self.W.from_int(-eis[0]),)
        )
        self._red = self._reduction_table()
        # pi^e = p * w with w the unit below; used for exact pi-division
        self._w_unit = tuple(self.W.from_int(-(eis[i] // p)) for i in range(e))
        self._w_unit_inv = self.inv(self._w_unit)
        self._trace_pows = self._newton_traces()

    def _reduction_table(self):
        # integer coefficients of pi^(e+k) for k = 0..e-2
        e = self.e
        table = []
        cur = [-self.eis[i] for i in range(e)]
        table.append(list(cur))
        for _ in range(e - 2):
            nxt = [0] + cur[:-1]
            lead = cur[-1]
            if lead:
                for i in range(e):
                    nxt[i] -= lead * self.eis[i]
            nxt = nxt[:e]
            table.append(list(nxt))
            cur = nxt
        return table

    def _newton_traces(self):
        # tr(pi^k) for k = 0..e-1 from Newton's identities; exact integers
        e = self.e
        s = [e]
        for k in range(1, e):
            acc = -k * self.eis[e - k]
            for i in range(1, k):
                acc -= self.eis[e - i] * s[k - i]
            s.append(acc)
        return s

    # element ops -------------------------------------------------------

    def add(self, a, b):
        W = self.W
        return tuple(W.add(x, y) for x, y in zip(a, b))

    def sub(self, a, b):
        W = self.W
        return tuple(W.sub(x, y) for x, y in zip(a, b))

    def neg(self, a):
        W = self.W
        return tuple(W.neg(x) for x in a)

    def mul(self, a, b):
        W, e = self.W, self.e
        if e == 1:
            return (W.mul(a[0], b[0]),)
        prod = [W.zero] * (2 * e - 1)
        for i, ai in enumerate(a):
            if ai != W.zero:
                for j, bj in enumerate(b):
                    if bj != W.zero:
                        prod[i + j] = W.add(prod[i + j], W.mul(ai, bj))
        out = list(prod[:e])
        for k in range(e - 1):
            c = prod[e + k]
            if c != W.zero:
                red = self._red[k]
                for i in range(e):
                    if red[i]:
                        out[i] = W.add(out[i], W.scalar_mul(red[i], c))
        return tuple(out)

    def scalar_mul(self, n, a):
        W = self.W
        return tuple(W.scalar_mul(n, x) for x in a)

    def w_mul(self, wcoeff, a):
        W = self.W
        return tuple(W.mul(wcoeff, x) for x in a)

    def pow(self, a, n):
        acc = self.one
        base = a
        while n:
            if n & 1:
                acc = self.mul(acc, base)
            base = self.mul(base, base)
            n >>= 1
        return acc

    def from_int(self, n):
        return tuple([self.W.from_int(n)] + [self.W.zero] * (self.e - 1))

    def from_witt(self, wx):
        return tuple([wx] + [self.W.zero] * (self.e - 1))

    def sigma(self, a, power=1):
        W = self.W
        return tuple(W.frob(x, power) for x in a)

    def conj(self, a):
        if self.conj_kind in (None, "C"):
            return a
        if self.conj_kind == "AU":
            return self.sigma(a, self.f // 2)
        W = self.W
        return tuple(x if i % 2 == 0 else W.neg(x) for i, x in enumerate(a))

    def val(self, a):
        """pi-adic valuation in units of val(p) = 1, as a Fraction.

        Stored-zero elements return math.inf; use val_certified when the
        distinction between true zero and lost precision matters.
        """
        best = None
        for i, x in enumerate(a):
            v = self.W.val(x)
            if v < self.W.m:
                cand = Fraction(v) + Fraction(i, self.e)
                if best is None or cand < best:
                    best = cand
        return best if best is not None else math.inf

    def val_certified(self, a):
        v = self.val(a)
        if v is math.inf:
            raise PrecisionExhausted(
                f"valuation exceeds stored precision m={self.m}"
            )
        ceiling = Fraction(self.m)
        if v >= ceiling:
            raise PrecisionExhausted(
                f"valuation {v} not certified below precision ceiling {ceiling}"
            )
        return v

    def is_unit(self, a):
        return self.W.is_unit(a[0])

    def inv(self, a):
        if not self.is_unit(a):
            raise ZeroDivisionError("non-unit in O_m")
        z = self.from_witt(self.W.from_res(self.W.res.inv(self.W.to_res(a[0]))))
        two = self.from_int(2)
        steps = max(1, (self.e * self.m).bit_length())
        for _ in range(steps):
            z = self.mul(z, self.sub(two, self.mul(a, z)))
        assert self.mul(a, z) == self.one
        return z

    def exact_div_p(self, a):
        W = self.W
        return tuple(W.exact_div_p(x) for x in a)

    def divide_pi_power(self, a, k):
        """a / pi^k, exact; loses ceil(k/e) stored p-digits."""
        assert k >= 0
        if k == 0:
            return a
        q, r = divmod(k, self.e)
        out = a
        if r:
            out = self.mul(out, self.pow(self.pi, self.e - r))
            q += 1
        for _ in range(q):
            out = self.mul(out, self._w_unit_inv)
            out = self.exact_div_p(out)
        return out

    def divide_exact(self, x, d):
        """x / d for val(x) >= val(d), d of exact pi-power-times-unit shape."""
        j = self.val(d)
        assert j is not math.inf
        k = j * self.e
        assert k.denominator == 1
        k = int(k)
        u = self.divide_pi_power(d, k)
        q = self.mul(x, self.inv(u))
        return self.divide_pi_power(q, k)

    def to_res(self, a):
        return self.W.to_res(a[0])

    def teich(self, c):
        return self.from_witt(self.W.teich(c))

    def trace(self, a):
        """tr_{O/W}(a) via exact Newton power sums of E."""
        W = self.W
        acc = W.zero
        for i, x in enumerate(a):
            s = self._trace_pows[i]
            if s:
                acc = W.add(acc, W.scalar_mul(s, x))
        return acc

    def eprime_at_pi(self):
        """E'(pi), the different generator delta."""
        acc = self.zero
        for i in range(1, self.e + 1):
            c = i * self.eis[i]
            if c:
                acc = self.add(acc, self.scalar_mul(c, self.pow(self.pi, i - 1)))
        return acc

    def quotient_coeffs(self):
        """Coefficients gamma_i of E(T)/(T - pi), by synthetic division."""
        gam = [self.zero] * self.e
        gam[self.e - 1] = self.one
        for i in range(self.e - 1, 0, -1):
            gam[i - 1] = self.add(
                self.from_int(self.eis[i]), self.mul(self.pi, gam[i])
            )
        return gam

    def random(self, rng):
        return tuple(self.W.random(rng) for _ in range(self.e))

    def random_unit(self, rng):
        while True:
            a = self.random(rng)
            if self.is_unit(a):
                return a

    def embed_into(self, other: "RamifiedRing"):
        """Coefficientwise Witt embedding; both rings share E and pi."""
        assert other.eis == self.eis and other.e == self.e
        wphi = self.W.embed_into(other.W)

        def phi(a, _wphi=wphi):
            return tuple(_wphi(x) for x in a)

        return phi


def ramified_val(ring: RamifiedRing, a):
    """Normalized valuation with val(p) = 1; math.inf for stored zero."""
    return ring.val(a)


# matrix helpers over a ring with add/sub/neg/mul/zero/one ---------------


def rmat_identity(R, n):
    return [[R.one if i == j else R.zero for j in range(n)] for i in range(n)]


def rmat_add(R, A, B):
    return [[R.add(a, b) for a, b in zip(r1, r2)] for r1, r2 in zip(A, B)]


def rmat_sub(R, A, B):
    return [[R.sub(a, b) for a, b in zip(r1, r2)] for r1, r2 in zip(A, B)]


def rmat_neg(R, A):
    return [[R.neg(a) for a in row] for row in A]


def rmat_mul(R, A, B):
    n, k = len(A), len(B)
    m = len(B[0]) if k else 0
    out = [[R.zero] * m for _ in range(n)]
    for i in range(n):
        for l in range(k):
            a = A[i][l]
            if a == R.zero:
                continue
            for j in range(m):
                b = B[l][j]
                if b != R.zero:
                    out[i][j] = R.add(out[i][j], R.mul(a, b))
    return out


def rmat_vec(R, A, v):
    out = []
    for row in A:
        acc = R.zero
        for a, x in zip(row, v):
            if a != R.zero and x != R.zero:
                acc = R.add(acc, R.mul(a, x))
        out.append(acc)
    return out


def rmat_transpose(A):
    return [list(col) for col in zip(*A)]


def rmat_scalar(R, c, A):
    return [[R.mul(c, a) for a in row] for row in A]


def rmat_sigma(R, A, power=1):
    return [[R.sigma(a, power) for a in row] for row in A]


def rmat_conj(R, A):
    return [[R.conj(a) for a in row] for row in A]


def rmat_inv(R, A):
    """Inverse of a matrix invertible over the residue field, by lifting."""
    n = len(A)
    K = R.W.res
    Abar = [[R.to_res(a) for a in row] for row in A]
    from .gf import mat_inv as _gf_mat_inv

    Zbar = _gf_mat_inv(K, Abar)
    Z = [[_lift_res(R, c) for c in row] for row in Zbar]
    two_i = [[R.from_int(2) if i == j else R.zero for j in range(n)] for i in range(n)]
    steps = max(1, (R.e * R.m).bit_length())
    for _ in range(steps):
        Z = rmat_mul(R, Z, rmat_sub(R, two_i, rmat_mul(R, A, Z)))
    assert rmat_mul(R, A, Z) == rmat_identity(R, n), "matrix not invertible"
    return Z


def _lift_res(R, c):
    return R.from_witt(R.W.from_res(c))


def berkowitz_charpoly(R, A):
    """Coefficients of det(T*I - A), descending, leading 1; division-free."""
    n = len(A)
    if n == 0:
        return [R.one]
    V = [R.one, R.neg(A[0][0])]
    for i in range(1, n):
        T = [R.one, R.neg(A[i][i])]
        vec = [A[j][i] for j in range(i)]
        for k in range(i):
            rc = R.zero
            for j in range(i):
                if A[i][j] != R.zero and vec[j] != R.zero:
                    rc = R.add(rc, R.mul(A[i][j], vec[j]))
            T.append(R.neg(rc))
            if k < i - 1:
                vec = [
                    _dot(R, [A[r][j] for j in range(i)], vec) for r in range(i)
                ]
        newV = [R.zero] * (i + 2)
        for s in range(i + 2):
            acc = R.zero
            for u in range(min(s, i + 1) + 1):
                if u < len(T) and s - u < len(V):
                    tu, vs = T[u], V[s - u]
                    if tu != R.zero and vs != R.zero:
                        acc = R.add(acc, R.mul(tu, vs))
            newV[s] = acc
        V = newV
    return V


def _dot(R, row, vec):
    acc = R.zero
    for a, x in zip(row, vec):
        if a != R.zero and x != R.zero:
            acc = R.add(acc, R.mul(a, x))
    return acc


def rmat_det(R, A):
    n = len(A)
    coeffs = berkowitz_charpoly(R, A)
    d = coeffs[-1]
    return d if n % 2 == 0 else R.neg(d)


def smith_profile(R: RamifiedRing, A):
    """e-scaled elementary divisor valuations of A, descending ints.

    Requires every divisor to be certified below the precision ceiling;
    raises PrecisionExhausted otherwise.
    """
    A = [row[:] for row in A]
    n = len(A)
    m = len(A[0]) if n else 0
    vals = []
    r = 0
    size = min(n, m)
    # Entries are trusted mod p^floor; each pi-division in the elimination
    # costs a stored digit, so the floor drops by ceil(pivot val) per step.
    floor = Fraction(R.m)
    while r < size:
        best = None
        for i in range(r, n):
            for j in range(r, m):
                v = R.val(A[i][j])
                if v is not math.inf and v < floor and (
                    best is None or v < best[0]
                ):
                    best = (v, i, j)
        if best is None:
            raise PrecisionExhausted(
                "remaining elementary divisors exceed certified precision"
            )
        v, bi, bj = best
        floor -= math.ceil(v)
        A[r], A[bi] = A[bi], A[r]
        for row in A:
            row[r], row[bj] = row[bj], row[r]
        pivot = A[r][r]
        for i in range(r + 1, n):
            if R.val(A[i][r]) is not math.inf:
                q = R.divide_exact(A[i][r], pivot)
                for j in range(r, m):
                    A[i][j] = R.sub(A[i][j], R.mul(q, A[r][j]))
        for j in range(r + 1, m):
            if R.val(A[r][j]) is not math.inf:
                q = R.divide_exact(A[r][j], pivot)
                for i in range(r, n):
                    A[i][j] = R.sub(A[i][j], R.mul(q, A[i][r]))
        scaled = v * R.e
        assert scaled.denominator == 1
        vals.append(int(scaled))
        r += 1
    return sorted(vals, reverse=True)
