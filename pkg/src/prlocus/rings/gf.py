"""Finite fields F_{p^s} in a fixed polynomial basis, plus exact linear algebra.

Elements are plain integers in [0, p^s); the base-p digits of an element are its
coordinates against the power basis 1, x, ..., x^{s-1} modulo a fixed monic
irreducible polynomial.  The modulus is the first monic irreducible of degree s
in ascending order of the integer encoding of its lower coefficients, so every
run constructs the same field.

Matrices are lists of rows of encoded elements.  All elimination is exact.
"""

from __future__ import annotations

import itertools
from functools import lru_cache


def _poly_mul_mod(p, a, b, mod):
    # dense schoolbook product of coefficient lists, reduced by the monic `mod`
    res = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                if bj:
                    res[i + j] = (res[i + j] + ai * bj) % p
    deg_m = len(mod) - 1
    for i in range(len(res) - 1, deg_m - 1, -1):
        c = res[i]
        if c:
            res[i] = 0
            for j in range(deg_m):
                res[i - deg_m + j] = (res[i - deg_m + j] - c * mod[j]) % p
    res = res[:deg_m]
    while len(res) < deg_m:
        res.append(0)
    return res


def _poly_pow_mod(p, base, exp, mod):
    result = [1] + [0] * (len(mod) - 2)
    base = list(base)
    while exp:
        if exp & 1:
            result = _poly_mul_mod(p, result, base, mod)
        base = _poly_mul_mod(p, base, base, mod)
        exp >>= 1
    return result


def _is_irreducible(p, coeffs):
    """Rabin test for a monic polynomial given as a full coefficient list."""
    s = len(coeffs) - 1
    if s == 1:
        return True
    x = [0, 1] + [0] * (s - 2)
    # x^{p^s} must equal x mod f
    t = x
    for _ in range(s):
        t = _poly_pow_mod(p, t, p, coeffs)
    if t != x:
        return False
    # and x^{p^{s/l}} - x must be coprime to f for every prime l | s
    for ell in _prime_divisors(s):
        t = x
        for _ in range(s // ell):
            t = _poly_pow_mod(p, t, p, coeffs)
        diff = [(ti - xi) % p for ti, xi in zip(t, x)]
        if _poly_gcd_is_nonunit(p, diff, coeffs):
            return False
    return True


def _prime_divisors(n):
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def _poly_gcd_is_nonunit(p, a, b):
    a = _trim(a)
    b = _trim(b)
    while b:
        a, b = b, _poly_rem(p, a, b)
    return len(a) > 1


def _trim(a):
    a = list(a)
    while a and a[-1] == 0:
        a.pop()
    return a


def _poly_rem(p, a, b):
    a = _trim(a)
    b = _trim(b)
    inv_lead = pow(b[-1], p - 2, p)
    while len(a) >= len(b):
        c = a[-1] * inv_lead % p
        shift = len(a) - len(b)
        for i, bi in enumerate(b):
            a[shift + i] = (a[shift + i] - c * bi) % p
        a = _trim(a)
    return a


@lru_cache(maxsize=None)
def _find_modulus(p, s):
    for n in range(p ** s):
        coeffs = _digits(n, p, s) + [1]
        if coeffs[0] == 0 and s > 1:
            continue  # reducible: divisible by x
        if _is_irreducible(p, coeffs):
            return tuple(coeffs)
    raise RuntimeError("no irreducible polynomial found")  # unreachable


def _digits(n, p, s):
    out = []
    for _ in range(s):
        out.append(n % p)
        n //= p
    return out


class GF:
    """The field F_{p^s}; elements are integer encodings of coefficient vectors."""

    def __init__(self, p, s=1):
        if p < 2:
            raise ValueError("p must be a prime")
        self.p = p
        self.s = s
        self.q = p ** s
        self.modulus = list(_find_modulus(p, s)) if s > 1 else [0, 1]
        self.zero = 0
        self.one = 1
        self._embed_cache = {}

    # -- encoding ---------------------------------------------------------

    def encode(self, coeffs):
        n = 0
        for c in reversed(coeffs):
            n = n * self.p + (c % self.p)
        return n

    def decode(self, a):
        return _digits(a, self.p, self.s)

    def elements(self):
        return range(self.q)

    # -- arithmetic -------------------------------------------------------

    def add(self, a, b):
        if self.s == 1:
            return (a + b) % self.p
        p = self.p
        return self.encode([x + y for x, y in zip(self.decode(a), self.decode(b))])

    def sub(self, a, b):
        if self.s == 1:
            return (a - b) % self.p
        return self.encode([x - y for x, y in zip(self.decode(a), self.decode(b))])

    def neg(self, a):
        if self.s == 1:
            return (-a) % self.p
        return self.encode([-x for x in self.decode(a)])

    def mul(self, a, b):
        if self.s == 1:
            return a * b % self.p
        if a == 0 or b == 0:
            return 0
        prod = _poly_mul_mod(self.p, self.decode(a), self.decode(b), self.modulus)
        return self.encode(prod)

    def inv(self, a):
        if a == 0:
            raise ZeroDivisionError("inverse of zero in GF")
        if self.s == 1:
            return pow(a, self.p - 2, self.p)
        return self.pow(a, self.q - 2)

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def pow(self, a, n):
        if a == 0:
            if n < 0:
                raise ZeroDivisionError("inverse of zero in GF")
            return 1 if n == 0 else 0
        n %= self.q - 1
        result = 1
        base = a
        while n:
            if n & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            n >>= 1
        return result

    def frob(self, a):
        """The field Frobenius x -> x^p."""
        return self.pow(a, self.p)

    def frob_inv(self, a):
        return self.pow(a, self.p ** (self.s - 1)) if self.s > 1 else a

    # -- embeddings -------------------------------------------------------

    def embed_into(self, other):
        """Return phi: self -> other for s | s'; phi is cached and deterministic.

        phi sends the generator x to the smallest-encoded root of this field's
        modulus inside `other`.
        """
        if other.p != self.p or other.s % self.s != 0:
            raise ValueError("no embedding: target degree not a multiple")
        key = (other.p, other.s)
        if key in self._embed_cache:
            return self._embed_cache[key]
        if self.s == 1:
            table = list(range(self.p))

            def phi(a, _table=table):
                return _table[a]
        else:
            root = None
            for cand in other.elements():
                acc = 0
                for c in reversed(self.modulus):
                    acc = other.add(other.mul(acc, cand), c % self.p)
                if acc == 0:
                    root = cand
                    break
            if root is None:
                raise RuntimeError("modulus has no root in extension")
            powers = [1]
            for _ in range(self.s - 1):
                powers.append(other.mul(powers[-1], root))

            def phi(a, _powers=powers, _self=self, _other=other):
                acc = 0
                for c, pw in zip(_self.decode(a), _powers):
                    # prime-field digits embed as themselves
                    acc = _other.add(acc, _other.mul(c, pw))
                return acc

        self._embed_cache[key] = phi
        return phi

    def embed_const(self, c):
        """Embed a prime-field constant (an int mod p) into this field."""
        return c % self.p


def gaussian_binomial(n, k, q):
    """The q-binomial coefficient, the number of k-dim subspaces of F_q^n."""
    if k < 0 or k > n:
        return 0
    num = den = 1
    for i in range(k):
        num *= q ** (n - i) - 1
        den *= q ** (i + 1) - 1
    assert num % den == 0
    return num // den


# ---------------------------------------------------------------------------
# exact linear algebra over GF
# ---------------------------------------------------------------------------


def mat_identity(n):
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def mat_mul(K, A, B):
    n, m = len(A), len(B[0])
    inner = len(B)
    out = [[0] * m for _ in range(n)]
    for i in range(n):
        Ai = A[i]
        for k in range(inner):
            a = Ai[k]
            if a:
                Bk = B[k]
                row = out[i]
                for j in range(m):
                    if Bk[j]:
                        row[j] = K.add(row[j], K.mul(a, Bk[j]))
    return out

def mat_vec(K, A, v):
    return [c[0] for c in mat_mul(K, A, [[x] for x in v])]


def mat_add(K, A, B):
    return [[K.add(a, b) for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def mat_transpose(A):
    return [list(col) for col in zip(*A)]


def rref(K, A):
    """Reduced row echelon form; returns (R, pivot column list)."""
    R = [list(row) for row in A]
    rows = len(R)
    cols = len(R[0]) if rows else 0
    pivots = []
    r = 0
    for c in range(cols):
        pr = None
        for i in range(r, rows):
            if R[i][c]:
                pr = i
                break
        if pr is None:
            continue
        R[r], R[pr] = R[pr], R[r]
        inv = K.inv(R[r][c])
        R[r] = [K.mul(inv, x) for x in R[r]]
        for i in range(rows):
            if i != r and R[i][c]:
                f = R[i][c]
                R[i] = [K.sub(x, K.mul(f, y)) for x, y in zip(R[i], R[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return R, pivots


def mat_rank(K, A):
    if not A or not A[0]:
        return 0
    return len(rref(K, A)[1])


def right_kernel(K, A):
    """Basis (list of vectors) of {v : A v = 0}."""
    cols = len(A[0]) if A else 0
    if not A:
        return [[1 if i == j else 0 for j in range(cols)] for i in range(cols)]
    R, pivots = rref(K, A)
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for fc in free:
        v = [0] * cols
        v[fc] = 1
        for r, pc in enumerate(pivots):
            v[pc] = K.neg(R[r][fc])
        basis.append(v)
    return basis


def solve(K, A, b):
    """One solution of A x = b, or None."""
    aug = [row + [bi] for row, bi in zip(A, b)]
    R, pivots = rref(K, aug)
    cols = len(A[0])
    if cols in pivots:
        return None
    x = [0] * cols
    for r, pc in enumerate(pivots):
        x[pc] = R[r][cols]
    return x


def mat_inv(K, A):
    n = len(A)
    aug = [list(row) + [1 if i == j else 0 for j in range(n)] for i, row in enumerate(A)]
    R, pivots = rref(K, aug)
    if pivots != list(range(n)):
        raise ZeroDivisionError("matrix not invertible")
    return [row[n:] for row in R]


def enumerate_subspaces(K, n, d):
    """All d-dim subspaces of K^n as reduced row echelon basis matrices.

    Deterministic lexicographic order: pivot columns in ascending combinations,
    free entries counted in ascending integer encoding.
    """
    if d == 0:
        yield []
        return
    for pivots in itertools.combinations(range(n), d):
        pivot_set = set(pivots)
        free_positions = [
            (r, c)
            for r in range(d)
            for c in range(pivots[r] + 1, n)
            if c not in pivot_set
        ]
        nfree = len(free_positions)
        for counter in range(K.q ** nfree):
            M = [[0] * n for _ in range(d)]
            for r, pc in enumerate(pivots):
                M[r][pc] = 1
            rem = counter
            for (r, c) in free_positions:
                M[r][c] = rem % K.q
                rem //= K.q
            yield M


def row_space_contains(K, A, v):
    """True iff v lies in the row space of A."""
    if not A:
        return all(x == 0 for x in v)
    R, pivots = rref(K, A + [list(v)])
    return len(pivots) == mat_rank(K, A)
