"""Truncated Witt vectors W_m(F_q) as Z/p^m[x]/(modulus).

The modulus is the same integer polynomial that defines the residue field, so
reduction mod p and naive coordinate lifts commute with the presentation.  The
Frobenius is the unique automorphism congruent to the p-power map mod p; it is
computed once as the substitution x -> y where y is the Hensel root of the
modulus lifting x^p.
"""

from __future__ import annotations

from .gf import GF


def _poly_rem_int(a, mod, pm):
    """Remainder of a by the monic mod, coefficients in Z/pm."""
    a = list(a)
    d = len(mod) - 1
    while len(a) > d:
        c = a[-1] % pm
        a.pop()
        if c:
            for i in range(d):
                a[-d + i] = (a[-d + i] - c * mod[i]) % pm
    a += [0] * (d - len(a))
    return [c % pm for c in a]


class WittRing:
    """W_m(F_{p^f}); elements are length-f tuples of ints mod p^m."""

    def __init__(self, p, f, m):
        assert m >= 1 and f >= 1
        self.p = p
        self.f = f
        self.m = m
        self.pm = p ** m
        self.res = GF(p, f)
        self.modulus = list(self.res.modulus)
        self.zero = (0,) * f
        self.one = tuple([1] + [0] * (f - 1))
        self._red = self._reduction_table()
        self._frob_mat = self._build_frob_matrix()
        self._frob_pows = self._matrix_powers(self._frob_mat)

    def _reduction_table(self):
        # x^(f+k) mod modulus for k = 0 .. f-2
        f, pm = self.f, self.pm
        table = []
        cur = [(-self.modulus[i]) % pm for i in range(f)]
        table.append(tuple(cur))
        for _ in range(f - 2):
            nxt = [0] + cur[:-1]
            lead = cur[-1]
            if lead:
                for i in range(f):
                    nxt[i] = (nxt[i] - lead * self.modulus[i]) % pm
            nxt = [c % pm for c in nxt[:f]]
            table.append(tuple(nxt))
            cur = nxt
        return table

    def _build_frob_matrix(self):
        f, p, pm = self.f, self.p, self.pm
        if f == 1:
            return [[1]]
        y = tuple(_poly_rem_int([0] * p + [1], self.modulus, pm))
        dmod = [(i * self.modulus[i]) % pm for i in range(1, f + 1)]
        for _ in range(self.m + 2):
            ey = self._eval_int_poly(self.modulus, y)
            if all(c == 0 for c in ey):
                break
            dy = self._eval_int_poly([0] + dmod, y, skip_low=True)
            y = self.sub(y, self.mul(ey, self.inv(dy)))
        assert all(c == 0 for c in self._eval_int_poly(self.modulus, y))
        cols = []
        acc = self.one
        for _ in range(f):
            cols.append(acc)
            acc = self.mul(acc, y)
        return [[cols[j][i] for j in range(f)] for i in range(f)]

    def _eval_int_poly(self, coeffs, y, skip_low=False):
        # Horner with integer scalar coefficients; skip_low drops coeffs[0]
        src = coeffs[1:] if skip_low else coeffs
        acc = self.zero
        for c in reversed(src):
            acc = self.mul(acc, y)
            if c:
                acc = tuple((a + c * o) % self.pm for a, o in zip(acc, self.one))
        return acc

    def _matrix_powers(self, M):
        f, pm = self.f, self.pm
        pows = [[[1 if i == j else 0 for j in range(f)] for i in range(f)]]
        cur = pows[0]
        for _ in range(f - 1):
            cur = [
                [sum(M[i][k] * cur[k][j] for k in range(f)) % pm for j in range(f)]
                for i in range(f)
            ]
            pows.append(cur)
        return pows

    # element ops -------------------------------------------------------

    def add(self, a, b):
        pm = self.pm
        return tuple((x + y) % pm for x, y in zip(a, b))

    def sub(self, a, b):
        pm = self.pm
        return tuple((x - y) % pm for x, y in zip(a, b))

    def neg(self, a):
        pm = self.pm
        return tuple((-x) % pm for x in a)

    def mul(self, a, b):
        f, pm = self.f, self.pm
        if f == 1:
            return ((a[0] * b[0]) % pm,)
        prod = [0] * (2 * f - 1)
        for i, ai in enumerate(a):
            if ai:
                for j, bj in enumerate(b):
                    if bj:
                        prod[i + j] = (prod[i + j] + ai * bj) % pm
        out = list(prod[:f])
        for k in range(f - 1):
            c = prod[f + k]
            if c:
                red = self._red[k]
                for i in range(f):
                    out[i] = (out[i] + c * red[i]) % pm
        return tuple(out)

    def scalar_mul(self, n, a):
        pm = self.pm
        return tuple((n * x) % pm for x in a)

    def pow(self, a, n):
        acc = self.one
        base = a
        while n:
            if n & 1:
                acc = self.mul(acc, base)
            base = self.mul(base, base)
            n >>= 1
        return acc

    def is_unit(self, a):
        return any(x % self.p for x in a)

    def inv(self, a):
        if not self.is_unit(a):
            raise ZeroDivisionError("non-unit in W_m")
        z = self.from_res(self.res.inv(self.to_res(a)))
        two = tuple((2 if i == 0 else 0) for i in range(self.f))
        steps = max(1, self.m.bit_length())
        for _ in range(steps):
            z = self.mul(z, self.sub(two, self.mul(a, z)))
        assert self.mul(a, z) == self.one
        return z

    def frob(self, a, power=1):
        k = power % self.f
        if k == 0:
            return a
        M = self._frob_pows[k]
        pm = self.pm
        return tuple(
            sum(M[i][j] * a[j] for j in range(self.f)) % pm for i in range(self.f)
        )

    def val(self, a):
        """min p-adic valuation of the coordinates; m when all are stored 0."""
        best = self.m
        for x in a:
            if x:
                v = 0
                while x % self.p == 0:
                    x //= self.p
                    v += 1
                best = min(best, v)
        return best

    def exact_div_p(self, a):
        assert all(x % self.p == 0 for x in a), "inexact division by p"
        return tuple(x // self.p for x in a)

    def to_res(self, a):
        return self.res.encode([x % self.p for x in a])

    def from_res(self, c):
        return tuple(self.res.decode(c))

    def from_int(self, n):
        return tuple([n % self.pm] + [0] * (self.f - 1))

    def teich(self, c):
        """Teichmuller representative of a residue field element."""
        z = self.from_res(c)
        q = self.p ** self.f
        for _ in range(self.m):
            z = self.pow(z, q)
        return z

    def random(self, rng):
        return tuple(rng.randrange(self.pm) for _ in range(self.f))

    def embed_into(self, other: "WittRing"):
        """Ring embedding W_m(F_{p^f}) -> W_m(F_{p^f'}) for f | f'.

        Residue-compatible root embeddings are Hensel-unique, so the map
        automatically intertwines the two Frobenius lifts.
        """
        assert other.p == self.p and other.m == self.m
        assert other.f % self.f == 0
        key = (other.p, other.f, other.m)
        cache = getattr(self, "_embed_cache", None)
        if cache is None:
            cache = self._embed_cache = {}
        if key in cache:
            return cache[key]
        if self.f == 1:
            def phi1(a, _o=other):
                return _o.from_int(a[0])

            cache[key] = phi1
            return phi1
        resphi = self.res.embed_into(other.res)
        gen = self.res.encode([0, 1])
        z = other.from_res(resphi(gen))
        dmod = [(i * self.modulus[i]) % other.pm for i in range(1, self.f + 1)]
        for _ in range(self.m + 2):
            ez = other._eval_int_poly(self.modulus, z)
            if all(c == 0 for c in ez):
                break
            dz = other._eval_int_poly([0] + dmod, z, skip_low=True)
            z = other.sub(z, other.mul(ez, other.inv(dz)))
        assert all(c == 0 for c in other._eval_int_poly(self.modulus, z))
        pows = []
        acc = other.one
        for _ in range(self.f):
            pows.append(acc)
            acc = other.mul(acc, z)

        def phi(a, _o=other, _pows=pows):
            out = _o.zero
            for c, pw in zip(a, _pows):
                if c:
                    out = _o.add(out, _o.scalar_mul(c, pw))
            return out

        cache[key] = phi
        return phi


def witt_frobenius(ring: WittRing, a, power=1):
    """Frobenius automorphism on W_m(F_{p^f}), lifting the p-power map."""
    return ring.frob(a, power)
