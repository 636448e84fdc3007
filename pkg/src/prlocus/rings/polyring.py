"""Dense univariate polynomials over a GF field, and their fraction field.

Polynomials are trimmed tuples of encoded field elements, constant term first;
the empty tuple is zero.  FracPoly is a reduced numerator/denominator pair with
monic denominator.  These are the scalars for all k(t) linear algebra.
"""

from __future__ import annotations


class Poly:
    """Namespace of polynomial operations bound to a field K."""

    def __init__(self, K):
        self.K = K
        self.zero = ()
        self.one = (1,)
        self.t = (0, 1)

    def trim(self, a):
        a = tuple(a)
        while a and a[-1] == 0:
            a = a[:-1]
        return a

    def const(self, c):
        return (c,) if c else ()

    def add(self, a, b):
        K = self.K
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, c in enumerate(b):
            out[i] = K.add(out[i], c)
        return self.trim(out)

    def neg(self, a):
        K = self.K
        return tuple(K.neg(c) for c in a)

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def mul(self, a, b):
        if not a or not b:
            return ()
        K = self.K
        out = [0] * (len(a) + len(b) - 1)
        for i, ai in enumerate(a):
            if ai:
                for j, bj in enumerate(b):
                    if bj:
                        out[i + j] = K.add(out[i + j], K.mul(ai, bj))
        return self.trim(out)

    def scale(self, c, a):
        K = self.K
        if not c:
            return ()
        return self.trim(tuple(K.mul(c, x) for x in a))

    def divmod(self, a, b):
        """Quotient and remainder; b nonzero."""
        K = self.K
        if not b:
            raise ZeroDivisionError("polynomial division by zero")
        a = list(a)
        q = [0] * max(0, len(a) - len(b) + 1)
        inv_lead = K.inv(b[-1])
        while len(a) >= len(b) and any(a):
            while a and a[-1] == 0:
                a.pop()
            if len(a) < len(b):
                break
            c = K.mul(a[-1], inv_lead)
            shift = len(a) - len(b)
            q[shift] = c
            for i, bi in enumerate(b):
                a[shift + i] = K.sub(a[shift + i], K.mul(c, bi))
        return self.trim(q), self.trim(a)

    def exact_div(self, a, b):
        q, r = self.divmod(a, b)
        if r:
            raise ArithmeticError("inexact polynomial division")
        return q

    def gcd(self, a, b):
        a, b = self.trim(a), self.trim(b)
        while b:
            a, b = b, self.divmod(a, b)[1]
        return self.monic(a)

    def monic(self, a):
        if not a:
            return ()
        return self.scale(self.K.inv(a[-1]), a)

    def eval_at(self, a, x):
        K = self.K
        acc = 0
        for c in reversed(a):
            acc = K.add(K.mul(acc, x), c)
        return acc

    def deg(self, a):
        return len(a) - 1 if a else -1

    def t_val(self, a):
        """t-adic valuation; None for the zero polynomial."""
        if not a:
            return None
        v = 0
        while a[v] == 0:
            v += 1
        return v

    def shift_down(self, a, v):
        """Divide by t^v (requires valuation >= v)."""
        if not a:
            return ()
        assert all(c == 0 for c in a[:v])
        return self.trim(a[v:])

    def truncate(self, a, T):
        return self.trim(a[:T])


class FracPoly:
    """Operations on reduced (num, den) pairs over a Poly namespace."""

    def __init__(self, P: Poly):
        self.P = P
        self.zero = ((), (1,))
        self.one = ((1,), (1,))

    def make(self, num, den=(1,)):
        return self.reduce(num, den)

    def reduce(self, num, den):
        P = self.P
        num, den = P.trim(num), P.trim(den)
        if not den:
            raise ZeroDivisionError("zero denominator")
        if not num:
            return ((), (1,))
        g = P.gcd(num, den)
        if P.deg(g) > 0:
            num = P.exact_div(num, g)
            den = P.exact_div(den, g)
        lead = den[-1]
        if lead != 1:
            inv = P.K.inv(lead)
            num = P.scale(inv, num)
            den = P.scale(inv, den)
        return (num, den)

    def add(self, f, g):
        P = self.P
        return self.reduce(
            P.add(P.mul(f[0], g[1]), P.mul(g[0], f[1])), P.mul(f[1], g[1])
        )

    def neg(self, f):
        return (self.P.neg(f[0]), f[1])

    def sub(self, f, g):
        return self.add(f, self.neg(g))

    def mul(self, f, g):
        P = self.P
        return self.reduce(P.mul(f[0], g[0]), P.mul(f[1], g[1]))

    def inv(self, f):
        if not f[0]:
            raise ZeroDivisionError("inverse of zero rational function")
        return self.reduce(f[1], f[0])

    def div(self, f, g):
        return self.mul(f, self.inv(g))

    def is_zero(self, f):
        return not f[0]

    def from_poly(self, a):
        return (self.P.trim(a), (1,))

    def den_is_t_unit(self, f):
        """True iff the denominator is invertible in k[[t]]."""
        return bool(f[1]) and f[1][0] != 0

    def eval_at_zero(self, f):
        """Value at t = 0; requires a t-unit denominator."""
        if not self.den_is_t_unit(f):
            raise ZeroDivisionError("denominator vanishes at t = 0")
        K = self.P.K
        num0 = f[0][0] if f[0] else 0
        return K.div(num0, f[1][0])
