"""Coefficient ring for one-parameter deformation families.

Elements are finite O_m-linear combinations of monomials t^alpha with
fractional exponents alpha = a / p^d, held as sorted tuples of
(Fraction exponent, O_m coefficient) pairs.  The semilinear Frobenius sends
t^alpha to t^(p*alpha) and acts by sigma on coefficients; its inverse divides
exponents by p and is guarded by a denominator budget.
"""

from __future__ import annotations

from fractions import Fraction

from ..errors import BudgetExceeded


class FamilyRing:
    def __init__(self, R, T=8, denom_budget=32):
        self.R = R
        self.T = Fraction(T)
        self.denom_budget = denom_budget
        self.max_denom = R.p ** denom_budget
        self.zero = ()
        self.one = ((Fraction(0), R.one),)
        self.t = ((Fraction(1), R.one),)

    def make(self, pairs):
        """Canonical element from (exponent, coefficient) pairs."""
        R = self.R
        acc = {}
        for alpha, c in pairs:
            alpha = Fraction(alpha)
            if alpha > self.T:
                continue
            if alpha in acc:
                acc[alpha] = R.add(acc[alpha], c)
            else:
                acc[alpha] = c
        return tuple(
            (a, c) for a, c in sorted(acc.items()) if c != R.zero
        )

    def from_scalar(self, c):
        return self.make([(Fraction(0), c)])

    def t_power(self, alpha):
        return self.make([(Fraction(alpha), self.R.one)])

    def add(self, x, y):
        return self.make(list(x) + list(y))

    def neg(self, x):
        R = self.R
        return tuple((a, R.neg(c)) for a, c in x)

    def sub(self, x, y):
        return self.add(x, self.neg(y))

    def mul(self, x, y):
        R = self.R
        pairs = []
        for a1, c1 in x:
            for a2, c2 in y:
                if a1 + a2 <= self.T:
                    pairs.append((a1 + a2, R.mul(c1, c2)))
        return self.make(pairs)

    def scalar_mul(self, c, x):
        R = self.R
        return self.make([(a, R.mul(c, cf)) for a, cf in x])

    def conj(self, x):
        # t is a fixed parameter; conjugation acts through coefficients only.
        R = self.R
        return tuple((a, R.conj(c)) for a, c in x)

    def val(self, x):
        """Generic-fiber pi-valuation: distinct t-monomials never cancel."""
        import math

        R = self.R
        if not x:
            return math.inf
        return min(R.val(c) for _, c in x)

    def sigma(self, x, power=1):
        R = self.R
        if power >= 0:
            return self.make(
                [(a * R.p ** power, R.sigma(c, power)) for a, c in x]
            )
        k = -power
        pairs = []
        for a, c in x:
            a2 = a / R.p ** k
            if a2.denominator > self.max_denom:
                raise BudgetExceeded(
                    f"t-exponent denominator {a2.denominator} exceeds "
                    f"p^{self.denom_budget}",
                    bound=self.denom_budget,
                )
            pairs.append((a2, R.sigma(c, power)))
        return self.make(pairs)

    def reduce_mod_pi(self, x):
        """Nonzero residue-field coefficients, as a sorted exponent map."""
        R = self.R
        out = []
        for a, c in x:
            r = R.to_res(c)
            if r:
                out.append((a, r))
        return tuple(out)

    def is_zero_mod_pi(self, x):
        return not self.reduce_mod_pi(x)

    def constant_term(self, x):
        for a, c in x:
            if a == 0:
                return c
        return self.R.zero

    def specialize(self, x, eval_monomial, target, coeff_map):
        """Evaluate t^alpha via eval_monomial into the ring `target`."""
        acc = target.zero
        for a, c in x:
            acc = target.add(acc, target.mul(coeff_map(c), eval_monomial(a)))
        return acc
