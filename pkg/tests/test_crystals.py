"""Crystal validation, Newton polygons, NNP normalization, mu-ordinariness."""

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prlocus import crystals as cr
from prlocus.errors import (
    NotDivisible,
    PairingViolated,
    PrecisionExhausted,
    PrecisionTooLow,
    RelationViolated,
    UnsupportedCase,
    ValidationError,
)
from prlocus.polygons import (
    Signature,
    dominates,
    is_symmetric,
    polygon_from_slopes,
)
from fractions import Fraction


def _supersingular(p):
    return cr.make_crystal("AL", p, 1, 1, [[[0, p], [1, 0]]], [[[0, p], [1, 0]]])


def _ordinary2(p):
    return cr.make_crystal("AL", p, 1, 1, [[[1, 0], [0, p]]], [[[p, 0], [0, 1]]])


class TestMakeCrystal:
    def test_supersingular_accepted(self):
        c = _supersingular(3)
        assert (c.p, c.f, c.e, c.h) == (3, 1, 1, 2)
        assert c.m == cr.default_precision(1, 2)

    def test_identity_p_pair(self):
        c = cr.make_crystal("AL", 5, 1, 1, [[[1]]], [[[5]]])
        assert c.h == 1

    def test_relation_violated(self):
        with pytest.raises(RelationViolated):
            cr.make_crystal("AL", 3, 1, 1, [[[1, 1], [0, 1]]], [[[1, 1], [0, 1]]])

    def test_precision_too_low(self):
        with pytest.raises(PrecisionTooLow):
            cr.make_crystal("AL", 3, 1, 1, [[[1]]], [[[3]]], m=1)

    def test_unknown_case(self):
        with pytest.raises(ValidationError):
            cr.make_crystal("XX", 3, 1, 1, [[[1]]], [[[3]]])

    def test_au_needs_even_f(self):
        with pytest.raises(ValidationError):
            cr.make_crystal("AU", 3, 1, 1, [[[1]]], [[[3]]])

    def test_wrong_matrix_count(self):
        with pytest.raises(ValidationError):
            cr.make_crystal("AL", 3, 2, 1, [[[1]]], [[[3]]])

    def test_al_pairing_rejected(self):
        with pytest.raises(ValidationError):
            cr.make_crystal(
                "AL", 3, 1, 1, [[[1]]], [[[3]]], pairing=[[[1]]]
            )

    @given(st.integers(0, 3), st.integers(0, 3), st.integers(0, 3), st.integers(0, 3))
    @settings(max_examples=30, deadline=None)
    def test_random_integer_matrices_rejected(self, a, b, c, d):
        # FV = p has determinant p^2; tiny integer matrices can't reach it
        # unless they happen to hit the relation, which we filter out.
        F = [[a, b], [c, d]]
        V = [[d, b], [c, a]]
        prod = [
            [a * d + b * c, a * b + b * a],
            [c * d + d * c, c * b + d * a],
        ]
        if prod == [[3, 0], [0, 3]]:
            return
        with pytest.raises(RelationViolated):
            cr.make_crystal("AL", 3, 1, 1, [F], [V])


class TestNewton:
    def test_supersingular_half_slopes(self):
        P = cr.newton_polygon(_supersingular(3))
        assert P == polygon_from_slopes([(Fraction(1, 2), 2)], e=2)

    def test_ordinary_slopes(self):
        P = cr.newton_polygon(_ordinary2(5))
        assert P == polygon_from_slopes([0, 1])

    def test_pi_identity_e2(self):
        pi = ((0,), (1,))
        c = cr.make_crystal("C", 3, 1, 2, [[[pi]]], [[[pi]]], m=6)
        assert cr.newton_polygon(c) == polygon_from_slopes([(Fraction(1, 2), 1)], e=2)

    def test_f2_linearization(self):
        F = [[[1, 0], [0, 3]], [[3, 0], [0, 1]]]
        V = [[[3, 0], [0, 1]], [[1, 0], [0, 3]]]
        c = cr.make_crystal("AL", 3, 2, 1, F, V)
        P = cr.newton_polygon(c)
        assert P == polygon_from_slopes([(Fraction(1, 2), 2)], e=2)

    def test_precision_exhausted_then_retry(self):
        F = [[[3, 0], [0, 3]]]
        V = [[[1, 0], [0, 1]]]
        with pytest.raises(PrecisionExhausted):
            cr.newton_polygon(cr.make_crystal("AL", 3, 1, 1, F, V, m=2))
        P = cr.newton_polygon(cr.make_crystal("AL", 3, 1, 1, F, V, m=4))
        assert P == polygon_from_slopes([1, 1])

    def test_dominance_chain_random(self):
        rng = random.Random(313)
        checked = 0
        for p in (3, 5):
            for e in (1, 2, 3):
                for h in (2, 3):
                    for _ in range(4):
                        sig = Signature(
                            tuple(rng.randrange(h + 1) for _ in range(e)), h
                        )
                        c = cr.random_crystal(
                            "AL", p, 1, e, sig, rng, spread=rng.randrange(3)
                        )
                        N = cr.newton_polygon(c)
                        H = cr.hodge_polygon(c)
                        assert dominates(N, H)
                        assert dominates(H, cr.pr_polygon(sig, 1))
                        checked += 1
        assert checked >= 48

    def test_dominance_chain_f2(self):
        rng = random.Random(77)
        for _ in range(8):
            sigs = [
                Signature(tuple(rng.randrange(3) for _ in range(2)), 2)
                for _ in range(2)
            ]
            c = cr.random_crystal("AU", 3, 2, 2, sigs, rng, spread=1)
            N = cr.newton_polygon(c)
            H = cr.hodge_polygon(c)
            assert dominates(N, H)
            assert dominates(H, cr.pr_polygon(sigs, 2))

    def test_conjugation_invariance(self):
        rng = random.Random(5)
        for _ in range(6):
            sig = Signature((rng.randrange(3), rng.randrange(3)), 2)
            c = cr.random_crystal("C", 3, 1, 2, sig, rng, spread=1)
            assert cr.newton_polygon(cr.conjugate_crystal(c)) == cr.newton_polygon(c)
        sigs = [Signature((1,), 2), Signature((2,), 2)]
        c = cr.random_crystal("AU", 5, 2, 1, sigs, rng)
        assert cr.newton_polygon(cr.conjugate_crystal(c)) == cr.newton_polygon(c)

    def test_polarized_newton_symmetric(self):
        rng = random.Random(99)
        for p in (3, 5):
            for g in (1, 2):
                for _ in range(4):
                    c = cr.random_polarized_crystal(p, 2, g, rng)
                    assert is_symmetric(cr.newton_polygon(c))

    def test_deterministic(self):
        a = cr.random_crystal("AL", 3, 1, 2, Signature((1, 1), 2), random.Random(4))
        b = cr.random_crystal("AL", 3, 1, 2, Signature((1, 1), 2), random.Random(4))
        assert a.F == b.F and a.V == b.V


class TestPairing:
    def test_polarized_construction_validates(self):
        rng = random.Random(21)
        c = cr.random_polarized_crystal(3, 2, 2, rng)
        assert c.pairing is not None
        assert cr.validate_hermitian(c)

    def test_adjunction_failure_detected(self):
        R_gram = cr.standard_symplectic_gram
        c = cr.make_crystal("C", 5, 1, 1, [[[1, 0], [0, 1]]], [[[5, 0], [0, 5]]])
        G = R_gram(c.ring, 1)
        assert not cr.validate_hermitian(c, cr.HermitianPairing((G,)))

    def test_perfectness_failure_detected(self):
        rng = random.Random(8)
        c = cr.random_polarized_crystal(3, 1, 1, rng)
        R = c.ring
        J = cr.standard_symplectic_gram(R, 1)
        scaled = tuple(tuple(R.mul(R.pi, x) for x in row) for row in J)
        assert not cr.validate_hermitian(c, cr.HermitianPairing((scaled,)))
        with pytest.raises(PairingViolated):
            cr.make_crystal(
                "C", 3, 1, 1, [c.F[0]], [c.V[0]], m=c.m, pairing=[scaled]
            )

    def test_alternating_required_case_c(self):
        pi = ((0,), (1,))
        c = cr.make_crystal("C", 2, 1, 2, [[[pi, 0], [0, pi]]], [[[pi, 0], [0, pi]]], m=6)
        R = c.ring
        # with p = 2 a skew matrix may carry 2-torsion on the diagonal;
        # alternating is the strictly stronger condition that rules it out
        half = R.from_int(2 ** (c.m - 1))
        bad = ((half, R.one), (R.neg(R.one), half))
        good = ((R.zero, R.one), (R.neg(R.one), R.zero))
        assert not cr.validate_hermitian(c, cr.HermitianPairing((bad,)))
        assert cr.validate_hermitian(c, cr.HermitianPairing((good,)))

    def test_antihermitian_sign(self):
        c = cr.make_crystal("C", 5, 1, 1, [[[0, 5], [1, 0]]], [[[0, 5], [1, 0]]])
        sym = ((c.ring.zero, c.ring.one), (c.ring.one, c.ring.zero))
        assert not cr.validate_hermitian(c, cr.HermitianPairing((sym,)))

    def test_au_rank_one_example(self):
        c = cr.make_crystal(
            "AU", 3, 2, 1, [[[1]], [[-3]]], [[[3]], [[-1]]],
            pairing=[[[1]], [[-1]]],
        )
        assert cr.validate_hermitian(c)
        P = cr.newton_polygon(c)
        assert P == polygon_from_slopes([(Fraction(1, 2), 1)], e=2)
        assert is_symmetric(P)

    def test_trace_gram_round_trip(self):
        rng = random.Random(31)
        for (p, e, g) in ((5, 2, 1), (3, 2, 2), (3, 3, 1)):
            c = cr.random_polarized_crystal(p, e, g, rng)
            tg = cr.pairing_trace_gram(c)
            back = cr.pairing_from_trace_gram(c, tg)
            assert back.grams == c.pairing.grams
            assert cr.validate_hermitian(c, trace_grams=tg)

    def test_trace_gram_distinguishes_pairings(self):
        rng = random.Random(32)
        c = cr.random_polarized_crystal(3, 2, 1, rng)
        R = c.ring
        G = c.pairing.grams[0]
        other = tuple(
            tuple(R.add(x, R.one) if i != j else x for j, x in enumerate(row))
            for i, row in enumerate(G)
        )
        t1 = cr.pairing_trace_gram(c)
        t2 = cr.pairing_trace_gram(c, cr.HermitianPairing((other,)))
        assert t1 != t2

    def test_inconsistent_trace_data_rejected(self):
        rng = random.Random(33)
        c = cr.random_polarized_crystal(3, 2, 1, rng)
        tg = [list(map(list, T)) for T in cr.pairing_trace_gram(c)]
        # tamper a column outside the b = 0 solving block
        tg[0][0][1] = c.ring.W.add(tg[0][0][1], c.ring.W.one)
        with pytest.raises(ValidationError):
            cr.pairing_from_trace_gram(c, tg)


class TestNNP:
    def test_parallel_pi_crystal(self):
        rng = random.Random(41)
        c = cr.random_polarized_crystal(3, 2, 1, rng, profile=[1])
        n = cr.normalize_nnp(c)
        assert n.amplitudes == (1,)
        prof = cr.smith_profile(c.ring, cr._mut(n.crystal.F[0]))
        assert prof[-1] == 0

    def test_round_trip(self):
        rng = random.Random(42)
        for profile in ([0], [1], [2]):
            c = cr.random_polarized_crystal(5, 2, 1, rng, profile=profile)
            n = cr.normalize_nnp(c)
            back = cr.restore_nnp(n)
            R = c.ring
            assert cr._mats_close(R, back.F[0], c.F[0], c.m - 1)
            assert cr._mats_close(R, back.V[0], c.V[0], c.m - 1)

    def test_au_amplitudes(self):
        c = cr.make_crystal("AU", 3, 2, 1, [[[1]], [[-3]]], [[[3]], [[-1]]])
        n = cr.normalize_nnp(c)
        assert n.amplitudes == (0, 1)
        one = c.ring.one
        assert n.crystal.F[0][0][0] == one
        assert n.crystal.V[0][0][0] == one

    def test_al_unsupported(self):
        with pytest.raises(UnsupportedCase):
            cr.normalize_nnp(_supersingular(3))

    def test_not_divisible_when_amplitudes_overflow(self):
        c = cr.make_crystal("C", 3, 1, 1, [[[3]]], [[[1]]])
        with pytest.raises(NotDivisible):
            cr.normalize_nnp(c)

    def test_complementary_amplitudes_give_mu_ordinary(self):
        # a + abar = e forces Newton = PR (the mu-ordinarity criterion).
        rng = random.Random(43)
        c = cr.random_polarized_crystal(3, 2, 1, rng, profile=[1])
        sig = Signature((2, 0), 2)
        assert cr.is_mu_ordinary(c, sig)
        f2 = cr.make_crystal("AU", 3, 2, 1, [[[1]], [[-3]]], [[[3]], [[-1]]])
        sigs = [Signature((1,), 1), Signature((0,), 1)]
        assert cr.is_mu_ordinary(f2, sigs)


class TestOrdinary:
    def test_mu_ordinary_examples(self):
        sig = Signature((1,), 2)
        assert cr.is_mu_ordinary(_ordinary2(5), sig)
        assert not cr.is_mu_ordinary(_supersingular(5), sig)

    def test_ordinary_possible_basic(self):
        assert cr.ordinary_possible(Signature((1, 1), 2))
        assert not cr.ordinary_possible(Signature((2, 1), 3))
        assert cr.ordinary_possible([Signature((2, 2), 3), Signature((2, 2), 3)])
        assert not cr.ordinary_possible([Signature((1,), 2), Signature((2,), 2)])

    def test_ordinary_possible_iff_pr_slopes_01(self):
        rng = random.Random(51)
        for _ in range(300):
            e = rng.randrange(1, 4)
            h = rng.randrange(1, 5)
            f = rng.choice((1, 2))
            sigs = [
                Signature(tuple(rng.randrange(h + 1) for _ in range(e)), h)
                for _ in range(f)
            ]
            P = cr.pr_polygon(sigs, f)
            only01 = all(s in (0, 1) for s, _ in P.slopes)
            assert cr.ordinary_possible(sigs) == only01


class TestSlopeSplit:
    def test_ordinary(self):
        assert cr.slope_split(_ordinary2(3)) == (1, 0, 1)
        c = cr.make_crystal(
            "AL", 3, 1, 1,
            [[[1, 0, 0], [0, 1, 0], [0, 0, 3]]],
            [[[3, 0, 0], [0, 3, 0], [0, 0, 1]]],
        )
        assert cr.slope_split(c) == (2, 0, 1)

    def test_supersingular(self):
        assert cr.slope_split(_supersingular(3)) == (0, 2, 0)

    def test_mixed(self):
        F = [
            [1, 0, 0, 0],
            [0, 3, 0, 0],
            [0, 0, 0, 3],
            [0, 0, 1, 0],
        ]
        V = [
            [3, 0, 0, 0],
            [0, 1, 0, 0],
            [0, 0, 0, 3],
            [0, 0, 1, 0],
        ]
        c = cr.make_crystal("AL", 3, 1, 1, [F], [V])
        assert cr.slope_split(c) == (1, 2, 1)


class TestJson:
    def test_round_trip(self):
        rng = random.Random(61)
        c = cr.random_polarized_crystal(3, 2, 1, rng)
        obj = json.loads(json.dumps(cr.crystal_to_json_obj(c), sort_keys=True))
        c2 = cr.crystal_from_json_obj(obj)
        assert c2.F == c.F and c2.V == c.V
        assert c2.pairing.grams == c.pairing.grams

    def test_serialization_deterministic(self):
        c = _supersingular(3)
        a = json.dumps(cr.crystal_to_json_obj(c), sort_keys=True)
        b = json.dumps(cr.crystal_to_json_obj(_supersingular(3)), sort_keys=True)
        assert a == b
