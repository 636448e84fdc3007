"""Tests for the filtered-module layer: validation, duality, profiles, scans."""

import random

import pytest

import prlocus.prdata as pd
from prlocus.errors import (
    AlreadyMinimal,
    BudgetExceeded,
    UnsupportedCase,
    ValidationError,
)
from prlocus.polygons import (
    Signature,
    hodge_from_profile,
    pr_from_signature,
)
from prlocus.prdata.core import hl_isotropy_check
from prlocus.prdata.counterexample import reference_points
from prlocus.rings import GF, PolyMatrix, gaussian_binomial
from prlocus.rings.gf import mat_inv, mat_mul


def _colmat(P, n, cols):
    """Columns of the n x n identity selected by index."""
    vecs = [[P.const(1 if i == j else 0) for i in range(n)] for j in cols]
    return PolyMatrix.from_cols(P, vecs, n)


def _torsion_module(K, e, h, d):
    """Fully pi-torsion datum: omega spanned by pi^(e-1) e_1..e_{sum d}."""
    P, pi = pd.standard_ambient(K, e, h)
    chain = [PolyMatrix.from_cols(P, [], e * h)]
    total = 0
    for d_j in d:
        total += d_j
        chain.append(_colmat(P, e * h, range(total)))
    return pd.FilteredModule(K, pi, chain, Signature(tuple(d), h))


def _free_module(K, e, h, r):
    """omega free of rank r: generated by the last-block vectors e_1..e_r."""
    P, pi = pd.standard_ambient(K, e, h)
    n = e * h
    chain = [PolyMatrix.from_cols(P, [], n)]
    for j in range(1, e + 1):
        # N^[j] = pi^(e-j) omega occupies the low blocks 0..j-1
        cols = [blk * h + i for blk in range(j) for i in range(r)]
        chain.append(_colmat(P, n, sorted(cols)))
    return pd.FilteredModule(K, pi, chain, Signature((r,) * e, h))


def _all_signatures(e, h):
    def rec(j):
        if j == e:
            yield ()
            return
        for d in range(h + 1):
            for rest in rec(j + 1):
                yield (d,) + rest

    return [Signature(s, h) for s in rec(0)]


class TestValidate:
    def test_accepts_torsion_and_free(self):
        K = GF(3, 1)
        assert pd.validate_pr(_torsion_module(K, 2, 2, (1, 1))) == []
        assert pd.validate_pr(_free_module(K, 2, 3, 2)) == []

    def test_flags_rank_mismatch(self):
        K = GF(3, 1)
        F = _torsion_module(K, 2, 2, (1, 1))
        F.signature = Signature((2, 0), 2)
        out = pd.validate_pr(F)
        assert any("expected" in v for v in out)

    def test_flags_escaping_pi_image(self):
        K = GF(2, 1)
        P, pi = pd.standard_ambient(K, 2, 2)
        # N^[1] = <e_1> is not pi-torsion
        chain = [
            PolyMatrix.from_cols(P, [], 4),
            _colmat(P, 4, [2]),
            _colmat(P, 4, [2, 0]),
        ]
        F = pd.FilteredModule(K, pi, chain, Signature((1, 1), 2))
        out = pd.validate_pr(F)
        assert any("vanish" in v for v in out)

    def test_flags_broken_containment(self):
        K = GF(2, 1)
        P, pi = pd.standard_ambient(K, 2, 2)
        chain = [
            PolyMatrix.from_cols(P, [], 4),
            _colmat(P, 4, [0]),
            _colmat(P, 4, [1, 2]),
        ]
        F = pd.FilteredModule(K, pi, chain, Signature((1, 1), 2))
        out = pd.validate_pr(F)
        assert any("contained" in v for v in out)


class TestDuality:
    def test_rank_ladder_example_f3(self):
        # e = 2, h = 2, d = (1, 1) over F_3: full chain ranks 0..4
        K = GF(3, 1)
        F = _torsion_module(K, 2, 2, (1, 1))
        full = pd.extend_duality(F)
        assert [N.ncols for N in full] == [0, 1, 2, 3, 4]

    @pytest.mark.parametrize("q", [2, 3])
    @pytest.mark.parametrize(
        "e,h",
        [(1, 1), (1, 2), (1, 3), (2, 1), (2, 2), (3, 1)],
    )
    def test_rank_formula_exhaustive(self, q, e, h):
        for sig in _all_signatures(e, h):
            for F in pd.enumerate_pr(q, e, 1, h, sig):
                assert pd.validate_pr(F) == []
                full = pd.extend_duality(F)
                assert len(full) == 2 * e + 1
                for j in range(1, e + 1):
                    want = j * h + sum(sig.d[: e - j])
                    assert full[e + j].ncols == want

    def test_rank_formula_spot_larger(self):
        for q, e, h, d in [(2, 2, 3, (2, 1)), (2, 3, 2, (1, 1, 0))]:
            for F in pd.enumerate_pr(q, e, 1, h, Signature(d, h)):
                full = pd.extend_duality(F)
                assert full[2 * e].ncols == e * h

    def test_dual_signature_involution(self):
        # the module-level quotient is not re-dualizable (its omega is the
        # whole quotient), so the involution is checked on signatures
        for e, h, d in [(2, 2, (1, 1)), (2, 2, (2, 0)), (2, 2, (2, 1))]:
            for F in pd.enumerate_pr(3, e, 1, h, Signature(d, h), budget=10**6):
                dual = pd.dual_datum(F)
                assert pd.validate_pr(dual) == []
                assert dual.signature.d == tuple(
                    h - x for x in reversed(d)
                )
                again = tuple(h - x for x in reversed(dual.signature.d))
                assert again == tuple(d)
                assert tuple(reversed(dual.labels)) == F.labels
                break  # one point per signature keeps this quick

    def test_dual_needs_field_base(self):
        K = GF(3, 1)
        F = _torsion_module(K, 2, 2, (1, 1))
        out = pd.e2_deformation_step(F)
        with pytest.raises(UnsupportedCase):
            pd.dual_datum(out)


class TestPairing:
    @staticmethod
    def _isotropy_route(PF):
        """Independent route: rank bookkeeping plus h_l-isotropy at each l."""
        F = PF.fm
        full = pd.extend_duality(F)
        n = F.ambient_rank
        dims_ok = all(
            full[2 * F.e - ell].ncols == n - full[ell].ncols
            for ell in range(F.e + 1)
        )
        return dims_ok and all(
            hl_isotropy_check(PF, ell) for ell in range(F.e + 1)
        )

    def test_two_routes_agree_h4(self):
        import itertools

        sig = Signature((2, 2), 4)
        gram = pd.case_c_gram(GF(2, 1), 2, 4)
        seen = {True: 0, False: 0}
        stream = pd.enumerate_pr(2, 2, 1, 4, sig, budget=10**7)
        for F in itertools.islice(stream, 200):
            PF = pd.PairedFilteredModule(F, gram)
            route_a = pd.check_pairing_compat(PF)
            assert route_a == self._isotropy_route(PF)
            seen[route_a] += 1
        assert seen[True] > 0 and seen[False] > 0

    @pytest.mark.parametrize("q", [2, 3])
    def test_d11_h2_always_compatible(self, q):
        # pi omega inside omega^[1] forces isotropy at this signature, so
        # every enumerated point must be compatible
        sig = Signature((1, 1), 2)
        gram = pd.case_c_gram(GF(q, 1), 2, 2)
        for F in pd.enumerate_pr(q, 2, 1, 2, sig):
            PF = pd.PairedFilteredModule(F, gram)
            assert pd.check_pairing_compat(PF)
            assert self._isotropy_route(PF)

    @pytest.mark.parametrize("q", [2, 3])
    def test_case_c_enumeration_is_the_filter(self, q):
        sig = Signature((1, 1), 2)
        gram = pd.case_c_gram(GF(q, 1), 2, 2)
        al = list(pd.enumerate_pr(q, 2, 1, 2, sig))
        c = list(pd.enumerate_pr(q, 2, 1, 2, sig, case="C"))
        kept = [
            F
            for F in al
            if pd.check_pairing_compat(pd.PairedFilteredModule(F, gram))
        ]
        assert len(c) == len(kept)


class TestProfiles:
    def test_free_and_torsion_profiles(self):
        K = GF(2, 1)
        F = _free_module(K, 3, 2, 2)
        assert pd.torsion_profile(F.pi, F.omega).parts == (3, 3)
        T = _torsion_module(K, 2, 3, (2, 0))
        assert pd.torsion_profile(T.pi, T.omega).parts == (1, 1)

    def test_profile_is_conjugate_of_jumps(self):
        K = GF(3, 1)
        P, pi = pd.standard_ambient(K, 3, 2)
        # mixed module: one length-3 cycle and one length-1 cycle
        cols = [4, 2, 0, 1]
        M = _colmat(P, 6, cols)
        prof = pd.torsion_profile(pi, M)
        jumps = pd.kernel_jump_profile(pi, M)
        assert prof.parts == (3, 1)
        assert jumps.parts == (2, 1, 1)

    def test_basis_change_invariance(self):
        K = GF(3, 1)
        P, pi = pd.standard_ambient(K, 3, 2)
        M = _colmat(P, 6, [4, 2, 0, 1])
        want = pd.torsion_profile(pi, M).parts
        rng = random.Random(20240817)
        r = M.ncols
        done = 0
        while done < 50:
            U = [[rng.randrange(3) for _ in range(r)] for _ in range(r)]
            try:
                mat_inv(K, U)
            except ZeroDivisionError:
                continue
            changed = M.mul(PolyMatrix.from_field(P, U))
            assert pd.torsion_profile(pi, changed).parts == want
            done += 1


class TestRapoport:
    def test_trivial_cases(self):
        K = GF(2, 1)
        assert pd.is_rapoport(_free_module(K, 2, 2, 1))
        assert not pd.is_rapoport(_torsion_module(K, 2, 2, (1, 1)))

    def test_polygon_equivalence_exhaustive_e2_h2_q2(self):
        for sig in _all_signatures(2, 2):
            for F in pd.enumerate_pr(2, 2, 1, 2, sig):
                prof = pd.torsion_profile(F.pi, F.omega)
                hodge = hodge_from_profile(prof, 2, h=2)
                prpoly = pr_from_signature(sig)
                assert pd.is_rapoport(F) == (hodge == prpoly)


class TestEnumerate:
    @pytest.mark.parametrize(
        "q,h,d", [(2, 3, 1), (2, 4, 2), (3, 3, 2), (4, 2, 1)]
    )
    def test_e1_gaussian_binomial(self, q, h, d):
        n = sum(1 for _ in pd.enumerate_pr(q, 1, 1, h, Signature((d,), h)))
        assert n == gaussian_binomial(h, d, q)

    def test_hand_count_e2_h1(self):
        # d = (1, 0): the only choice is N^[1] = N^[2] = <pi e_1>
        got = list(pd.enumerate_pr(2, 2, 1, 1, Signature((1, 0), 1)))
        assert len(got) == 1
        assert got[0].chain[1].ncols == 1

    def test_budget_guard(self):
        with pytest.raises(BudgetExceeded) as ei:
            list(pd.enumerate_pr(5, 1, 1, 4, Signature((2,), 4), budget=10))
        assert ei.value.bound > 10

    def test_equivariance_under_conjugation(self):
        K = GF(2, 1)
        P, pi = pd.standard_ambient(K, 2, 2)
        rng = random.Random(11)
        while True:
            A = [[rng.randrange(2) for _ in range(4)] for _ in range(4)]
            try:
                Ai = mat_inv(K, A)
                break
            except ZeroDivisionError:
                continue
        conj = PolyMatrix.from_field(
            P, mat_mul(K, mat_mul(K, A, pi.mod_t()), Ai)
        )
        sig = Signature((1, 1), 2)
        base = sum(1 for _ in pd.enumerate_pr(2, 2, 1, 2, sig))
        moved = sum(1 for _ in pd.enumerate_pr(2, 2, 1, 2, sig, pi=conj))
        assert base == moved == 9


class TestCounterexample:
    def test_reference_profiles(self):
        p1, p2 = reference_points(2)
        assert p1.jump_profile().parts == (4, 2)
        assert p2.jump_profile().parts == (3, 3)
        assert p1.is_square_zero() and p2.is_square_zero()

    def test_flag_lowering_validation(self):
        bad = [[0] * 6 for _ in range(6)]
        bad[3][2] = 1  # V_2 column landing outside V_1
        with pytest.raises(ValidationError):
            pd.NilpotentFlagPoint(2, (2, 4, 6), tuple(tuple(r) for r in bad))

    def test_scan_is_empty_q2(self):
        r = pd.counterexample_check(2, backend="numpy")
        assert r["constrained_count"] == 0
        assert r["scanned"] == 2**12
        assert r["profile_pi1"].parts == (4, 2)
        assert r["profile_pi2"].parts == (3, 3)

    def test_backends_agree_q2(self):
        a = pd.counterexample_check(2, backend="numpy")
        b = pd.counterexample_check(2, backend="numba")
        assert a["constrained_count"] == b["constrained_count"] == 0


class TestE2Step:
    def _specialize(self, out, c):
        P = out.P
        chain = [
            PolyMatrix.from_field(P, N.eval_at(c)) for N in out.chain
        ]
        return pd.FilteredModule(
            out.K, out.pi, chain, out.signature, labels=out.labels
        )

    def test_generic_profile_drop(self):
        K = GF(3, 1)
        F = _torsion_module(K, 2, 3, (2, 1))
        assert pd.kernel_jump_profile(F.pi, F.omega).padded(2) == (3, 0)
        out = pd.e2_deformation_step(F)
        generic = pd.kernel_jump_profile(out.pi, out.omega, generic=True)
        assert generic.padded(2) == (2, 1)
        special = pd.kernel_jump_profile(out.pi, out.omega)
        assert special.padded(2) == (3, 0)

    def test_special_fiber_is_fixed(self):
        K = GF(3, 1)
        F = _torsion_module(K, 2, 2, (1, 1))
        out = pd.e2_deformation_step(F)
        t0 = out.omega.mod_t()
        om = F.omega.mod_t()
        joint = [t0[i] + om[i] for i in range(4)]
        from prlocus.rings.gf import mat_rank

        assert mat_rank(K, joint) == 2

    def test_iteration_reaches_minimum(self):
        K = GF(3, 1)
        F = _torsion_module(K, 2, 4, (2, 2))
        steps = 0
        cur = F
        while True:
            try:
                out = pd.e2_deformation_step(cur)
            except AlreadyMinimal:
                break
            steps += 1
            assert steps < 10
            generic = pd.kernel_jump_profile(
                out.pi, out.omega, generic=True
            ).padded(2)
            nxt = None
            for c in range(1, 3):
                cand = self._specialize(out, c)
                prof = pd.kernel_jump_profile(cand.pi, cand.omega).padded(2)
                if prof == generic and pd.validate_pr(cand) == []:
                    nxt = cand
                    break
            assert nxt is not None
            cur = nxt
        # a_1 - d_1 = 4 - 2 steps for the all-torsion start
        assert steps == 2
        prof = pd.kernel_jump_profile(cur.pi, cur.omega).padded(2)
        assert prof == (2, 2)

    def test_already_minimal_and_ar(self):
        K = GF(3, 1)
        Fmin = _free_module(K, 2, 2, 1)
        with pytest.raises(AlreadyMinimal):
            pd.e2_deformation_step(Fmin)
        F = _torsion_module(K, 2, 2, (1, 1))
        with pytest.raises(UnsupportedCase):
            pd.e2_deformation_step(F, case="AR")

    def test_case_c_isotropy_at_every_truncation(self):
        K = GF(3, 1)
        F = _torsion_module(K, 2, 2, (1, 1))
        gram = pd.case_c_gram(K, 2, 2)
        out = pd.e2_deformation_step(F, case="C", gram=gram)
        generic = pd.kernel_jump_profile(out.pi, out.omega, generic=True)
        assert generic.padded(2) == (1, 1)
        for T in (1, 2, 3):
            M = out.omega.truncate(T)
            prod = M.transpose().mul(gram).mul(M).truncate(T)
            assert prod.is_zero()
