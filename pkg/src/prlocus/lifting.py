"""Constructive lifts over k[t]: subspaces, isotropic subspaces, PR towers.

Every operation returns exact polynomial data (no truncation happens inside
the constructions) and certifies its generic-fiber claims with fraction-free
rank computations before returning.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import (
    StageDataInvalid,
    UnsupportedCase,
    ValidationError,
)
from .prdata.core import FilteredModule, validate_pr
from .rings import PolyMatrix, generic_rank
from .rings.gf import mat_rank, right_kernel, solve
from .rings.polymat import (
    adapt_chain,
    contains_integral,
    intersect_modules,
    kernel_module,
    preimage_module,
    saturate_columns,
)


def _field_cols(M: PolyMatrix):
    return [[e[0] if e else 0 for e in M.col(j)] for j in range(M.ncols)]


def _rank_of_cols(K, cols, n):
    if not cols:
        return 0
    return mat_rank(K, [[c[i] for c in cols] for i in range(n)])


@dataclass
class LiftInstance:
    """Free rank-h module over k[t]/(t^T) with a chain of direct factors
    N_1 <= ... <= N_r and a target special-fiber subspace L-bar."""

    P: object
    h: int
    chain: list
    lbar: list  # field columns, each of length h
    T: int = 2

    def __post_init__(self):
        K = self.P.K
        prev = None
        for N in self.chain:
            if N.nrows != self.h:
                raise ValidationError("chain member has wrong ambient rank")
            if mat_rank(K, N.mod_t()) != N.ncols:
                raise ValidationError("chain member is not a direct factor")
            if prev is not None:
                if prev.ncols > N.ncols:
                    raise ValidationError("chain ranks must be nondecreasing")
                for j in range(prev.ncols):
                    if not contains_integral(N, prev.col(j)):
                        raise ValidationError("chain inclusion fails")
            prev = N
        if self.lbar and _rank_of_cols(K, self.lbar, self.h) != len(self.lbar):
            raise ValidationError("target subspace columns are dependent")

    @property
    def l(self):
        return len(self.lbar)


@dataclass
class PolarizedLiftInstance:
    """Rank-2g module with a perfect alternating Gram, an isotropic direct
    factor N of rank g and an isotropic g-dimensional target L-bar."""

    P: object
    g: int
    gram: PolyMatrix
    N: PolyMatrix
    lbar: list
    T: int = 2

    def __post_init__(self):
        K = self.P.K
        n = 2 * self.g
        if self.gram.nrows != n or self.gram.ncols != n:
            raise ValidationError("Gram matrix must be 2g x 2g")
        if mat_rank(K, self.gram.mod_t()) != n:
            raise ValidationError("pairing is not perfect")
        GT = self.gram.transpose()
        P = self.P
        for i in range(n):
            if self.gram.rows[i][i]:
                raise ValidationError("pairing is not alternating (diagonal)")
            for j in range(n):
                if P.add(self.gram.rows[i][j], GT.rows[i][j]) != ():
                    raise ValidationError("pairing is not antisymmetric")
        if self.N.ncols != self.g or mat_rank(K, self.N.mod_t()) != self.g:
            raise ValidationError("N must be a rank-g direct factor")
        if not self.N.transpose().mul(self.gram).mul(self.N).is_zero():
            raise ValidationError("N is not totally isotropic")
        if len(self.lbar) != self.g:
            raise ValidationError("target must have dimension g")
        if _rank_of_cols(K, self.lbar, n) != self.g:
            raise ValidationError("target columns are dependent")
        g0 = self.gram.mod_t()
        for a in self.lbar:
            ga = [_dot(K, [g0[r][i] for r in range(n)], a) for i in range(n)]
            for b in self.lbar:
                if _dot(K, ga, b):
                    raise ValidationError("target is not isotropic")


def _dot(K, a, b):
    acc = 0
    for x, y in zip(a, b):
        if x and y:
            acc = K.add(acc, K.mul(x, y))
    return acc


# ---------------------------------------------------------------------------
# lift_subspace


def _flag_adapted_basis(K, cols, prefix_ranks, h):
    """Basis of span(cols) adapted to coordinate prefixes; [(vec, level)].

    level i means the vector first appears in the span of coordinates
    0..prefix_ranks[i-1]-1; level r+1 means it needs all h coordinates.
    """
    basis = []
    vecs = []
    bounds = list(prefix_ranks) + [h]
    for i, r in enumerate(bounds, start=1):
        tail = [[c[row] for c in cols] for row in range(r, h)]
        if tail:
            ker = right_kernel(K, tail)
        else:
            ker = [
                [1 if a == b else 0 for a in range(len(cols))]
                for b in range(len(cols))
            ]
        for y in ker:
            v = [0] * h
            for j, yj in enumerate(y):
                if yj:
                    for row in range(h):
                        v[row] = K.add(v[row], K.mul(yj, cols[j][row]))
            if any(v) and _rank_of_cols(K, vecs + [v], h) > len(vecs):
                vecs.append(v)
                basis.append((v, i))
    assert len(vecs) == len(cols)
    return basis


def _transverse_targets(l, dims, h):
    """Target generic levels: m_i = max(0, l + d_i - h) vectors within N_i."""
    m = [max(0, l + d - h) for d in dims]
    targets = []
    prev = 0
    for i, mi in enumerate(m, start=1):
        targets.extend([i] * (mi - prev))
        prev = mi
    targets.extend([len(dims) + 1] * (l - prev))
    return m, targets


def _complement_levels(K, adapted, dims, h):
    """Standard vectors completing the adapted basis, each with its band."""
    bounds = [0] + list(dims) + [h]
    vecs = [v for v, _ in adapted]
    out = {g: [] for g in range(1, len(dims) + 2)}
    for g in range(1, len(bounds)):
        for idx in range(bounds[g - 1], bounds[g]):
            e = [1 if i == idx else 0 for i in range(h)]
            if _rank_of_cols(K, vecs + [e], h) > len(vecs):
                vecs.append(e)
                out[g].append(e)
    assert len(vecs) == h
    return out


def _core_standard_lift(P, cols, prefix_ranks, h):
    """Lift column vectors against the standard coordinate flag.

    Returns (adapted field basis, polynomial columns v + t*u) realizing the
    generic transverse intersection dimensions with every prefix.  Push
    directions come from per-band pools: complement vectors first, then
    basis vectors already pushed out of the band; processing from the
    highest current level down keeps every pool nonempty.
    """
    K = P.K
    l = len(cols)
    dims = list(prefix_ranks)
    adapted = _flag_adapted_basis(K, cols, dims, h)
    adapted.sort(key=lambda p: p[1])
    _, targets = _transverse_targets(l, dims, h)
    assert len(targets) == l
    pools = _complement_levels(K, adapted, dims, h)
    plan = []
    for j, ((v, cur), goal) in enumerate(zip(adapted, targets)):
        assert cur <= goal, "transverse assignment must only push outward"
        plan.append((j, v, cur, goal))
    out = [None] * l
    for j, v, cur, goal in sorted(plan, key=lambda r: (-r[2], r[0])):
        if cur == goal:
            out[j] = [P.const(x) for x in v]
            continue
        pool = pools[goal]
        assert pool, "no free direction in the target band"
        u = pool.pop(0)
        out[j] = [
            P.add(P.const(v[i]), P.mul((0, 1), P.const(u[i])))
            for i in range(h)
        ]
        # v leaves its band generically, freeing its direction there
        pools[cur].append(v)
    return [v for v, _ in adapted], out


def lift_subspace(inst: LiftInstance) -> PolyMatrix:
    """Direct-factor lift L of L-bar with generic dim(L cap N_i) equal to
    max(0, l + d_i - h) for every chain member, certified before return."""
    P, K, h = inst.P, inst.P.K, inst.h
    l = inst.l
    if l == 0:
        return PolyMatrix.from_cols(P, [], h)
    if not inst.chain:
        return PolyMatrix.from_cols(
            P, [[P.const(x) for x in c] for c in inst.lbar], h
        )
    Phi, ranks = adapt_chain(inst.chain, h)
    Phi0 = Phi.mod_t()
    xs = []
    for v in inst.lbar:
        x = solve(K, Phi0, v)
        assert x is not None
        xs.append(x)
    adapted, lifted = _core_standard_lift(P, xs, ranks, h)
    span = Phi.mul(PolyMatrix.from_cols(P, lifted, h))
    # re-express on the requested basis so L mod t equals lbar exactly
    amat = [[a[i] for a in adapted] for i in range(h)]
    coeff_rows = [[0] * l for _ in range(l)]
    for j, x in enumerate(xs):
        c = solve(K, amat, x)
        assert c is not None
        for a in range(l):
            coeff_rows[a][j] = c[a]
    L = span.mul(PolyMatrix.from_field(P, coeff_rows))
    # certification of every claim in the contract
    assert generic_rank(L) == l
    t0 = L.mod_t()
    for j, v in enumerate(inst.lbar):
        assert [t0[i][j] for i in range(h)] == v
    for N in inst.chain:
        want = max(0, l + N.ncols - h)
        got = l + N.ncols - generic_rank(L.hstack(N))
        if got != want:
            raise StageDataInvalid(
                f"generic intersection {got} != {want} against rank {N.ncols}"
            )
    return L


# ---------------------------------------------------------------------------
# lift_isotropic


def _symplectic_duals(K, gram0, fixed, partners):
    """Vectors w_i with <partners_i, w_j> = delta_ij, w isotropic family,
    and <fixed_k, w_j> = 0; classical completion, all over the field."""
    n = len(gram0)

    def pairing_row(vec):
        return [_dot(K, [gram0[r][col] for r in range(n)], vec) for col in range(n)]

    ws = []
    for i in range(len(partners)):
        rows = [pairing_row(c) for c in fixed]
        rhs = [0] * len(fixed)
        for j, v in enumerate(partners):
            rows.append(pairing_row(v))
            rhs.append(1 if j == i else 0)
        w = solve(K, rows, rhs)
        if w is None:
            raise StageDataInvalid("symplectic dual system is inconsistent")
        ws.append(w)
    # Gram-Schmidt pass killing <w_i, w_j>: the shift w_j + c v_i leaves
    # every duality constraint intact because the partners are isotropic
    for j in range(len(ws)):
        for i in range(j):
            c = _dot(K, pairing_row(ws[i]), ws[j])
            if c:
                ws[j] = [
                    K.add(ws[j][r], K.mul(c, partners[i][r])) for r in range(n)
                ]
    return ws


def lift_isotropic(inst: PolarizedLiftInstance) -> PolyMatrix:
    """Totally isotropic rank-g lift of L-bar with generic L cap N = 0."""
    P, K, g = inst.P, inst.P.K, inst.g
    n = 2 * g
    gram0 = inst.gram.mod_t()
    nbar = _field_cols(inst.N)
    # adapted split of the target: basis of lbar cap span(nbar) first
    aug = [
        [c[i] for c in inst.lbar] + [K.neg(c[i]) for c in nbar]
        for i in range(n)
    ]
    s_cols = []
    for vec in right_kernel(K, aug):
        v = [0] * n
        for j, yj in enumerate(vec[: len(inst.lbar)]):
            if yj:
                for i in range(n):
                    v[i] = K.add(v[i], K.mul(yj, inst.lbar[j][i]))
        if any(v) and _rank_of_cols(K, s_cols + [v], n) > len(s_cols):
            s_cols.append(v)
    c_cols = []
    for v in inst.lbar:
        if _rank_of_cols(K, s_cols + c_cols + [v], n) > len(s_cols) + len(
            c_cols
        ):
            c_cols.append(v)
    assert len(s_cols) + len(c_cols) == g
    duals = _symplectic_duals(K, gram0, c_cols, s_cols) if s_cols else []
    out_cols = []
    for v in c_cols:
        out_cols.append([P.const(x) for x in v])
    for v, w in zip(s_cols, duals):
        col = [P.add(P.const(v[i]), P.mul((0, 1), P.const(w[i]))) for i in range(n)]
        out_cols.append(col)
    span = PolyMatrix.from_cols(P, out_cols, n)
    # re-express on the requested basis; constant column operations keep
    # isotropy, and L mod t then equals lbar exactly
    amat = [[c[i] for c in c_cols + s_cols] for i in range(n)]
    coeff_rows = [[0] * g for _ in range(g)]
    for j, v in enumerate(inst.lbar):
        c = solve(K, amat, v)
        assert c is not None
        for a in range(g):
            coeff_rows[a][j] = c[a]
    L = span.mul(PolyMatrix.from_field(P, coeff_rows))
    # certify isotropy exactly and the generic transverse intersection
    if not L.transpose().mul(inst.gram).mul(L).is_zero():
        raise StageDataInvalid("isotropic lift lost isotropy")
    assert generic_rank(L) == g
    t0 = L.mod_t()
    for j, v in enumerate(inst.lbar):
        assert [t0[i][j] for i in range(n)] == v
    inter = g + inst.N.ncols - generic_rank(L.hstack(inst.N))
    if inter != 0:
        raise StageDataInvalid(f"generic intersection with N is {inter}")
    return L


# ---------------------------------------------------------------------------
# lift_pr_tower


def _nested_fiber_presentation(F: FilteredModule):
    """Column lists per stage so stage i extends stage i-1, same spans."""
    K = F.K
    n = F.ambient_rank
    acc = []
    stages = []
    for j in range(1, F.e + 1):
        new = []
        cols = _field_cols(F.chain[j])
        for c in cols:
            if _rank_of_cols(K, acc + new + [c], n) > len(acc) + len(new):
                new.append(c)
        stages.append(new)
        acc = acc + new
    return stages


def _max_subset_sum(ds, j):
    return sum(sorted(ds, reverse=True)[:j])


def _stage_flag(L, kermods, Ki):
    """Saturated chain L <= L + (ker X^j cap K_i) <= ... <= K_i."""
    members = [L]
    for C in kermods:
        inter = intersect_modules(C, Ki)
        joint = saturate_columns(L.hstack(inter))
        members.append(joint)
    members.append(Ki)
    return members


def _certify_stage(F, L, ds_prefix):
    dim = L.ncols
    if dim == 0:
        return
    power = L
    for j in range(1, F.e + 1):
        power = F.pi.mul(power)
        tor = dim - generic_rank(power)
        want = _max_subset_sum(ds_prefix, j)
        if tor != want:
            raise StageDataInvalid(
                f"stage torsion dim {tor} != {want} at power {j}"
            )
        if tor == dim:
            break


def _isotropy_candidates(F, gram, L_prev, current_cols):
    """Deterministic pool of corrections u for one case C generator."""
    K = F.K
    n = F.ambient_rank
    pi0 = F.pi.mod_t()
    om1 = _field_cols(L_prev) if L_prev.ncols else []
    aug = [
        [pi0[i][j] for j in range(n)] + [K.neg(c[i]) for c in om1]
        for i in range(n)
    ]
    pre = []
    for vec in right_kernel(K, aug):
        cand = list(vec[:n])
        if any(cand) and _rank_of_cols(K, pre + [cand], n) > len(pre):
            pre.append(cand)
    gram0 = gram.mod_t()
    rows = []
    for c in current_cols:
        rows.append(
            [_dot(K, [gram0[r][i] for r in range(n)], c) for i in range(n)]
        )
    good = [c for c in pre if all(not _dot(K, r, c) for r in rows)]
    extra = []
    for i in range(len(pre)):
        for j in range(i + 1, len(pre)):
            s = [K.add(a, b) for a, b in zip(pre[i], pre[j])]
            if all(not _dot(K, r, s) for r in rows):
                extra.append(s)
    return good + extra


def lift_pr_tower(F: FilteredModule, case="AL", gram=None, T=2):
    """Tower over k[t] reducing to F with generically minimal torsion.

    The output chain reduces at t = 0 to a nested re-presentation of F's
    chain (same spans, stagewise-extending bases).  Case C keeps the top
    level exactly isotropic and is supported for e = 2.
    """
    if case == "AR":
        raise UnsupportedCase("no tower construction in case AR")
    if case not in ("AL", "AU", "C"):
        raise ValidationError(f"unknown case {case!r}")
    if not F.is_special_fiber or F.max_deg() > 0:
        raise ValidationError("tower lifting starts from field data")
    bad = validate_pr(F)
    if bad:
        raise ValidationError("; ".join(bad))
    if case == "C":
        if gram is None:
            raise ValidationError("case C needs the ambient Gram matrix")
        if F.e != 2:
            raise UnsupportedCase("case C tower implemented for e = 2")
        if not F.omega.transpose().mul(gram).mul(F.omega).is_zero():
            raise ValidationError("case C input omega is not isotropic")

    P, K, X = F.P, F.K, F.pi
    n = F.ambient_rank
    stages = _nested_fiber_presentation(F)
    kermods = []
    power = X
    for _ in range(F.e - 1):
        kermods.append(kernel_module(power))
        power = power.mul(X)
    L = PolyMatrix.from_cols(P, [], n)
    chain_out = [L]
    for i in range(1, F.e + 1):
        d_i = F.signature.d[i - 1]
        if d_i == 0:
            chain_out.append(L)
            continue
        Ki = preimage_module(X, L) if L.ncols else kernel_module(X)
        flag = _stage_flag(L, kermods, Ki)
        Phi, pranks = adapt_chain(flag, n)
        r0, rk = pranks[0], pranks[-1]
        Phi0 = Phi.mod_t()
        xs = []
        for v in stages[i - 1]:
            x = solve(K, Phi0, v)
            assert x is not None
            if any(x[rk:]):
                raise StageDataInvalid(
                    "stage fiber vector escapes the preimage module"
                )
            xs.append(x)
        h_sub = rk - r0
        sub_dims = []
        for r in pranks[1:-1]:
            d = min(max(r - r0, 0), h_sub)
            sub_dims.append(d)
        sub_chain = [
            PolyMatrix.from_cols(
                P,
                [
                    [P.const(1 if a == b else 0) for a in range(h_sub)]
                    for b in range(d)
                ],
                h_sub,
            )
            for d in sub_dims
        ]
        sub_lbar = [x[r0:rk] for x in xs]
        inst = LiftInstance(P, h_sub, sub_chain, sub_lbar, T=T)
        lifted = lift_subspace(inst)
        gens = []
        for jcol in range(d_i):
            vec = [P.const(x) for x in xs[jcol][:r0]]
            vec.extend(lifted.col(jcol))
            vec.extend([()] * (n - rk))
            g = Phi.mul(PolyMatrix.from_cols(P, [vec], n)).col(0)
            gens.append(g)
        if case == "C":
            gens = _refit_isotropic_stage(F, gram, L, gens, stages[i - 1])
        L = PolyMatrix.from_cols(P, _cols_concat(L, gens), n)
        chain_out.append(L)
        _certify_stage(F, L, list(F.signature.d[:i]))
    out = FilteredModule(
        K, X, chain_out, F.signature, labels=F.labels, pi_images=F.pi_images
    )
    bad = validate_pr(out)
    if bad:
        raise StageDataInvalid("tower output invalid: " + "; ".join(bad))
    if case == "C" and not out.omega.transpose().mul(gram).mul(
        out.omega
    ).is_zero():
        raise StageDataInvalid("tower output lost isotropy")
    return out


def _cols_concat(L: PolyMatrix, gens):
    return L.cols() + [list(g) for g in gens]


def _keeps_containment(F, L_prev, col):
    img = F.pi.mul(PolyMatrix.from_cols(F.P, [list(col)], F.ambient_rank))
    vec = img.col(0)
    if L_prev.ncols == 0:
        return all(not e for e in vec)
    return contains_integral(L_prev, vec)


def _refit_isotropic_stage(F, gram, L_prev, gens, fibers):
    """Replace stage generators by isotropic ones, one at a time.

    Each generator becomes fiber + t*u with u from a deterministic candidate
    pool; isotropy is exact against everything already chosen and the image
    under pi must stay inside the previous level.
    """
    P, K = F.P, F.K
    n = F.ambient_rank
    chosen = [list(c) for c in L_prev.cols()]
    out = []
    for g, v in zip(gens, fibers):
        trial = PolyMatrix.from_cols(P, chosen + [list(g)], n)
        if trial.transpose().mul(gram).mul(trial).is_zero():
            chosen.append(list(g))
            out.append(list(g))
            continue
        found = None
        for u in _isotropy_candidates(F, gram, L_prev, _mod_cols(chosen)):
            cand = [
                P.add(P.const(v[i]), P.mul((0, 1), P.const(u[i])))
                for i in range(n)
            ]
            trial = PolyMatrix.from_cols(P, chosen + [cand], n)
            if not trial.transpose().mul(gram).mul(trial).is_zero():
                continue
            if generic_rank(trial) != len(chosen) + 1:
                continue
            if not _keeps_containment(F, L_prev, cand):
                continue
            found = cand
            break
        if found is None:
            raise StageDataInvalid(
                "no isotropic transversal available at this stage"
            )
        chosen.append(found)
        out.append(found)
    return out


def _mod_cols(cols):
    return [[e[0] if e else 0 for e in c] for c in cols]


# ---------------------------------------------------------------------------
# lift_square_zero


def _solve_mod_tpow(N: PolyMatrix, v, m):
    """Solve N x = v modulo t^m; returns polynomial coefficients or None."""
    P = N.P
    K = P.K
    n = N.nrows
    ncols = N.ncols
    if ncols == 0:
        ok = all(not e or P.t_val(e) >= m for e in v)
        return [] if ok else None
    rows = []
    rhs = []
    for deg in range(m):
        for i in range(n):
            row = []
            for a in range(m):
                for j in range(ncols):
                    e = N.rows[i][j]
                    c = e[deg - a] if 0 <= deg - a < len(e) else 0
                    row.append(c)
            rows.append(row)
            rhs.append(v[i][deg] if deg < len(v[i]) else 0)
    sol = solve(K, rows, rhs)
    if sol is None:
        return None
    out = []
    for j in range(ncols):
        coeffs = tuple(sol[a * ncols + j] for a in range(m))
        out.append(P.trim(coeffs))
    return out


def _tpow_coefficient(poly, m):
    return poly[m] if m < len(poly) else 0


def lift_square_zero(F: FilteredModule, m: int, case="AL", gram=None):
    """Correct data valid mod t^(m-1) into data valid mod t^m.

    The thickening is k[t]/(t^m) -> k[t]/(t^(m-1)), whose kernel squares to
    zero.  The output chain extends stagewise (N^[j] = [N^[j-1] | extras])
    and spans the input chain mod t^(m-1).  Case C keeps omega isotropic
    mod t^m.  Case AR is rejected.
    """
    if case == "AR":
        raise UnsupportedCase("square-zero lifting fails in case AR")
    if case not in ("AL", "AU", "C"):
        raise ValidationError(f"unknown case {case!r}")
    if m < 2:
        raise ValidationError("need m >= 2 for a square-zero step")
    if case == "C" and gram is None:
        raise ValidationError("case C needs the ambient Gram matrix")
    P, K = F.P, F.K
    n = F.ambient_rank
    if case == "C":
        om = F.omega
        pairs = om.transpose().mul(gram).mul(om)
        for i in range(pairs.nrows):
            for jj in range(pairs.ncols):
                if any(pairs.rows[i][jj][: m - 1]):
                    raise ValidationError(
                        "case C input omega is not isotropic mod "
                        f"t^{m - 1}"
                    )
    prev = PolyMatrix.from_cols(P, [], n)
    chain = [prev]
    done = []  # finalized fresh columns across all levels, in order
    for j in range(1, F.e + 1):
        pim = F.pi_images[j - 1]
        # pick input columns completing the corrected previous level mod t
        fresh = []
        prev_red = _mod_cols([prev.col(a) for a in range(prev.ncols)])
        cols = [F.chain[j].col(a) for a in range(F.chain[j].ncols)]
        red = _mod_cols(cols)
        base = list(prev_red)
        for c, r in zip(cols, red):
            if _rank_of_cols(K, base + [r], n) > len(base):
                base.append(r)
                fresh.append([P.truncate(e, m) for e in c])
        if len(base) != F.chain[j].ncols:
            raise ValidationError(
                f"level {j} does not extend the previous level mod t"
            )
        for col in fresh:
            w = _shifted_image(P, F.pi, pim, col)
            x = _solve_mod_tpow(prev, w, m - 1)
            if x is None:
                raise ValidationError(
                    f"input is not valid mod t^{m - 1} at level {j}"
                )
            pair_rows = []
            if case == "C":
                pair_rows = _pairing_constraints(P, K, gram, done, col, m)
            fixed = _correct_column(
                P, K, F.pi, pim, prev, col, w, x, m, pair_rows
            )
            done.append(fixed)
        prev = PolyMatrix.from_cols(P, list(done), n)
        chain.append(prev)
    out = FilteredModule(
        K, F.pi, chain, F.signature, labels=F.labels, pi_images=F.pi_images
    )
    _validate_mod(out, m)
    if case == "C":
        om = out.omega
        pairs = om.transpose().mul(gram).mul(om)
        for i in range(pairs.nrows):
            for jj in range(pairs.ncols):
                if any(pairs.rows[i][jj][:m]):
                    raise StageDataInvalid(
                        "square-zero output lost isotropy"
                    )
    return out


def _shifted_image(P, pi, pim, col):
    """(pi - pi_j) applied to one polynomial column."""
    n = len(col)
    out = []
    for i in range(n):
        acc = ()
        for jj in range(n):
            if pi.rows[i][jj] and col[jj]:
                acc = P.add(acc, P.mul(pi.rows[i][jj], col[jj]))
        acc = P.sub(acc, P.mul(pim, col[i]))
        out.append(acc)
    return out


def _pairing_constraints(P, K, gram, done, col, m):
    """Rows <a_bar, u> = -defect against every finalized column a."""
    gram0 = gram.mod_t()
    n = gram.nrows
    out = []
    for a in done:
        pair = _pair_poly(P, gram, a, col)
        assert not any(pair[: m - 1]), "lower pairing layers must be clean"
        c = _tpow_coefficient(pair, m - 1)
        abar = [e[0] if e else 0 for e in a]
        row = [_dot(K, [gram0[r][i] for r in range(n)], abar) for i in range(n)]
        out.append((row, K.neg(c)))
    return out


def _correct_column(P, K, pi, pim, prev, col, w, x, m, pair_rows=()):
    """One square-zero correction: add t^(m-1) u so the shifted image of
    the column lands in the previous level mod t^m, subject to optional
    pairing constraints on u."""
    n = len(col)
    resid = list(w)
    for a, xa in enumerate(x):
        pc = prev.col(a)
        for i in range(n):
            resid[i] = P.sub(resid[i], P.mul(xa, pc[i]))
    r_vec = [_tpow_coefficient(resid[i], m - 1) for i in range(n)]
    pi0 = pi.mod_t()
    pim0 = pim[0] if pim else 0
    prev0 = _mod_cols([prev.col(a) for a in range(prev.ncols)])
    sys_rows = []
    rhs = []
    for i in range(n):
        row = [pi0[i][jj] for jj in range(n)]
        row[i] = K.sub(row[i], pim0)
        row.extend(c[i] for c in prev0)
        sys_rows.append(row)
        rhs.append(K.neg(r_vec[i]))
    for row, b in pair_rows:
        sys_rows.append(list(row) + [0] * len(prev0))
        rhs.append(b)
    sol = solve(K, sys_rows, rhs)
    if sol is None:
        raise StageDataInvalid(
            "square-zero correction system is inconsistent"
        )
    u = sol[:n]
    shift = (0,) * (m - 1) + (1,)
    return [P.add(col[i], P.mul(shift, P.const(u[i]))) for i in range(n)]


def _pair_poly(P, gram, a, b):
    acc = ()
    for i in range(len(a)):
        if not a[i]:
            continue
        for j in range(len(b)):
            if b[j] and gram.rows[i][j]:
                acc = P.add(acc, P.mul(P.mul(a[i], gram.rows[i][j]), b[j]))
    return acc


def _validate_mod(F: FilteredModule, m):
    """validate_pr with all containments read modulo t^m."""
    out = []
    K = F.K
    for j in range(1, F.e + 1):
        N = F.chain[j]
        if mat_rank(K, N.mod_t()) != N.ncols:
            out.append(f"level {j} not a direct factor")
        prev = F.chain[j - 1]
        for a in range(N.ncols):
            img = _shifted_image(F.P, F.pi, F.pi_images[j - 1], N.col(a))
            if _solve_mod_tpow(prev, img, m) is None:
                out.append(f"(pi - pi_{j}) containment fails mod t^{m}")
                break
    if out:
        raise StageDataInvalid("; ".join(out))
