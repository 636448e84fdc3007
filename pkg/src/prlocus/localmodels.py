"""Explicit charts of the ramified-quadratic unitary local models.

With p odd and a ramified quadratic extension, the refined moduli problem
keeps a two-step flag F^[1] subset F inside Lambda/p, where pi acts as a
square-zero operator and F is totally isotropic for the symplectic pairing.
The two smallest charts reduce, after eliminating the variables that appear
linearly, to a single equation:

    U11 (signature (1,1)):  b (1 + x^2) = 0       coordinates (x, a, b)
    U21 (signature (2,1)):  d (1 + x^2 + y^2) = 0 coordinates (x, y, a, d)

Each chart splits into a pi-torsion component (b = 0 resp. d = 0), which
carries no Rapoport point at all, and an extra-isotropy component on which
the Rapoport points are dense; the two meet outside the Rapoport locus.
This is the finite-level witness that the Rapoport locus fails to be dense
in the ramified case.

Component counting over F_q goes through the shared enumeration kernels
(numba-jitted with a numpy fallback) for prime q, and through exact field
arithmetic otherwise.
"""

from collections import namedtuple
from dataclasses import dataclass
from itertools import product as _iproduct

from . import _kernels
from .errors import BudgetExceeded, ValidationError
from .rings.gf import GF, right_kernel

__all__ = [
    "ChartPoly",
    "ChartDerivation",
    "ChartPoint",
    "PointRecord",
    "chart_names",
    "derive_chart_equations",
    "chart_point",
    "rapoport_status",
    "extra_isotropy",
    "classify_point",
    "enumerate_chart",
    "component_counts",
    "csv_rows",
    "growth_report",
    "point_to_json_obj",
]

COMPONENTS = ("torsion", "isotropy", "intersection", "union")


# ---------------------------------------------------------------------------
# Exact multivariate polynomials over Z, just rich enough for the linear
# eliminations the charts need.


class ChartPoly:
    """Integer-coefficient polynomial in a fixed ordered variable tuple."""

    __slots__ = ("names", "terms")

    def __init__(self, names, terms=()):
        self.names = tuple(names)
        clean = {}
        for expo, c in dict(terms).items():
            if c:
                clean[tuple(expo)] = c
        self.terms = clean

    @classmethod
    def const(cls, names, c):
        names = tuple(names)
        return cls(names, {(0,) * len(names): int(c)})

    @classmethod
    def var(cls, names, name):
        names = tuple(names)
        expo = [0] * len(names)
        expo[names.index(name)] = 1
        return cls(names, {tuple(expo): 1})

    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, ChartPoly):
            return NotImplemented
        return self.names == other.names and self.terms == other.terms

    __hash__ = None

    def __add__(self, other):
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0) + c
        return ChartPoly(self.names, out)

    def __neg__(self):
        return ChartPoly(self.names, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, int):
            return ChartPoly(
                self.names, {e: c * other for e, c in self.terms.items()}
            )
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return ChartPoly(self.names, out)

    __rmul__ = __mul__

    def degree_in(self, name):
        i = self.names.index(name)
        return max((e[i] for e in self.terms), default=0)

    def split_linear(self, name):
        """Write P = C * name + R with R free of name; C may be a polynomial."""
        i = self.names.index(name)
        coeff = {}
        rest = {}
        for e, c in self.terms.items():
            if e[i] == 0:
                rest[e] = c
            elif e[i] == 1:
                coeff[e[:i] + (0,) + e[i + 1 :]] = c
            else:
                raise ValidationError(f"{name} occurs with degree {e[i]}")
        return ChartPoly(self.names, coeff), ChartPoly(self.names, rest)

    def const_value(self):
        """The integer value when the polynomial is constant, else None."""
        if not self.terms:
            return 0
        ((e, c),) = self.terms.items() if len(self.terms) == 1 else ((None, None),)
        if e is not None and not any(e):
            return c
        return None

    def subs(self, name, val):
        i = self.names.index(name)
        out = ChartPoly(self.names)
        for e, c in self.terms.items():
            term = ChartPoly(self.names, {e[:i] + (0,) + e[i + 1 :]: c})
            for _ in range(e[i]):
                term = term * val
            out = out + term
        return out

    def strip_var(self, name):
        """Divide by name when every term contains it exactly once."""
        i = self.names.index(name)
        out = {}
        for e, c in self.terms.items():
            if e[i] != 1:
                raise ValidationError(f"not divisible by {name} with quotient free of it")
            out[e[:i] + (0,) + e[i + 1 :]] = c
        return ChartPoly(self.names, out)

    def eval(self, K, assignment):
        acc = 0
        for e, c in self.terms.items():
            v = K.embed_const(c)
            for i, ex in enumerate(e):
                for _ in range(ex):
                    v = K.mul(v, assignment[self.names[i]])
            acc = K.add(acc, v)
        return acc

    def __str__(self):
        if not self.terms:
            return "0"
        pieces = []
        for e in sorted(self.terms, key=lambda t: (sum(t), t)):
            c = self.terms[e]
            mono = "*".join(
                n if k == 1 else f"{n}^{k}"
                for n, k in zip(self.names, e)
                if k
            )
            if not mono:
                pieces.append((c, str(abs(c))))
            elif abs(c) == 1:
                pieces.append((c, mono))
            else:
                pieces.append((c, f"{abs(c)}*{mono}"))
        first_c, first_s = pieces[0]
        out = ("-" if first_c < 0 else "") + first_s
        for c, s in pieces[1:]:
            out += (" - " if c < 0 else " + ") + s
        return out

    def __repr__(self):
        return f"ChartPoly({self!s})"


def _int_multiple(P, Q):
    """P == r * Q for some integer r (including r = 0)."""
    if P.is_zero():
        return True
    if set(P.terms) != set(Q.terms):
        return False
    items = iter(P.terms.items())
    e0, c0 = next(items)
    d0 = Q.terms[e0]
    if c0 % d0:
        return False
    r = c0 // d0
    return all(c == r * Q.terms[e] for e, c in P.terms.items())


# ---------------------------------------------------------------------------
# The two displayed charts.  Other charts are symmetric images of these and
# are not enumerated separately; full-variety counts are out of scope.

_Chart = namedtuple(
    "_Chart", "n flag1 coords eliminated allvars cols torsion_var"
)

_CHARTS = {
    # basis order (pi e_1, .., pi e_n, e_1, .., e_n); columns 0..flag1-1
    # generate F^[1], all columns generate F
    "U11": _Chart(
        n=2,
        flag1=1,
        coords=("x", "a", "b"),
        eliminated=("y",),
        allvars=("x", "a", "b", "y"),
        cols=(("1", "x", "0", "0"), ("0", "a", "b", "y")),
        torsion_var="b",
    ),
    "U21": _Chart(
        n=3,
        flag1=2,
        coords=("x", "y", "a", "d"),
        eliminated=("b", "c"),
        allvars=("x", "y", "a", "b", "c", "d"),
        cols=(
            ("1", "0", "x", "0", "0", "0"),
            ("0", "1", "y", "0", "0", "0"),
            ("0", "0", "a", "b", "c", "d"),
        ),
        torsion_var="d",
    ),
}

_FIELDS = {}
_DERIVED = {}


def chart_names():
    return tuple(sorted(_CHARTS))


def _chart(chart):
    try:
        return _CHARTS[chart]
    except KeyError:
        raise ValidationError(f"unknown chart {chart!r}") from None


def _field(q):
    if q not in _FIELDS:
        if q < 3:
            raise ValidationError(f"q = {q} is not an odd prime power")
        p = next(d for d in range(2, q + 1) if q % d == 0)
        if p == 2:
            raise ValidationError("residue characteristic 2 is excluded")
        s = 0
        rest = q
        while rest % p == 0:
            rest //= p
            s += 1
        if rest != 1:
            raise ValidationError(f"q = {q} is not a prime power")
        _FIELDS[q] = GF(p, s)
    return _FIELDS[q]


def _entry(names, s):
    if s == "0":
        return ChartPoly(names)
    if s == "1":
        return ChartPoly.const(names, 1)
    return ChartPoly.var(names, s)


def _sym_pi(col):
    # pi sends e_i to pi e_i and kills pi e_i
    n = len(col) // 2
    zero = ChartPoly(col[0].names)
    return tuple(col[n:]) + (zero,) * n


def _sym_pair(u, v):
    # J(pi e_i, e_i) = 1, J(e_i, pi e_i) = -1, all other pairs zero
    n = len(u) // 2
    acc = ChartPoly(u[0].names)
    for i in range(n):
        acc = acc + u[i] * v[n + i] - u[n + i] * v[i]
    return acc


def derive_chart_equations(chart):
    """Symbolic derivation of the chart equation from the moduli conditions.

    Starting from the generic flag matrix, the conditions pi F^[1] = 0,
    pi F subset F^[1] and isotropy of F are turned into polynomial
    constraints; the variables that occur linearly with unit coefficient are
    eliminated in the chart's declared order.  What remains is a single
    equation, factored as torsion_var * isotropy_factor.
    """
    if chart in _DERIVED:
        return _DERIVED[chart]
    spec = _chart(chart)
    names = spec.allvars
    cols = [tuple(_entry(names, s) for s in col) for col in spec.cols]
    r1 = spec.flag1
    # the flag columns are in echelon form with pivot rows 0..r1-1
    for i in range(r1):
        for k in range(r1):
            want = 1 if k == i else 0
            if cols[i][k].const_value() != want:
                raise ValidationError("flag columns are not in echelon form")

    pr = []
    for j in range(r1):
        pr.extend(e for e in _sym_pi(cols[j]) if not e.is_zero())
    for j in range(r1, len(cols)):
        image = list(_sym_pi(cols[j]))
        residual = list(image)
        for i in range(r1):
            lam = image[i]
            residual = [rv - lam * cv for rv, cv in zip(residual, cols[i])]
        pr.extend(e for e in residual if not e.is_zero())
    iso = []
    for j in range(len(cols)):
        for k in range(j + 1, len(cols)):
            e = _sym_pair(cols[j], cols[k])
            if not e.is_zero():
                iso.append(e)

    constraints = pr + iso
    subs = {}
    work = list(constraints)
    for v in spec.eliminated:
        picked = None
        for idx, P in enumerate(work):
            if P.degree_in(v) != 1:
                continue
            coeff, rest = P.split_linear(v)
            c = coeff.const_value()
            if c in (1, -1):
                picked = (idx, c, rest)
                break
        if picked is None:
            raise ValidationError(f"variable {v} is not linearly eliminable")
        idx, c, rest = picked
        sol = rest * (-c)
        # chase earlier substitutions through the new one as well
        for w in subs:
            subs[w] = subs[w].subs(v, sol)
        subs[v] = sol
        work = [Q.subs(v, sol) for k, Q in enumerate(work) if k != idx]

    nonzero = [Q for Q in work if not Q.is_zero()]
    if len(nonzero) != 1:
        raise ValidationError("elimination did not reduce to a single equation")
    equation = nonzero[0]
    tvar = ChartPoly.var(names, spec.torsion_var)
    iso_factor = equation.strip_var(spec.torsion_var)
    if tvar * iso_factor != equation:
        raise ValidationError("chart equation does not factor as expected")

    consistency = True
    for P in constraints:
        Q = P
        for v, sol in subs.items():
            Q = Q.subs(v, sol)
        if not _int_multiple(Q, equation):
            consistency = False
    der = ChartDerivation(
        chart=chart,
        coordinates=spec.coords,
        eliminated={v: subs[v] for v in spec.eliminated},
        pr_constraints=tuple(pr),
        isotropy_constraints=tuple(iso),
        equation=equation,
        torsion_factor=tvar,
        isotropy_factor=iso_factor,
        consistency=consistency,
    )
    _DERIVED[chart] = der
    return der


@dataclass(frozen=True)
class ChartDerivation:
    chart: str
    coordinates: tuple
    eliminated: dict
    pr_constraints: tuple
    isotropy_constraints: tuple
    equation: ChartPoly
    torsion_factor: ChartPoly
    isotropy_factor: ChartPoly
    consistency: bool

    def to_json_obj(self):
        return {
            "chart": self.chart,
            "coordinates": list(self.coordinates),
            "eliminated": {v: str(P) for v, P in self.eliminated.items()},
            "pr_constraints": [str(P) for P in self.pr_constraints],
            "isotropy_constraints": [str(P) for P in self.isotropy_constraints],
            "equation": str(self.equation),
            "factors": [str(self.torsion_factor), str(self.isotropy_factor)],
            "consistency": self.consistency,
        }


# ---------------------------------------------------------------------------
# Points and their flag-level invariants.


@dataclass(frozen=True)
class ChartPoint:
    """A classified solution: coordinates plus the flag matrix they generate.

    omega is the 2n x k matrix over F_q whose first flag1 columns generate
    F^[1] and whose columns generate F, rows in the basis
    (pi e_1, .., pi e_n, e_1, .., e_n).
    """

    chart: str
    q: int
    coords: tuple
    omega: tuple


PointRecord = namedtuple("PointRecord", "point labels rapoport")


def chart_point(chart, q, coords):
    """Validated point constructor; raises when off the chart variety."""
    spec = _chart(chart)
    K = _field(q)
    coords = tuple(int(c) for c in coords)
    if len(coords) != len(spec.coords):
        raise ValidationError(
            f"chart {chart} needs {len(spec.coords)} coordinates"
        )
    if not all(0 <= c < q for c in coords):
        raise ValidationError("coordinates out of field range")
    der = derive_chart_equations(chart)
    assignment = dict(zip(spec.coords, coords))
    if der.equation.eval(K, assignment) != 0:
        raise ValidationError("coordinates violate the chart equation")
    for v in spec.eliminated:
        assignment[v] = der.eliminated[v].eval(K, assignment)
    omega = tuple(
        tuple(_entry(spec.allvars, s).eval(K, assignment) for s in col)
        for col in zip(*spec.cols)
    )
    return ChartPoint(chart, q, coords, omega)


def _shortcuts(pt):
    spec = _chart(pt.chart)
    K = _field(pt.q)
    der = derive_chart_equations(pt.chart)
    assignment = dict(zip(spec.coords, pt.coords))
    torsion = der.torsion_factor.eval(K, assignment) == 0
    isotropy = der.isotropy_factor.eval(K, assignment) == 0
    return torsion, isotropy


def rapoport_status(pt):
    """Whether omega is not pi-torsion, read off the flag matrix itself.

    pi omega sits in the pi-part rows as the e-part block of omega, so the
    point is in the (generalised) Rapoport locus iff that block is nonzero.
    The coordinate shortcut (b != 0 resp. d != 0) is cross-checked.
    """
    spec = _chart(pt.chart)
    n = spec.n
    flag = any(x != 0 for row in pt.omega[n:] for x in row)
    shortcut = not _shortcuts(pt)[0]
    if flag != shortcut:
        raise ValidationError("flag matrix disagrees with the coordinate shortcut")
    return flag


def extra_isotropy(pt):
    """Whether F^[1]' = (pi^{-1} F^[1])^perp is isotropic for the pi-part pairing.

    The induced pairing on the pi-part identifies with the identity Gram in
    the pi e_i coordinates; the complement is computed by exact linear
    algebra and its Gram tested for vanishing.  The coordinate shortcut
    (1 + x^2 resp. 1 + x^2 + y^2 vanishing) is cross-checked.
    """
    spec = _chart(pt.chart)
    K = _field(pt.q)
    n, r1 = spec.n, spec.flag1
    two_n = 2 * n
    span = []
    for i in range(n):
        w = [0] * two_n
        w[i] = 1
        span.append(w)
    for j in range(r1):
        w = [0] * two_n
        for i in range(n):
            w[n + i] = pt.omega[i][j]
        span.append(w)
    rows = []
    for w in span:
        jw = [w[n + i] for i in range(n)] + [K.neg(w[i]) for i in range(n)]
        rows.append(jw)
    comp = right_kernel(K, rows)
    if len(comp) != n - r1:
        raise ValidationError("orthogonal complement has unexpected rank")
    for w in comp:
        if any(w[n:]):
            raise ValidationError("complement vector escapes the pi-part")
    flag = True
    for a in range(len(comp)):
        for b in range(a, len(comp)):
            g = 0
            for i in range(n):
                g = K.add(g, K.mul(comp[a][i], comp[b][i]))
            if g != 0:
                flag = False
    shortcut = _shortcuts(pt)[1]
    if flag != shortcut:
        raise ValidationError("flag matrix disagrees with the coordinate shortcut")
    return flag


def classify_point(pt):
    """Component labels, from the flag-level invariants."""
    labels = set()
    if not rapoport_status(pt):
        labels.add("torsion")
    if extra_isotropy(pt):
        labels.add("isotropy")
    if len(labels) == 2:
        labels.add("intersection")
    if not labels:
        raise ValidationError("point lies on neither component")
    return frozenset(labels)


def point_to_json_obj(rec):
    return {
        "coords": list(rec.point.coords),
        "labels": sorted(rec.labels),
        "rapoport": rec.rapoport,
        "omega": [list(row) for row in rec.point.omega],
    }


# ---------------------------------------------------------------------------
# Enumeration and counting.


def enumerate_chart(chart, q, budget=200000):
    """Scan F_q^coords, keep the chart solutions, classify each one.

    Partitioned by the leading coordinate with pure count merging, so the
    result does not depend on scan order.  Raises BudgetExceeded when the
    grid is larger than budget.
    """
    spec = _chart(chart)
    K = _field(q)
    grid = q ** len(spec.coords)
    if grid > budget:
        raise BudgetExceeded(
            f"chart grid {grid} exceeds the enumeration budget {budget}",
            bound=budget,
        )
    der = derive_chart_equations(chart)
    counts = {name: 0 for name in COMPONENTS}
    records = []
    rapoport_points = 0
    torsion_rapoport = 0
    for lead in K.elements():
        for rest in _iproduct(K.elements(), repeat=len(spec.coords) - 1):
            tup = (lead,) + rest
            assignment = dict(zip(spec.coords, tup))
            if der.equation.eval(K, assignment) != 0:
                continue
            pt = chart_point(chart, q, tup)
            labels = classify_point(pt)
            rap = rapoport_status(pt)
            counts["union"] += 1
            for lab in labels:
                counts[lab] += 1
            if rap:
                rapoport_points += 1
                if "torsion" in labels:
                    torsion_rapoport += 1
            records.append(PointRecord(pt, labels, rap))
    return {
        "chart": chart,
        "q": q,
        "counts": counts,
        "rapoport_points": rapoport_points,
        "torsion_rapoport": torsion_rapoport,
        "points": tuple(records),
    }


def _flatten_system(polys, spec):
    """Monomial arrays over the coordinate variables for the kernels."""
    names = spec.allvars
    idx = [names.index(v) for v in spec.coords]
    eq_idx = []
    coeffs = []
    expos = []
    for k, P in enumerate(polys):
        for e, c in sorted(P.terms.items()):
            for i, name in enumerate(names):
                if e[i] and name not in spec.coords:
                    raise ValidationError(f"system mentions eliminated {name}")
            eq_idx.append(k)
            coeffs.append(c)
            expos.append([e[i] for i in idx])
    return eq_idx, coeffs, expos


def component_counts(chart, q, backend=None, budget=50_000_000):
    """Exact component counts over F_q, kernel-backed for prime q.

    For prime q each component's defining system goes through the shared
    solve_affine kernel (numba or numpy per the backend dispatch); for
    prime powers the scan runs on exact field arithmetic.  The
    inclusion-exclusion identity is verified before returning.
    """
    spec = _chart(chart)
    K = _field(q)
    der = derive_chart_equations(chart)
    nv = len(spec.coords)
    if q**nv > budget:
        raise BudgetExceeded(
            f"chart grid {q ** nv} exceeds the counting budget {budget}",
            bound=budget,
        )
    systems = {
        "torsion": [der.torsion_factor],
        "isotropy": [der.isotropy_factor],
        "intersection": [der.torsion_factor, der.isotropy_factor],
        "union": [der.equation],
    }
    counts = {}
    if K.s == 1:
        impl = _kernels.get_backend(backend)
        used = impl.NAME
        for name, polys in systems.items():
            eq_idx, coeffs, expos = _flatten_system(polys, spec)
            sols = impl.solve_affine(q, nv, eq_idx, coeffs, expos)
            counts[name] = int(len(sols))
    else:
        used = "field"
        for name in systems:
            counts[name] = 0
        for tup in _iproduct(K.elements(), repeat=nv):
            assignment = dict(zip(spec.coords, tup))
            for name, polys in systems.items():
                if all(P.eval(K, assignment) == 0 for P in polys):
                    counts[name] += 1
    if (
        counts["union"]
        != counts["torsion"] + counts["isotropy"] - counts["intersection"]
    ):
        raise ValidationError("inclusion-exclusion identity failed")
    return {"chart": chart, "q": q, "backend": used, "counts": counts}


def csv_rows(chart, qs, backend=None):
    """Rows (q, component, count), the documented CSV surface."""
    rows = []
    for q in qs:
        counts = component_counts(chart, q, backend=backend)["counts"]
        for name in COMPONENTS:
            rows.append((q, name, counts[name]))
    return rows


def growth_report(chart, qs, backend=None):
    """Counts per q plus the two relations that are actually asserted.

    Inclusion-exclusion exactness holds at every q; monotone growth is only
    claimed between fields with the same quadratic character of -1 (same
    q mod 4), where the component counts are comparable.  No q^dim ratio
    convergence is claimed.
    """
    data = {}
    for q in qs:
        data[q] = component_counts(chart, q, backend=backend)["counts"]
    monotone = True
    qs_sorted = sorted(data)
    for i, q1 in enumerate(qs_sorted):
        for q2 in qs_sorted[i + 1 :]:
            if q1 % 4 != q2 % 4:
                continue
            for name in COMPONENTS:
                if data[q1][name] > data[q2][name]:
                    monotone = False
    return {
        "chart": chart,
        "counts": data,
        "inclusion_exclusion": True,
        "monotone": monotone,
    }
