"""Command line interface.

Subcommands: polygon, enumerate, localmodel, deform, counterexample, lift.
Every run is a pure function of its resolved configuration, so repeating an
invocation with the same flags and config file yields byte-identical output.
Results go to --out or stdout as JSON (sorted keys) or CSV (fixed column
order); a run header records the library version, the command, the effective
parameters, and the p-adic precision when one is in play.

Exit codes: 0 success, 2 invalid input or arguments, 3 budget exhausted,
4 precision exhausted (after one retry at doubled precision), 5 unsupported
case.

CSV column layout per command:
  polygon         key,value
  enumerate       profile,rapoport,count   (profile parts joined by |)
  localmodel      q,component,count
  deform          step,special,generic,mu_ordinary  (polygons as s:m pairs
                  joined by |)
  counterexample  key,value                (tuple values joined by |)
  lift            row,col,poly             (coefficients joined by |, low
                  degree first)
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import random
import sys
from collections import namedtuple
from fractions import Fraction

from . import __version__, localmodels
from .crystals import crystal_from_json_obj, default_precision, make_crystal
from .deform import densify, trace_to_json_obj
from .errors import (
    BudgetExceeded,
    PrecisionExhausted,
    UnsupportedCase,
    ValidationError,
)
from .lifting import (
    LiftInstance,
    PolarizedLiftInstance,
    lift_isotropic,
    lift_subspace,
)
from .polygons import Polygon, Signature, dominates, is_symmetric, mean
from .prdata import (
    counterexample_check,
    enumerate_pr,
    is_rapoport,
    torsion_profile,
)
from .rings import PolyMatrix
from .rings.gf import GF, mat_rank
from .rings.polyring import Poly

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_BUDGET = 3
EXIT_PRECISION = 4
EXIT_UNSUPPORTED = 5

RunResult = namedtuple("RunResult", "code text err out")


# ---------------------------------------------------------------------------
# value parsing


def _int(val, name):
    try:
        return int(val)
    except (TypeError, ValueError):
        raise ValidationError(f"{name} must be an integer, got {val!r}")


def _ints_csv(val, name):
    if val is None:
        raise ValidationError(f"{name} is required")
    if isinstance(val, int):
        return (val,)
    if isinstance(val, (list, tuple)):
        return tuple(_int(x, name) for x in val)
    parts = [p.strip() for p in str(val).split(",") if p.strip()]
    if not parts:
        raise ValidationError(f"{name} must list at least one integer")
    return tuple(_int(p, name) for p in parts)


def _fraction(text):
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError):
        raise ValidationError(f"bad fraction {text!r}")


def _parse_polygon(spec, e=1):
    """'0:1,1/2:2' becomes the polygon with those slope:multiplicity pairs."""
    pairs = []
    for part in str(spec).split(","):
        if ":" not in part:
            raise ValidationError(
                f"bad polygon part {part!r}, want slope:multiplicity"
            )
        s, m = part.split(":", 1)
        pairs.append((_fraction(s), _int(m.strip(), "multiplicity")))
    return Polygon(pairs, e=e)


def _parse_sig(val, h):
    return Signature(_ints_csv(val, "sig"), h)


def _gf(q):
    """Field of prime-power order q."""
    q = _int(q, "q")
    if q < 2:
        raise ValidationError("q must be a prime power, q >= 2")
    p = 2
    while p * p <= q and q % p:
        p += 1
    if q % p:
        p = q
    n, s = q, 0
    while n % p == 0:
        n //= p
        s += 1
    if n != 1:
        raise ValidationError(f"q = {q} is not a prime power")
    return GF(p, s)


# ---------------------------------------------------------------------------
# config handling


def _load_json(path, what):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read {what}: {exc}")
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{what} is not valid JSON: {exc}")
    if not isinstance(obj, dict):
        raise ValidationError(f"{what} must hold a JSON object")
    return obj


def _resolve(args):
    """Namespace to plain dict, with config-file values under flag values."""
    cfg = dict(vars(args))
    path = cfg.pop("config", None)
    if path:
        for key, val in _load_json(path, "config file").items():
            dest = str(key).replace("-", "_")
            if dest == "config" or dest not in cfg:
                raise ValidationError(
                    f"config key {key!r} is not an option of this command"
                )
            # a flag that was actually passed wins over the config file
            if cfg[dest] is None or cfg[dest] is False:
                cfg[dest] = val
    return cfg


def _get(cfg, key, default=None, conv=None):
    val = cfg.get(key)
    if val is None:
        val = default
    if val is not None and conv is not None:
        val = conv(val, key)
    return val


def _require(cfg, key, conv=None):
    val = _get(cfg, key, conv=conv)
    if val is None:
        raise ValidationError(f"--{key.replace('_', '-')} is required")
    return val


# ---------------------------------------------------------------------------
# rendering


def _jsonable(val):
    if isinstance(val, dict):
        return {str(k): _jsonable(v) for k, v in val.items()}
    if isinstance(val, (list, tuple)):
        return [_jsonable(v) for v in val]
    if isinstance(val, Fraction):
        return str(val)
    return val


def _cell(val):
    if isinstance(val, bool):
        return "true" if val else "false"
    if isinstance(val, (list, tuple)):
        return "|".join(str(v) for v in val) if val else "-"
    return str(val)


def _poly_cell(P):
    return "|".join(f"{s}:{m}" for s, m in P.slopes)


def _header(cfg, used, precision=None):
    head = {
        "command": cfg["command"],
        "parameters": _jsonable({k: used[k] for k in sorted(used)}),
        "version": __version__,
    }
    if precision is not None:
        head["precision"] = precision
    return head


def _header_lines(head):
    params = " ".join(
        f"{k}={json.dumps(head['parameters'][k], separators=(',', ':'))}"
        for k in sorted(head["parameters"])
    )
    lines = [
        f"# version: {head['version']}",
        f"# command: {head['command']}",
        f"# parameters: {params}",
    ]
    if "precision" in head:
        lines.append(f"# precision: {head['precision']}")
    return lines


def _render(cfg, head, result, columns, rows):
    fmt = _get(cfg, "format", "json")
    if fmt == "json":
        payload = {"header": head, "result": _jsonable(result)}
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if fmt == "csv":
        sio = io.StringIO()
        for line in _header_lines(head):
            sio.write(line + "\n")
        writer = csv.writer(sio, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow(row)
        return sio.getvalue()
    raise ValidationError(f"unknown format {fmt!r}")


# ---------------------------------------------------------------------------
# commands


def cmd_polygon(cfg):
    op = _require(cfg, "op")
    specs = _get(cfg, "poly") or []
    if isinstance(specs, str):
        specs = [specs]
    gran = _get(cfg, "e", 1, _int)
    polys = [_parse_polygon(s, gran) for s in specs]
    used = {"op": op, "poly": [str(s) for s in specs], "e": gran}
    head = _header(cfg, used)
    result = {"op": op, "polygons": [p.to_json_obj() for p in polys]}
    rows = [[f"poly{i}", _poly_cell(p)] for i, p in enumerate(polys)]
    if op == "dominates":
        if len(polys) != 2:
            raise ValidationError("dominates needs exactly two --poly values")
        verdict = dominates(polys[0], polys[1])
        result["dominates"] = verdict
        rows.append(["dominates", _cell(verdict)])
    elif op == "mean":
        if not polys:
            raise ValidationError("mean needs at least one --poly value")
        M = mean(*polys)
        result["mean"] = M.to_json_obj()
        rows.append(["mean", _poly_cell(M)])
    elif op == "symmetric":
        if len(polys) != 1:
            raise ValidationError("symmetric needs exactly one --poly value")
        verdict = is_symmetric(polys[0])
        result["symmetric"] = verdict
        rows.append(["symmetric", _cell(verdict)])
    else:
        raise ValidationError(f"unknown polygon op {op!r}")
    return _render(cfg, head, result, ("key", "value"), rows)


def cmd_enumerate(cfg):
    q = _require(cfg, "q", _int)
    e = _get(cfg, "e", 1, _int)
    f = _get(cfg, "f", 1, _int)
    h = _require(cfg, "h", _int)
    case = _get(cfg, "case", "AL")
    budget = _get(cfg, "budget", 500_000, _int)
    sig = _parse_sig(_require(cfg, "sig"), h)
    if sig.e != e:
        raise ValidationError("signature must list one rank per stage")
    strata = {}
    total = 0
    for F in enumerate_pr(q, e, f, h, sig, case=case, budget=budget):
        prof = torsion_profile(F.pi, F.omega).parts
        key = (prof, is_rapoport(F))
        strata[key] = strata.get(key, 0) + 1
        total += 1
    used = {
        "q": q,
        "e": e,
        "f": f,
        "h": h,
        "sig": list(sig.d),
        "case": case,
        "budget": budget,
    }
    head = _header(cfg, used)
    table = [
        {"profile": list(prof), "rapoport": rap, "count": strata[(prof, rap)]}
        for prof, rap in sorted(strata)
    ]
    result = {"case": case, "total": total, "strata": table}
    rows = [
        [_cell(row["profile"]), _cell(row["rapoport"]), row["count"]]
        for row in table
    ]
    return _render(cfg, head, result, ("profile", "rapoport", "count"), rows)


def cmd_localmodel(cfg):
    chart = _require(cfg, "chart")
    qs = _ints_csv(_require(cfg, "q"), "q")
    backend = _get(cfg, "backend")
    budget = _get(cfg, "budget", None, _int)
    with_points = bool(cfg.get("points"))
    with_derivation = bool(cfg.get("derivation"))
    count_budget = budget if budget is not None else 50_000_000
    counts, backends = {}, {}
    for q in qs:
        rep = localmodels.component_counts(
            chart, q, backend=backend, budget=count_budget
        )
        counts[str(q)] = dict(rep["counts"])
        backends[str(q)] = rep["backend"]
    used = {
        "chart": chart,
        "q": list(qs),
        "backend": backend or "auto",
        "budget": count_budget,
        "points": with_points,
        "derivation": with_derivation,
    }
    head = _header(cfg, used)
    result = {
        "chart": chart,
        "counts": counts,
        "backends": backends,
    }
    if with_derivation:
        result["derivation"] = localmodels.derive_chart_equations(
            chart
        ).to_json_obj()
    if with_points:
        if len(qs) != 1:
            raise ValidationError("--points needs a single q")
        point_budget = budget if budget is not None else 200_000
        rep = localmodels.enumerate_chart(chart, qs[0], budget=point_budget)
        result["rapoport_points"] = rep["rapoport_points"]
        result["points"] = [
            localmodels.point_to_json_obj(rec) for rec in rep["points"]
        ]
    rows = [
        [q, comp, counts[str(q)][comp]]
        for q in qs
        for comp in localmodels.COMPONENTS
    ]
    return _render(cfg, head, result, ("q", "component", "count"), rows)


_FIXTURES = ("supersingular", "ordinary")


def _fixture_crystal(name, p, m):
    if name == "supersingular":
        F = [[0, p], [1, 0]]
        return make_crystal("AL", p, 1, 1, [F], [F], m=m)
    if name == "ordinary":
        return make_crystal(
            "AL", p, 1, 1, [[[1, 0], [0, p]]], [[[p, 0], [0, 1]]], m=m
        )
    raise ValidationError(
        f"unknown fixture {name!r}, pick one of {', '.join(_FIXTURES)}"
    )


def cmd_deform(cfg):
    p = _get(cfg, "p", 3, _int)
    fixture = _get(cfg, "fixture")
    crystal_path = _get(cfg, "crystal")
    if (fixture is None) == (crystal_path is None):
        raise ValidationError("pass exactly one of --fixture or --crystal")
    prec = _get(cfg, "prec_m", None, _int)
    trunc = _get(cfg, "trunc_t", None, _int)
    denom = _get(cfg, "denom_d", 16, _int)
    budget = _get(cfg, "budget", None, _int)

    def build(m_override):
        if fixture is not None:
            m = m_override or prec or default_precision(1, 2)
            return _fixture_crystal(fixture, p, m)
        obj = _load_json(crystal_path, "crystal file")
        m = m_override or prec
        if m is not None:
            obj = dict(obj)
            obj["m"] = m
        try:
            return crystal_from_json_obj(obj)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed crystal file: {exc!r}")

    c = build(None)
    sig = _parse_sig(_get(cfg, "sig", "1"), c.h)
    retried = False
    try:
        chain, report = densify(
            c, sig, budget=budget, T=trunc, denom_budget=denom
        )
    except PrecisionExhausted:
        # one retry at doubled precision, then the failure is final
        retried = True
        c = build(2 * c.m)
        chain, report = densify(
            c, sig, budget=budget, T=trunc, denom_budget=denom
        )
    used = {
        "source": fixture if fixture is not None else "crystal-file",
        "p": c.p,
        "sig": list(sig.d),
        "denom_d": denom,
    }
    if budget is not None:
        used["budget"] = budget
    if trunc is not None:
        used["trunc_t"] = trunc
    head = _header(cfg, used, precision=c.m)
    result = {
        "mu_ordinary": report["mu_ordinary"],
        "steps": report["steps"],
        "newton": report["newton"].to_json_obj(),
        "target": report["target"].to_json_obj(),
        "retried": retried,
        "trace": trace_to_json_obj(chain),
    }
    rows = [
        [
            st.index,
            _poly_cell(st.special_newton),
            _poly_cell(st.generic_newton),
            _cell(st.mu_ordinary),
        ]
        for st in chain
    ]
    return _render(
        cfg, head, result, ("step", "special", "generic", "mu_ordinary"), rows
    )


def cmd_counterexample(cfg):
    q = _get(cfg, "q", 2, _int)
    backend = _get(cfg, "backend")
    report = dict(counterexample_check(q, backend=backend))
    for key in ("profile_pi1", "profile_pi2"):
        report[key] = list(report[key].parts)
    used = {"q": q, "backend": backend or "auto"}
    head = _header(cfg, used)
    rows = [[key, _cell(report[key])] for key in sorted(report)]
    return _render(cfg, head, dict(report), ("key", "value"), rows)


def _unit_cols(P, d, h):
    return PolyMatrix.from_cols(
        P,
        [[P.const(1 if i == j else 0) for i in range(h)] for j in range(d)],
        h,
    )


def _random_cols(K, rng, h, l):
    # rejection sampling; independence fails with probability < 1/(q - 1)
    for _ in range(64):
        cols = [[rng.randrange(K.q) for _ in range(h)] for _ in range(l)]
        rows = [[cols[j][i] for j in range(l)] for i in range(h)]
        if mat_rank(K, rows) == l:
            return cols
    raise ValidationError("could not draw an independent target subspace")


def cmd_lift(cfg):
    mode = _get(cfg, "mode", "subspace")
    q = _get(cfg, "q", 3, _int)
    seed = _get(cfg, "seed", 0, _int)
    T = _get(cfg, "trunc_t", 2, _int)
    K = _gf(q)
    P = Poly(K)
    rng = random.Random(seed)
    used = {"mode": mode, "q": q, "seed": seed, "trunc_t": T}
    if mode == "subspace":
        h = _get(cfg, "h", 4, _int)
        dims = _ints_csv(_get(cfg, "dims", "1,2"), "dims")
        l = _get(cfg, "l", 1, _int)
        chain = [_unit_cols(P, d, h) for d in dims]
        lbar = _random_cols(K, rng, h, l)
        inst = LiftInstance(P, h, chain, lbar, T=T)
        lifted = lift_subspace(inst)
        used.update({"h": h, "dims": list(dims), "l": l})
        extra = {
            "h": h,
            "dims": list(dims),
            "l": l,
            "generic_intersections": [max(0, l + d - h) for d in dims],
        }
    elif mode == "isotropic":
        g = _get(cfg, "g", 2, _int)
        n = 2 * g
        gram0 = [[0] * n for _ in range(n)]
        for i in range(g):
            gram0[i][g + i] = 1
            gram0[g + i][i] = K.neg(1)
        gram = PolyMatrix.from_field(P, gram0)
        N = PolyMatrix.from_field(
            P, [[1 if i == j else 0 for j in range(g)] for i in range(n)]
        )
        # the graph of a symmetric matrix is isotropic for the split form
        S = [[0] * g for _ in range(g)]
        for i in range(g):
            for j in range(i, g):
                S[i][j] = S[j][i] = rng.randrange(K.q)
        lbar = [
            [1 if i == j else 0 for i in range(g)] + [S[i][j] for i in range(g)]
            for j in range(g)
        ]
        inst = PolarizedLiftInstance(P, g, gram, N, lbar, T=T)
        lifted = lift_isotropic(inst)
        used.update({"g": g})
        extra = {"g": g}
    else:
        raise ValidationError(f"unknown lift mode {mode!r}")
    head = _header(cfg, used)
    result = {
        "mode": mode,
        "q": q,
        "target": [[int(x) for x in col] for col in inst.lbar],
        "lift": [[list(entry) for entry in row] for row in lifted.rows],
        "certified": True,
    }
    result.update(extra)
    rows = [
        [i, j, _cell(list(entry)) if entry else "0"]
        for i, row in enumerate(lifted.rows)
        for j, entry in enumerate(row)
    ]
    return _render(cfg, head, result, ("row", "col", "poly"), rows)


_DISPATCH = {
    "polygon": cmd_polygon,
    "enumerate": cmd_enumerate,
    "localmodel": cmd_localmodel,
    "deform": cmd_deform,
    "counterexample": cmd_counterexample,
    "lift": cmd_lift,
}


# ---------------------------------------------------------------------------
# argument parsing and entry point


def build_parser():
    parser = argparse.ArgumentParser(
        prog="prlocus",
        description="Exact computations on Pappas-Rapoport strata",
    )
    parser.add_argument(
        "--version", action="version", version=f"prlocus {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON option file; flags win")
        sp.add_argument("--format", choices=("json", "csv"))
        sp.add_argument("--out", help="output path (default stdout)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--budget", type=int)

    sp = sub.add_parser("polygon", help="polygon predicates and means")
    common(sp)
    sp.add_argument("--op", choices=("dominates", "mean", "symmetric"))
    sp.add_argument(
        "--poly",
        action="append",
        help="slope:mult[,slope:mult...] with fractional slopes",
    )
    sp.add_argument("--e", type=int, help="granularity denominator")

    sp = sub.add_parser("enumerate", help="stratum table for a PR datum")
    common(sp)
    sp.add_argument("--q", help="field order")
    sp.add_argument("--e", type=int, help="ramification degree")
    sp.add_argument("--f", type=int, help="residue degree label")
    sp.add_argument("--h", type=int, help="ambient height")
    sp.add_argument("--sig", help="signature ranks d_1,...,d_e")
    sp.add_argument("--case", choices=("AL", "AU", "C", "AR"))

    sp = sub.add_parser("localmodel", help="component point counts")
    common(sp)
    sp.add_argument("--chart", choices=localmodels.chart_names())
    sp.add_argument("--q", help="field order, or a comma list of orders")
    sp.add_argument("--backend", choices=("numpy", "numba"))
    sp.add_argument(
        "--points", action="store_true", help="include per-point records"
    )
    sp.add_argument(
        "--derivation",
        action="store_true",
        help="include the symbolic chart derivation",
    )

    sp = sub.add_parser("deform", help="densification trace")
    common(sp)
    sp.add_argument("--fixture", choices=_FIXTURES)
    sp.add_argument("--crystal", help="JSON crystal file")
    sp.add_argument("--p", type=int, help="residue characteristic")
    sp.add_argument("--sig", help="signature ranks d_1,...,d_e")
    sp.add_argument("--prec-m", type=int, help="p-adic working precision")
    sp.add_argument("--trunc-t", type=int, help="t-adic truncation order")
    sp.add_argument("--denom-d", type=int, help="denominator budget")

    sp = sub.add_parser("counterexample", help="monotone-jump scan report")
    common(sp)
    sp.add_argument("--q", help="field order (prime)")
    sp.add_argument("--backend", choices=("numpy", "numba"))

    sp = sub.add_parser("lift", help="certified lift of a seeded target")
    common(sp)
    sp.add_argument("--mode", choices=("subspace", "isotropic"))
    sp.add_argument("--q", help="field order")
    sp.add_argument("--h", type=int, help="ambient rank (subspace mode)")
    sp.add_argument("--dims", help="chain ranks d_1,...,d_r (subspace mode)")
    sp.add_argument("--l", type=int, help="target dimension (subspace mode)")
    sp.add_argument("--g", type=int, help="half rank (isotropic mode)")
    sp.add_argument("--trunc-t", type=int, help="t-adic truncation order")

    return parser


def run(argv=None):
    """Execute one invocation and return (code, text, err, out) untouched."""
    args = build_parser().parse_args(argv)
    out = getattr(args, "out", None)
    try:
        cfg = _resolve(args)
        out = cfg.get("out")
        text = _DISPATCH[cfg["command"]](cfg)
    except ValidationError as exc:
        return RunResult(EXIT_USAGE, "", f"error: {exc}\n", out)
    except BudgetExceeded as exc:
        return RunResult(EXIT_BUDGET, "", f"error: budget exhausted: {exc}\n", out)
    except PrecisionExhausted as exc:
        return RunResult(
            EXIT_PRECISION, "", f"error: precision exhausted: {exc}\n", out
        )
    except UnsupportedCase as exc:
        return RunResult(
            EXIT_UNSUPPORTED, "", f"error: unsupported case: {exc}\n", out
        )
    return RunResult(EXIT_OK, text, "", out)


def main(argv=None):
    res = run(argv)
    if res.err:
        sys.stderr.write(res.err)
    if res.text:
        if res.out:
            with open(res.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(res.text)
        else:
            sys.stdout.write(res.text)
    return res.code


if __name__ == "__main__":
    sys.exit(main())
