"""Convex slope polygons and the polygon invariants of filtered data.

A polygon is the graph of a convex piecewise-linear function starting at the
origin, stored as its multiset of slopes with positive rational
multiplicities.  The granularity e bounds the multiplicity denominators,
which is what survives averaging over embeddings; slope denominators are
unconstrained.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import BadMultiplicity, EndpointMismatch, ValidationError


def _as_fraction(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise ValidationError(f"expected exact rational, got {x!r}")


class Polygon:
    """Slope multiset with granularity; equality compares the multisets."""

    __slots__ = ("e", "slopes")

    def __init__(self, slopes, e=1):
        if e < 1:
            raise ValidationError("granularity must be positive")
        merged = {}
        for s, m in slopes:
            s, m = _as_fraction(s), _as_fraction(m)
            if m < 0:
                raise BadMultiplicity(f"negative multiplicity {m}")
            if m == 0:
                continue
            merged[s] = merged.get(s, Fraction(0)) + m
        for m in merged.values():
            if e % m.denominator:
                raise BadMultiplicity(
                    f"multiplicity {m} not supported at granularity {e}"
                )
        self.e = e
        self.slopes = tuple(sorted(merged.items()))

    def __eq__(self, other):
        return isinstance(other, Polygon) and self.slopes == other.slopes

    def __hash__(self):
        return hash(self.slopes)

    def __repr__(self):
        body = ", ".join(f"{s}x{m}" for s, m in self.slopes)
        return f"Polygon[{body}; e={self.e}]"

    @property
    def width(self):
        return sum((m for _, m in self.slopes), Fraction(0))

    @property
    def height(self):
        return sum((s * m for s, m in self.slopes), Fraction(0))

    def vertices(self):
        """Breakpoints (x, y) from (0, 0) to (width, height)."""
        pts = [(Fraction(0), Fraction(0))]
        x = y = Fraction(0)
        for s, m in self.slopes:
            x += m
            y += s * m
            pts.append((x, y))
        return pts

    def value_at(self, x):
        x = _as_fraction(x)
        if x < 0 or x > self.width:
            raise ValidationError(f"abscissa {x} outside [0, {self.width}]")
        y = Fraction(0)
        pos = Fraction(0)
        for s, m in self.slopes:
            if x <= pos + m:
                return y + s * (x - pos)
            pos += m
            y += s * m
        return y

    def multiplicity(self, slope):
        slope = _as_fraction(slope)
        for s, m in self.slopes:
            if s == slope:
                return m
        return Fraction(0)

    def to_json_obj(self):
        return {
            "e": self.e,
            "slopes": [
                [s.numerator, s.denominator, m.numerator, m.denominator]
                for s, m in self.slopes
            ],
        }

    @classmethod
    def from_json_obj(cls, obj):
        return cls(
            [
                (Fraction(sn, sd), Fraction(mn, md))
                for sn, sd, mn, md in obj["slopes"]
            ],
            e=obj["e"],
        )


def polygon_from_slopes(slopes, e=1):
    """Polygon from plain slopes (multiplicity 1) or (slope, mult) pairs."""
    pairs = []
    for item in slopes:
        if isinstance(item, (tuple, list)):
            s, m = item
            pairs.append((_as_fraction(s), _as_fraction(m)))
        else:
            pairs.append((_as_fraction(item), Fraction(1)))
    return Polygon(pairs, e=e)


def dominates(P: Polygon, Q: Polygon) -> bool:
    """True iff P lies on or above Q; both must share endpoints."""
    if P.width != Q.width or P.height != Q.height:
        raise EndpointMismatch(
            f"endpoints ({P.width}, {P.height}) vs ({Q.width}, {Q.height})"
        )
    xs = {x for x, _ in P.vertices()} | {x for x, _ in Q.vertices()}
    return all(P.value_at(x) >= Q.value_at(x) for x in xs)


def mean(*polys) -> Polygon:
    """Pointwise average of polygons of equal width."""
    if not polys:
        raise ValidationError("mean of no polygons")
    w = polys[0].width
    for P in polys:
        if P.width != w:
            raise EndpointMismatch("mean requires equal widths")
    n = len(polys)
    xs = sorted({x for P in polys for x, _ in P.vertices()})
    pairs = []
    for a, b in zip(xs, xs[1:]):
        seg = b - a
        slope = sum((P.value_at(b) - P.value_at(a) for P in polys), Fraction(0)) / (
            n * seg
        )
        pairs.append((slope, seg))
    denoms = [m.denominator for _, m in pairs] or [1]
    gran = math.lcm(*denoms, *[P.e for P in polys])
    return Polygon(pairs, e=gran)


def is_symmetric(P: Polygon) -> bool:
    """Invariance of the slope multiset under s -> 1 - s."""
    table = dict(P.slopes)
    return all(table.get(1 - s) == m for s, m in P.slopes)


@dataclass(frozen=True)
class Signature:
    """Filtration jump ranks (d_1, ..., d_e) inside height h."""

    d: tuple
    h: int

    def __post_init__(self):
        object.__setattr__(self, "d", tuple(int(x) for x in self.d))
        if not self.d:
            raise ValidationError("signature needs at least one stage")
        if any(x < 0 or x > self.h for x in self.d):
            raise ValidationError(f"signature entries must lie in [0, {self.h}]")

    @property
    def e(self):
        return len(self.d)

    @property
    def total(self):
        return sum(self.d)


@dataclass(frozen=True)
class TorsionProfile:
    """Partition (a_1 >= a_2 >= ...) of cyclic pi-power lengths."""

    parts: tuple

    def __post_init__(self):
        parts = tuple(int(x) for x in self.parts if int(x) != 0)
        if any(x < 0 for x in parts):
            raise ValidationError("negative part in torsion profile")
        if list(parts) != sorted(parts, reverse=True):
            raise ValidationError("torsion profile must be sorted descending")
        object.__setattr__(self, "parts", parts)

    @property
    def dim(self):
        return sum(self.parts)

    def padded(self, n):
        if n < len(self.parts):
            raise ValidationError("padding below profile length")
        return self.parts + (0,) * (n - len(self.parts))


def hodge_from_profile(profile, e, h=None) -> Polygon:
    """Polygon with one width-1 segment of slope c_i/e per divisor."""
    if isinstance(profile, TorsionProfile):
        cs = list(profile.parts)
    else:
        cs = sorted((int(c) for c in profile), reverse=True)
    if any(c < 0 for c in cs):
        raise ValidationError("negative elementary divisor")
    if h is None:
        h = len(cs)
    if len(cs) > h:
        raise ValidationError("more divisors than the height allows")
    cs += [0] * (h - len(cs))
    return Polygon([(Fraction(c, e), Fraction(1)) for c in cs], e=e)


def pr_from_signature(sig, e=None, h=None) -> Polygon:
    """Minimal polygon attached to a signature.

    With d_(1) >= ... >= d_(e) the sorted jumps, the slope j/e occurs with
    multiplicity d_(j) - d_(j+1) (d_(e+1) = 0) and slope 0 fills up to
    width h.
    """
    if isinstance(sig, Signature):
        d, h = sig.d, sig.h
    else:
        d = tuple(int(x) for x in sig)
        if h is None:
            raise ValidationError("height h required for raw signatures")
    if e is not None and e != len(d):
        raise ValidationError("granularity disagrees with signature length")
    e = len(d)
    ds = sorted(d, reverse=True) + [0]
    pairs = [(Fraction(0), Fraction(h - ds[0]))]
    for j in range(1, e + 1):
        pairs.append((Fraction(j, e), Fraction(ds[j - 1] - ds[j])))
    return Polygon(pairs, e=e)
