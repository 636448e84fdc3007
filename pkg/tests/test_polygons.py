from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from prlocus.errors import BadMultiplicity, EndpointMismatch, ValidationError
from prlocus.polygons import (
    Polygon,
    Signature,
    TorsionProfile,
    dominates,
    hodge_from_profile,
    is_symmetric,
    mean,
    polygon_from_slopes,
    pr_from_signature,
)

F = Fraction


def test_polygon_canonicalization_and_equality():
    P = polygon_from_slopes([(F(1, 2), 1), (0, 1), (F(1, 2), 1)], e=2)
    Q = polygon_from_slopes([(0, 1), (F(1, 2), 2)], e=4)
    assert P == Q
    assert hash(P) == hash(Q)
    assert P.slopes == ((F(0), F(1)), (F(1, 2), F(2)))
    assert P.width == 3 and P.height == 1


def test_polygon_multiplicity_granularity_guard():
    with pytest.raises(BadMultiplicity):
        Polygon([(F(1), F(1, 2))], e=1)
    P = Polygon([(F(1), F(1, 2))], e=2)
    assert P.multiplicity(1) == F(1, 2)
    with pytest.raises(BadMultiplicity):
        Polygon([(F(0), F(-1))], e=1)


def test_value_at_and_vertices():
    P = polygon_from_slopes([0, 1])
    assert P.vertices() == [(0, 0), (1, 0), (2, 1)]
    assert P.value_at(F(3, 2)) == F(1, 2)
    with pytest.raises(ValidationError):
        P.value_at(3)


def test_dominates_supersingular_above_ordinary():
    ordinary = polygon_from_slopes([0, 1])
    half = polygon_from_slopes([(F(1, 2), 2)], e=2)
    assert dominates(half, ordinary)
    assert not dominates(ordinary, half)
    assert dominates(half, half)


def test_dominates_endpoint_mismatch():
    with pytest.raises(EndpointMismatch):
        dominates(polygon_from_slopes([0, 1]), polygon_from_slopes([0, 0, 1]))
    with pytest.raises(EndpointMismatch):
        dominates(polygon_from_slopes([0, 1]), polygon_from_slopes([1, 1]))


def test_mean_pointwise():
    P = polygon_from_slopes([0, 1])
    Q = polygon_from_slopes([(F(1, 2), 2)], e=2)
    M = mean(P, Q)
    assert M == polygon_from_slopes([F(1, 4), F(3, 4)])
    assert M.e % 2 == 0
    assert mean(P) == P
    # averaging three copies with a shifted one
    R = polygon_from_slopes([1, 0])  # same multiset, canonical sorts it
    assert mean(P, P, R) == P


def test_mean_produces_fractional_multiplicities():
    P = polygon_from_slopes([0, 0, 1])
    Q = polygon_from_slopes([0, 1, 1])
    M = mean(P, Q)
    # pointwise: slopes 0, 1/2, 1 on unit segments
    assert M == polygon_from_slopes([0, F(1, 2), 1])


def test_is_symmetric():
    assert is_symmetric(polygon_from_slopes([0, 1]))
    assert is_symmetric(polygon_from_slopes([0, F(1, 2), 1]))
    assert is_symmetric(polygon_from_slopes([(F(1, 2), 4)], e=2))
    assert not is_symmetric(polygon_from_slopes([0, 0, 1]))
    assert not is_symmetric(polygon_from_slopes([F(1, 3), F(2, 3), F(2, 3)]))


def test_pr_from_signature_constant():
    # constant jumps d: slope 0 with mult h-d and slope 1 with mult d
    P = pr_from_signature((2, 2, 2), h=3)
    assert P == polygon_from_slopes([(0, 1), (1, 2)])
    Q = pr_from_signature(Signature((0, 0), 2))
    assert Q == polygon_from_slopes([(0, 2)])


def test_pr_from_signature_generic():
    P = pr_from_signature((2, 0, 1), h=3)
    assert P.slopes == ((F(0), F(1)), (F(1, 3), F(1)), (F(2, 3), F(1)))
    assert P.width == 3
    assert P.height == F(1)


def test_pr_from_signature_width_height():
    sig = Signature((3, 1, 2), 4)
    P = pr_from_signature(sig)
    assert P.width == sig.h
    assert P.height == F(sig.total, sig.e)


def test_hodge_from_profile():
    P = hodge_from_profile([2, 1, 0], e=2)
    assert P.slopes == ((F(0), F(1)), (F(1, 2), F(1)), (F(1), F(1)))
    Q = hodge_from_profile(TorsionProfile((2, 1)), e=2, h=3)
    assert P == Q
    with pytest.raises(ValidationError):
        hodge_from_profile([1, 1], e=2, h=1)


def test_hodge_dominates_pr_example():
    pr = pr_from_signature((2, 0, 1), h=3)
    # the conjugate partition realizes the minimal polygon exactly
    assert hodge_from_profile([2, 1, 0], e=3) == pr
    # an evened-out profile lies strictly above
    assert dominates(hodge_from_profile([1, 1, 1], e=3), pr)
    # a too-concentrated profile falls below and is not dominated
    assert not dominates(hodge_from_profile([3, 0, 0], e=3), pr)


def test_signature_and_profile_validation():
    with pytest.raises(ValidationError):
        Signature((4,), 3)
    with pytest.raises(ValidationError):
        Signature((), 3)
    with pytest.raises(ValidationError):
        TorsionProfile((1, 2))
    assert TorsionProfile((2, 1, 0)).parts == (2, 1)
    assert TorsionProfile((2, 1)).dim == 3
    assert TorsionProfile((2, 1)).padded(4) == (2, 1, 0, 0)


def test_polygon_json_roundtrip():
    P = polygon_from_slopes([(F(1, 2), F(3, 2)), (0, 1)], e=2)
    assert Polygon.from_json_obj(P.to_json_obj()) == P
    assert P.to_json_obj()["e"] == 2


@st.composite
def _slope_multisets(draw):
    n = draw(st.integers(2, 6))
    return [draw(st.integers(0, 4)) for _ in range(n)]


@settings(max_examples=80, deadline=None)
@given(_slope_multisets(), st.data())
def test_smoothing_dominates_property(slopes, data):
    P = polygon_from_slopes(slopes)
    i = data.draw(st.integers(0, len(slopes) - 1))
    j = data.draw(st.integers(0, len(slopes) - 1))
    if slopes[i] == slopes[j]:
        return
    avg = F(slopes[i] + slopes[j], 2)
    smoothed = [F(s) for k, s in enumerate(slopes) if k not in (i, j)]
    smoothed += [avg, avg]
    Q = polygon_from_slopes(smoothed, e=2)
    assert dominates(Q, P)
    M = mean(P, Q)
    assert dominates(Q, M) and dominates(M, P)


@settings(max_examples=60, deadline=None)
@given(_slope_multisets())
def test_mean_idempotent_property(slopes):
    P = polygon_from_slopes(slopes)
    assert mean(P, P) == P
    mirror = polygon_from_slopes([1 - F(s) for s in slopes])
    assert is_symmetric(mean(P, mirror))
