from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from densitylab.errors import DomainError, StageError
from densitylab.intervals import (
    EMPTY_SET,
    FULL_SET,
    Interval,
    IntervalSet,
    StagedOpenEnumeration,
    canonicalize,
    enumeration,
    interval,
    relative_measure,
)

endpoints = st.builds(lambda n, d: F(n, d), st.integers(0, 64), st.integers(1, 64)).filter(
    lambda q: 0 <= q <= 1
)
raw_intervals = st.tuples(endpoints, endpoints).map(
    lambda p: interval(min(p), max(p))
)
interval_lists = st.lists(raw_intervals, max_size=8)
sets = interval_lists.map(canonicalize)


def test_interval_validation():
    with pytest.raises(DomainError):
        interval(F(1, 2), F(1, 4))
    with pytest.raises(DomainError):
        interval(F(-1, 4), F(1, 2))


def test_canonical_merges_touching_keeps_degenerate():
    s = canonicalize([interval(F(0), F(0)), interval(F(1, 4), F(1, 2)), interval(F(1, 2), F(1))])
    assert s.to_json() == [["0/1", "0/1"], ["1/4", "1/1"]]
    assert s.measure == F(3, 4)


def test_intervalset_rejects_non_canonical():
    with pytest.raises(DomainError):
        IntervalSet((interval(F(0), F(1, 2)), interval(F(1, 2), F(1))))


def test_subtract_open_retains_endpoints():
    c = FULL_SET.subtract_open([interval(F(0), F(1, 8)), interval(F(1, 2), F(3, 4))])
    assert c.to_json() == [["0/1", "0/1"], ["1/8", "1/2"], ["3/4", "1/1"]]
    assert c.measure == F(5, 8)
    assert c.contains_point(F(0)) and c.contains_point(F(1, 2))
    assert not c.contains_point(F(1, 16))
    assert not c.meets_open(F(0), F(1, 8))
    assert not c.meets_open(F(1, 2), F(3, 4))
    assert c.meets_open(F(1, 2), F(25, 32))


def test_gaps_are_closures_of_complement():
    c = FULL_SET.subtract_open([interval(F(0), F(1, 8)), interval(F(1, 2), F(3, 4))])
    assert [g.to_json() for g in c.gaps()] == [["0/1", "1/8"], ["1/2", "3/4"]]
    assert [g.to_json() for g in EMPTY_SET.gaps()] == [["0/1", "1/1"]]
    assert FULL_SET.gaps() == []


@given(interval_lists)
def test_canonicalize_idempotent_and_order_free(items):
    s = canonicalize(items)
    assert canonicalize(list(s.parts)) == s
    assert canonicalize(list(reversed(items))) == s


@given(sets, sets)
def test_measure_modularity(a, b):
    union = a.union(b)
    inter = a.intersect(b)
    assert union.measure + inter.measure == a.measure + b.measure


@given(sets)
def test_complement_measure(a):
    assert a.measure + a.complement().measure == 1
    assert a.intersect(a.complement()).measure == 0


@given(sets, sets)
def test_intersection_commutes(a, b):
    assert a.intersect(b) == b.intersect(a)


@given(sets)
def test_subtract_self_is_null(a):
    diff = a.subtract(a)
    assert diff.measure == 0


def test_relative_measure():
    c = IntervalSet((interval(F(0), F(1, 4)), interval(F(1, 2), F(1))))
    assert relative_measure(c, interval(F(1, 4), F(1, 2))) == 0
    assert relative_measure(c, interval(F(0), F(1))) == F(3, 4)
    with pytest.raises(DomainError):
        relative_measure(c, interval(F(1, 3), F(1, 3)))


def test_staged_enumeration_stages():
    w = enumeration((F(0), F(1, 8)), (F(1, 2), F(3, 4)))
    assert w.stage_class(0) == FULL_SET
    s1 = w.stage_class(1)
    assert s1.to_json() == [["0/1", "0/1"], ["1/8", "1/1"]]
    assert w.stage_class(2).measure == F(5, 8)
    assert w.union_at(2).measure == F(3, 8)
    with pytest.raises(StageError):
        w.stage_class(3)


def test_staged_enumeration_json_roundtrip():
    w = enumeration((F(0), F(1, 8)), (F(1, 2), F(3, 4)))
    again = StagedOpenEnumeration.from_json(w.to_json())
    assert again == w


@given(st.lists(raw_intervals.filter(lambda i: not i.is_degenerate), max_size=6))
def test_stage_classes_are_nested(holes):
    w = StagedOpenEnumeration(tuple(holes))
    prev = FULL_SET
    for t in range(len(holes) + 1):
        cur = w.stage_class(t)
        assert cur.intersect(prev) == cur  # antitone chain
        prev = cur
    assert prev.measure + w.union_at(len(holes)).measure == 1
