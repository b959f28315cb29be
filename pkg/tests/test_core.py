"""Geometry predicates, instance statistics, grid normalization, file IO."""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from revsel.core import (
    ArrivalSequence,
    EmptyInstanceError,
    Interval,
    call_control_point_bound,
    conflicts,
    contains_properly,
    dumps_jsonl,
    instance_stats,
    loads_jsonl,
    normalize_to_grid,
    overlap_amount,
    scale_rational_endpoints,
    validate_solution,
)


def iv(i, s, e, w=1):
    return Interval(i, s, e, Fraction(w))


def seq(*coords):
    return ArrivalSequence(Interval(i, s, e) for i, (s, e) in enumerate(coords))


# -- interval validity -------------------------------------------------------


def test_interval_rejects_degenerate():
    with pytest.raises(ValueError):
        Interval(0, 3, 3)
    with pytest.raises(ValueError):
        Interval(0, 5, 2)
    with pytest.raises(ValueError):
        Interval(0, 0, 1, Fraction(-1))
    with pytest.raises(TypeError):
        Interval(0, 0.0, 1.0)


def test_sequence_rejects_duplicate_ids():
    with pytest.raises(ValueError):
        ArrivalSequence([iv(0, 0, 1), iv(0, 2, 3)])


# -- conflicts / containment / overlap ---------------------------------------


def test_conflicts_half_open():
    assert not conflicts(iv(0, 0, 2), iv(1, 2, 4))
    assert conflicts(iv(0, 0, 4), iv(1, 1, 3))
    assert conflicts(iv(0, 0, 3), iv(1, 0, 3))


def test_contains_properly():
    assert contains_properly(iv(0, 0, 10), iv(1, 2, 5))
    assert not contains_properly(iv(0, 0, 3), iv(1, 0, 3))
    assert not contains_properly(iv(0, 0, 4), iv(1, 2, 6))
    # sharing one endpoint still counts
    assert contains_properly(iv(0, 0, 10), iv(1, 0, 4))
    assert contains_properly(iv(0, 0, 10), iv(1, 6, 10))


def test_overlap_amount():
    assert overlap_amount(iv(0, 0, 6), iv(1, 4, 10)) == 2
    assert overlap_amount(iv(0, 0, 6), iv(1, 6, 12)) == 0
    assert overlap_amount(iv(0, 0, 10), iv(1, 2, 5)) == 3


intervals_st = st.builds(
    lambda a, b, i: Interval(i, min(a, b), max(a, b) + 1),
    st.integers(-50, 50),
    st.integers(-50, 50),
    st.integers(0, 1),
)


@given(intervals_st, intervals_st)
@settings(max_examples=200)
def test_conflict_predicate_properties(a, b):
    assert conflicts(a, b) == conflicts(b, a)
    assert (overlap_amount(a, b) > 0) == conflicts(a, b)
    if contains_properly(a, b):
        assert conflicts(a, b)
        assert not contains_properly(b, a)
    assert not contains_properly(a, a)


# -- instance stats -----------------------------------------------------------


def test_stats_on_two_length_tight_instance():
    s = seq((-10, 10), (-14, -8), (8, 14), (-3, 3), (-8, -2), (2, 8))
    stats = instance_stats(s)
    assert stats.k == 2
    assert stats.d == 1


def test_stats_chain_and_single():
    chain = seq((0, 6), (4, 10), (8, 14), (12, 18), (16, 22))
    stats = instance_stats(chain)
    assert stats.k == 1
    assert stats.d == 0
    single = seq((3, 9))
    assert instance_stats(single).k == 1
    assert instance_stats(single).d == 0


def test_stats_nesting_depth_uses_chains_not_container_counts():
    # two overlapping same-length containers of one small interval: depth 1
    s = seq((0, 10), (2, 12), (3, 8))
    stats = instance_stats(s)
    assert stats.k == 2
    assert stats.d == 1


def test_stats_empty_errors():
    with pytest.raises(EmptyInstanceError):
        instance_stats(ArrivalSequence([]))


@given(st.lists(intervals_st.map(lambda i: (i.start, i.end)), min_size=1, max_size=12))
@settings(max_examples=150)
def test_nesting_depth_bounded_by_k_minus_one(coords):
    s = seq(*coords)
    stats = instance_stats(s)  # d <= k-1 asserted internally
    assert stats.d <= stats.k - 1


# -- grid normalization -------------------------------------------------------


def test_normalize_examples():
    scaled, n = normalize_to_grid(seq((0, 2), (2, 4)))
    assert [(i.start, i.end) for i in scaled] == [(0, 1), (1, 2)]
    assert n == 3

    scaled, n = normalize_to_grid(seq((0, 3), (1, 4)))
    assert [(i.start, i.end) for i in scaled] == [(0, 3), (1, 4)]
    assert n == 5

    scaled, n = normalize_to_grid(seq((10, 20), (14, 22)))
    assert [(i.start, i.end) for i in scaled] == [(0, 5), (2, 6)]
    assert n == 7


@given(st.lists(intervals_st.map(lambda i: (i.start * 3, i.end * 3)), min_size=1, max_size=10))
@settings(max_examples=150)
def test_normalize_preserves_conflicts_and_length_order(coords):
    s = seq(*coords)
    scaled, n = normalize_to_grid(s)
    assert n >= 2
    for a, b in [(a, b) for a in s for b in s if a.id < b.id]:
        sa, sb = scaled.by_id(a.id), scaled.by_id(b.id)
        assert conflicts(a, b) == conflicts(sa, sb)
        assert (a.length < b.length) == (sa.length < sb.length)
        assert (a.length == b.length) == (sa.length == sb.length)


# -- point bound --------------------------------------------------------------


def test_call_control_point_bound():
    assert call_control_point_bound(1) == 8
    assert call_control_point_bound(2) == 32
    assert call_control_point_bound(3) == 128
    assert call_control_point_bound(40) == 2**81  # wide integers, no overflow
    with pytest.raises(ValueError):
        call_control_point_bound(0)


# -- solutions ----------------------------------------------------------------


def test_validate_solution():
    s = seq((0, 2), (2, 4))
    assert validate_solution(s, {0, 1})
    t = seq((0, 4), (1, 3))
    assert not validate_solution(t, {0, 1})
    assert validate_solution(t, set())
    with pytest.raises(KeyError):
        validate_solution(t, {9})


# -- rational ingest and jsonl ------------------------------------------------


def test_scale_rational_endpoints():
    s = scale_rational_endpoints(
        [(Fraction(1, 2), Fraction(3, 2), 1), (Fraction(3, 2), 2, 1)]
    )
    assert [(i.start, i.end) for i in s] == [(1, 3), (3, 4)]
    assert not conflicts(s[0], s[1])


def test_jsonl_round_trip():
    s = ArrivalSequence(
        [iv(0, 0, 5), iv(1, 2, 9, Fraction(3, 2)), iv(2, -4, -1, 7)]
    )
    text = dumps_jsonl(s)
    assert loads_jsonl(text) == s
    assert '"weight": "3/2"' in text
    assert text == dumps_jsonl(loads_jsonl(text))


def test_jsonl_writer_requires_sequential_ids():
    with pytest.raises(ValueError):
        dumps_jsonl(ArrivalSequence([iv(1, 0, 5)]))


def test_jsonl_rejects_garbage():
    with pytest.raises(ValueError):
        loads_jsonl('{"id": 0, "start": 1}\n')
    with pytest.raises(ValueError):
        loads_jsonl('{"id": 0, "start": 3, "end": 3}\n')
