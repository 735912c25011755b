import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdrnet.dilation import (
    DilationSchedule,
    check_gridding,
    footprint,
    footprint_1d,
    footprint_2d_bruteforce,
    max_gap_sequence,
    receptive_field,
    render_ascii,
    search_schedules,
)
from sdrnet.errors import InvalidArgumentError, ResourceLimitError


@pytest.mark.parametrize(
    "rates,expected",
    [([1, 2, 5], [1, 2, 5]), ([1], [1]), ([2, 4, 8], [2, 4, 8])],
)
def test_max_gap_sequence(rates, expected):
    assert max_gap_sequence(DilationSchedule(rates, 3)) == expected


def test_max_gap_matches_hand_evaluation_of_literal_recurrence():
    # M_i = max[M_{i+1} - 2r_i, M_{i+1} - 2(M_{i+1} - r_i), r_i] written out
    rates = [1, 3, 4, 9]
    m = [0, 0, 0, 9]
    for i in (2, 1, 0):
        m[i] = max(m[i + 1] - 2 * rates[i], m[i + 1] - 2 * (m[i + 1] - rates[i]), rates[i])
    assert max_gap_sequence(rates) == m


def test_empty_schedule_rejected():
    with pytest.raises(InvalidArgumentError):
        DilationSchedule((), 3)
    with pytest.raises(InvalidArgumentError):
        DilationSchedule((1, 0), 3)
    with pytest.raises(InvalidArgumentError):
        DilationSchedule((1,), 4)


@pytest.mark.parametrize(
    "rates,passes,m2",
    [([1, 2, 5], True, 2), ([2, 4, 8], False, 4), ([1, 1, 1], True, 1)],
)
def test_check_gridding_examples(rates, passes, m2):
    rep = check_gridding(DilationSchedule(rates, 3))
    assert rep.passes is passes
    assert rep.m2 == m2
    assert rep.max_gaps[-1] == rates[-1]
    assert len(rep.max_gaps) == len(rates)
    assert footprint(DilationSchedule(rates, 3)).has_holes() is (not passes)


def test_footprint_single_standard_conv():
    g = footprint(DilationSchedule((1,), 3))
    assert g.hits.shape == (3, 3) and g.hits.all()


def test_footprint_single_dilated_has_holes():
    g = footprint(DilationSchedule((2,), 3), skip=False)
    assert g.hits.shape == (5, 5)
    assert g.unhit == 16
    assert np.flatnonzero(g.hits[2]).tolist() == [0, 2, 4]


def test_footprint_125_has_no_holes():
    g = footprint(DilationSchedule((1, 2, 5), 3))
    assert not g.has_holes()
    assert g.size == receptive_field(DilationSchedule((1, 2, 5), 3)) == 17


def test_footprint_cap():
    with pytest.raises(ResourceLimitError):
        footprint(DilationSchedule((1000, 1000, 1000), 3), cap=100)


@pytest.mark.parametrize(
    "rates,rf", [([1], 3), ([1, 2, 5], 17), ([1, 2, 4, 8], 31)]
)
def test_receptive_field(rates, rf):
    assert receptive_field(DilationSchedule(rates, 3)) == rf


def test_search_examples():
    assert [s.rates for s in search_schedules(1, 1, 3)] == [(1,)]
    found = [s.rates for s in search_schedules(3, 2, 3)]
    assert (1, 2, 2) in found and (2, 2, 2) not in found
    assert (4, 8) not in [s.rates for s in search_schedules(2, 8, 3)]


def test_search_ordering():
    found = search_schedules(3, 6, 3)
    keys = [(-receptive_field(s), sum(s.rates)) for s in found]
    assert keys == sorted(keys)


def test_search_cap():
    with pytest.raises(ResourceLimitError):
        search_schedules(6, 50, 3, cap=1000)


def _schedules(max_depth=4, max_rate=10):
    for depth in range(1, max_depth + 1):
        yield from itertools.combinations_with_replacement(range(1, max_rate + 1), depth)


@pytest.mark.parametrize("kernel", [3, 5])
def test_verdict_agrees_with_footprint_oracle(kernel):
    disagreements = []
    for rates in _schedules():
        sched = DilationSchedule(rates, kernel)
        if check_gridding(sched).passes != bool(footprint_1d(sched).hits.all()):
            disagreements.append(rates)
    assert disagreements == []


@pytest.mark.parametrize("rates", [(1,), (2,), (1, 2), (2, 3), (1, 2, 5), (2, 4), (1, 3, 3)])
@pytest.mark.parametrize("kernel", [3, 5])
def test_2d_factorisation_matches_direct_enumeration(rates, kernel):
    sched = DilationSchedule(rates, kernel)
    np.testing.assert_array_equal(footprint(sched).hits, footprint_2d_bruteforce(sched).hits)


rates_st = st.lists(st.integers(1, 10), min_size=1, max_size=4)


@settings(max_examples=200, deadline=None)
@given(rates=rates_st, kernel=st.sampled_from([3, 5]))
def test_properties(rates, kernel):
    sched = DilationSchedule(tuple(rates), kernel)
    gaps = max_gap_sequence(sched)
    assert gaps[-1] == rates[-1]
    assert all(m >= 1 for m in gaps)
    g = footprint(sched)
    assert g.size == receptive_field(sched)
    np.testing.assert_array_equal(g.hits, g.hits[::-1, ::-1])
    assert g.hits[g.extent, g.extent]


@settings(max_examples=200, deadline=None)
@given(rates=rates_st, kernel=st.sampled_from([3, 5]))
def test_prepending_rate_one_keeps_passing(rates, kernel):
    rates = sorted(rates)
    if check_gridding(DilationSchedule(tuple(rates), kernel)).passes:
        assert check_gridding(DilationSchedule((1, *rates), kernel)).passes


def test_report_text_order():
    text = check_gridding(DilationSchedule((1, 2, 5), 3)).as_text()
    keys = [line.split(":")[0] for line in text.splitlines()]
    assert keys == ["rates", "max_gaps", "m2", "passes", "receptive_field"]


def test_render_ascii():
    art = render_ascii(footprint(DilationSchedule((2,), 3), skip=False))
    assert art.splitlines()[0] == "#.#.#"
    assert art.splitlines()[1] == "....."
