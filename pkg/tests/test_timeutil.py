from datetime import date

import pytest
from hypothesis import given, strategies as st

from tempmig.timeutil import (
    HalfMonth,
    day_of_timestamp,
    halfmonth_of,
    halfmonths_between,
    month_bounds,
    month_index,
    next_halfmonth,
    ordinal_of,
    overlap_days,
)


def test_day_of_timestamp_epoch():
    assert day_of_timestamp(0) == date(1970, 1, 1).toordinal()
    assert day_of_timestamp(86399) == date(1970, 1, 1).toordinal()
    assert day_of_timestamp(86400) == date(1970, 1, 2).toordinal()


def test_halfmonth_bounds():
    h1 = HalfMonth(2013, 2, 1)
    h2 = HalfMonth(2013, 2, 2)
    assert h1.start == ordinal_of(2013, 2, 1)
    assert h1.end == ordinal_of(2013, 2, 15)
    assert h2.start == ordinal_of(2013, 2, 16)
    assert h2.end == ordinal_of(2013, 2, 28)
    assert h2.n_days == 13  # shortest unit of the year
    assert HalfMonth(2013, 1, 2).n_days == 16  # longest


def test_24_units_per_year_and_duration_range():
    units = halfmonths_between(ordinal_of(2013, 1, 1), ordinal_of(2013, 12, 31))
    assert len(units) == 24
    assert all(13 <= u.n_days <= 16 for u in units)
    # contiguous, non-overlapping cover of the year
    for a, b in zip(units, units[1:]):
        assert b.start == a.end + 1


def test_halfmonth_of_day_boundary():
    assert halfmonth_of(ordinal_of(2013, 3, 15)).half == 1
    assert halfmonth_of(ordinal_of(2013, 3, 16)).half == 2


def test_next_halfmonth_wraps_year():
    assert next_halfmonth(HalfMonth(2013, 12, 2)) == HalfMonth(2014, 1, 1)


def test_month_bounds_roundtrip():
    m = month_index(ordinal_of(2014, 6, 17))
    lo, hi = month_bounds(m)
    assert lo == ordinal_of(2014, 6, 1)
    assert hi == ordinal_of(2014, 6, 30)


@given(st.integers(0, 10**6))
def test_month_index_monotone(ts):
    d = day_of_timestamp(ts * 1000)
    assert month_bounds(month_index(d))[0] <= d <= month_bounds(month_index(d))[1]


def test_overlap_days():
    assert overlap_days(1, 10, 5, 20) == 6
    assert overlap_days(1, 4, 5, 20) == 0
    assert overlap_days(5, 5, 5, 5) == 1
