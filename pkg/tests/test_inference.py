import random

import pytest
from hypothesis import given, strategies as st

from tempmig.inference import (
    daily_locations,
    hourly_locations,
    mode_cell,
    monthly_locations,
)
from tempmig.timeutil import month_index, ordinal_of

D = ordinal_of(2013, 5, 10)


def test_mode_strict_majority():
    assert mode_cell({3: 2, 5: 1}) == 3


def test_mode_tie_smallest_id():
    assert mode_cell({5: 1, 3: 1}) == 3


def test_mode_matches_exhaustive_count():
    rng = random.Random(0)
    draws = [rng.randint(0, 9) for _ in range(1000)]
    counts = {}
    for d in draws:
        counts[d] = counts.get(d, 0) + 1
    best = min(c for c in counts if counts[c] == max(counts.values()))
    assert mode_cell(counts) == best


def test_mode_empty_rejected():
    with pytest.raises(ValueError):
        mode_cell({})


def test_hourly_same_cell():
    records = [(D, 9, 2), (D, 9, 2)]
    assert hourly_locations(records) == {(D, 9): 2}


def test_hourly_tie_rule():
    assert hourly_locations([(D, 9, 2), (D, 9, 7)]) == {(D, 9): 2}


def test_hourly_matches_brute_regrouping():
    rng = random.Random(1)
    records = [(D + rng.randint(0, 3), rng.randint(0, 23), rng.randint(0, 4)) for _ in range(400)]
    got = hourly_locations(records)
    slots = {}
    for day, hour, cell in records:
        slots.setdefault((day, hour), []).append(cell)
    for slot, cells in slots.items():
        counts = {c: cells.count(c) for c in set(cells)}
        top = max(counts.values())
        assert got[slot] == min(c for c in counts if counts[c] == top)


def test_daily_prefers_night_over_day():
    hourly = {(D, 19): 1, (D + 1, 6): 1, (D, 10): 2}
    daily = daily_locations(hourly)
    assert daily[D] == 1


def test_daily_daytime_fallback():
    assert daily_locations({(D, 10): 2})[D] == 2


def test_daily_early_morning_belongs_to_previous_day():
    # a record only at 3am of D+1 defines day D, not D+1
    daily = daily_locations({(D + 1, 3): 4})
    assert daily == {D: 4}


def test_daily_matches_night_set_enumeration():
    rng = random.Random(2)
    hourly = {}
    for _ in range(300):
        hourly[(D + rng.randint(0, 9), rng.randint(0, 23))] = rng.randint(0, 3)
    got = daily_locations(hourly)
    days = range(D - 1, D + 11)
    for day in days:
        night, daytime = [], []
        for (d, h), cell in hourly.items():
            if (d == day and h >= 18) or (d == day + 1 and h <= 7):
                night.append(cell)
            elif d == day and 8 <= h <= 17:
                daytime.append(cell)
        pool = night or daytime
        if not pool:
            assert day not in got
            continue
        counts = {c: pool.count(c) for c in set(pool)}
        top = max(counts.values())
        assert got[day] == min(c for c in counts if counts[c] == top)


def test_monthly_needs_ten_days():
    daily = {ordinal_of(2013, 5, d): 1 for d in range(1, 11)}  # 10 days
    m = month_index(ordinal_of(2013, 5, 1))
    assert monthly_locations(daily) == {m: 1}
    daily_nine = {ordinal_of(2013, 5, d): 1 for d in range(1, 10)}
    assert monthly_locations(daily_nine) == {}


def test_monthly_mode():
    daily = {}
    for d in range(1, 6):
        daily[ordinal_of(2013, 5, d)] = 0  # 5 days at A
    for d in range(6, 10):
        daily[ordinal_of(2013, 5, d)] = 1  # 4 at B
    for d in range(10, 13):
        daily[ordinal_of(2013, 5, d)] = 2  # 3 at C
    m = month_index(ordinal_of(2013, 5, 1))
    assert monthly_locations(daily)[m] == 0


@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 23), st.integers(0, 4)), min_size=1, max_size=80))
def test_record_order_invariance(items):
    records = [(D + off, h, c) for off, h, c in items]
    shuffled = list(records)
    random.Random(3).shuffle(shuffled)
    assert hourly_locations(records) == hourly_locations(shuffled)
    assert daily_locations(hourly_locations(records)) == daily_locations(hourly_locations(shuffled))


@given(st.dictionaries(st.integers(0, 40), st.integers(0, 3), min_size=1))
def test_constant_user_constant_series(days):
    daily = {D + off: 1 for off in days}
    months = monthly_locations(daily)
    assert all(v == 1 for v in months.values())


def test_removing_records_never_relocates_untouched_days():
    hourly = {(D, 20): 1, (D, 21): 1, (D + 2, 19): 2, (D + 2, 10): 3}
    full = daily_locations(hourly)
    reduced = daily_locations({k: v for k, v in hourly.items() if k[0] != D + 2})
    for day in reduced:
        assert full[day] == reduced[day]
