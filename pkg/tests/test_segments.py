import random

import pytest
from hypothesis import given, settings, strategies as st

from tempmig.inference import monthly_locations
from tempmig.segments import (
    AMBIGUOUS,
    DetectionParams,
    EVENT,
    MacroSegment,
    MesoSegment,
    annotate,
    classify,
    classify_segment,
    detect_macro,
    detect_meso,
    detect_user,
    preliminary_home,
)
from tempmig.timeutil import month_bounds, ordinal_of

P = DetectionParams()
BASE = ordinal_of(2013, 1, 1)


def daily_from_months(month_cells, days_per_month=28):
    """Dense daily series: month i at month_cells[i] (None = unobserved)."""
    daily = {}
    for i, cell in enumerate(month_cells):
        if cell is None:
            continue
        year = 2013 + (i // 12)
        month = i % 12 + 1
        for d in range(1, days_per_month + 1):
            daily[ordinal_of(year, month, d)] = cell
    return daily


# ---------------------------------------------------------------------------
# preliminary home

def test_preliminary_home_majority():
    daily = {BASE + i: 0 for i in range(200)}
    daily.update({BASE + 200 + i: 1 for i in range(50)})
    assert preliminary_home(daily) == 0


def test_preliminary_home_tie():
    daily = {BASE + i: 1 for i in range(100)}
    daily.update({BASE + 100 + i: 0 for i in range(100)})
    assert preliminary_home(daily) == 0


def test_preliminary_home_matches_count_oracle():
    rng = random.Random(5)
    daily = {BASE + i: rng.randint(0, 4) for i in range(300)}
    counts = {}
    for c in daily.values():
        counts[c] = counts.get(c, 0) + 1
    top = max(counts.values())
    assert preliminary_home(daily) == min(c for c in counts if counts[c] == top)


# ---------------------------------------------------------------------------
# macro detection

def test_macro_single_location():
    daily = daily_from_months([0] * 12)
    macros = detect_macro(monthly_locations(daily), daily, P)
    assert len(macros) == 1
    assert macros[0].cell == 0
    assert macros[0].start == min(daily) and macros[0].end == max(daily)


def test_macro_short_trip_group_merged():
    # A x4, B x2, A x6: the B group (~2 months < 180 d) cannot be a macro;
    # the A groups merge across it and the user keeps home A.
    cells = [0] * 4 + [1] * 2 + [0] * 6
    daily = daily_from_months(cells)
    macros = detect_macro(monthly_locations(daily), daily, P)
    assert [m.cell for m in macros] == [0]
    assert macros[0].start == min(daily) and macros[0].end == max(daily)


def test_macro_two_residences():
    cells = [0] * 8 + [1] * 8
    daily = daily_from_months(cells)
    macros = detect_macro(monthly_locations(daily), daily, P)
    assert [m.cell for m in macros] == [0, 1]
    # boundary at the month break: august ends the first residence
    assert macros[0].end == ordinal_of(2013, 8, 31)
    assert macros[1].start == ordinal_of(2013, 9, 1)


def test_macro_gap_longer_than_eps_not_bridged():
    # 8 months at A, 7 unobserved months, 8 months at A: two groups, no
    # intervening group, so they must not merge into one span
    cells = [0] * 8 + [None] * 7 + [0] * 8
    daily = daily_from_months(cells)
    macros = detect_macro(monthly_locations(daily), daily, P)
    assert len(macros) == 2
    assert {m.cell for m in macros} == {0}


def test_macro_fallback_when_no_group_survives():
    # alternating monthly locations yield no >=180 d group; fall back to the
    # preliminary home over the whole observation span
    cells = [0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1]
    daily = daily_from_months(cells)
    macros = detect_macro(monthly_locations(daily), daily, P)
    assert len(macros) == 1
    assert macros[0].cell == 0
    assert macros[0].start == min(daily)


def test_macro_duration_invariant():
    rng = random.Random(11)
    for _ in range(20):
        cells = [rng.choice([0, 0, 0, 1]) for _ in range(18)]
        daily = daily_from_months(cells)
        macros = detect_macro(monthly_locations(daily), daily, P)
        if len(macros) > 1:
            for m in macros:
                assert m.n_days >= P.tau_max_days
        for a, b in zip(macros, macros[1:]):
            assert a.end < b.start


# ---------------------------------------------------------------------------
# meso detection

def test_meso_solid_month():
    daily = {BASE + i: 0 for i in range(30)}
    segs = detect_meso(daily, P)
    assert len(segs) == 1
    assert (segs[0].start, segs[0].end) == (BASE, BASE + 29)
    assert segs[0].frac_days_at_cell == 1.0


def test_meso_gap_boundary_tolerated():
    # days 1-10 observed, 7-day hole, days 18-25 observed, same cell
    daily = {BASE + i: 0 for i in range(10)}
    daily.update({BASE + 17 + i: 0 for i in range(8)})
    segs = detect_meso(daily, P)
    assert len(segs) == 1
    assert (segs[0].start, segs[0].end) == (BASE, BASE + 24)


def test_meso_gap_over_eps_splits():
    daily = {BASE + i: 0 for i in range(10)}
    daily.update({BASE + 18 + i: 0 for i in range(8)})  # 8-day hole
    runs = detect_meso(daily, P)
    assert len(runs) == 2


def test_meso_merge_is_strict():
    # same-cell groups exactly eps apart do not merge
    daily = {BASE + i: 0 for i in range(5)}
    daily.update({BASE + 5 + i: 1 for i in range(7)})  # other cell for 7 days
    daily.update({BASE + 12 + i: 0 for i in range(5)})
    segs = detect_meso(daily, P)
    assert sorted((s.cell, s.n_days) for s in segs) == [(0, 5), (0, 5), (1, 7)]


def test_meso_merge_bridges_micro_trips():
    daily = {BASE + i: 0 for i in range(30)}
    daily[BASE + 14] = 9  # one-day blip
    segs = detect_meso(daily, P)
    assert [s.cell for s in segs] == [0]
    assert segs[0].n_days == 30


def test_meso_phi_filter():
    # alternate two cells: both merged groups sit at ~0.5 share
    daily = {}
    for i in range(0, 60, 2):
        daily[BASE + i] = 0
        daily[BASE + i + 1] = 1
    segs = detect_meso(daily, DetectionParams(phi=0.6))
    assert segs == []


def test_meso_interleaved_matches_brute_simulator():
    from tempmig.oracle import _brute_segments

    rng = random.Random(23)
    for trial in range(30):
        daily = {}
        day = BASE
        for _ in range(rng.randint(5, 40)):
            cell = rng.choice([0, 0, 0, 1, 2])
            run = rng.randint(1, 12)
            for _ in range(run):
                daily[day] = cell
                day += 1
            day += rng.randint(0, 10)
        got = [(s.cell, s.start, s.end) for s in detect_meso(daily, P)]
        want = [tuple(r) for r in _brute_segments(daily, P)]
        assert got == want, f"trial {trial}"


def test_meso_segments_disjoint_sorted():
    rng = random.Random(29)
    for _ in range(20):
        daily = {BASE + i: rng.choice([0, 1]) for i in range(rng.randint(30, 200)) if rng.random() < 0.8}
        if not daily:
            continue
        segs = detect_meso(daily, P)
        for a, b in zip(segs, segs[1:]):
            assert a.end < b.start
        for s in segs:
            assert s.frac_days_at_cell >= P.phi


# ---------------------------------------------------------------------------
# annotation and classification

def test_annotate_duration_bounds():
    daily = {BASE + 7: 0}
    daily.update({BASE + 10 + i: 1 for i in range(31)})  # observed [10, 40]
    daily[BASE + 43] = 0
    daily.update({BASE + 50 + i: 0 for i in range(200)})
    macros = [MacroSegment(0, BASE, BASE + 260)]
    segs = annotate(detect_meso(daily, P), daily, macros)
    seg = next(s for s in segs if s.cell == 1)
    assert seg.min_duration == 31
    assert seg.max_duration == (BASE + 43) - (BASE + 7) - 1  # candidate days 8..42


def test_annotate_edge_bounds_stop_at_observed_ends():
    daily = {BASE + i: 1 for i in range(25)}
    macros = [MacroSegment(0, BASE, BASE + 24)]
    segs = annotate(detect_meso(daily, P), daily, macros)
    assert segs[0].min_duration == segs[0].max_duration == 25


def test_annotate_macro_covering():
    seg = MesoSegment(cell=1, start=BASE + 10, end=BASE + 40)
    macros = [MacroSegment(0, BASE, BASE + 100), MacroSegment(2, BASE + 101, BASE + 400)]
    annotate([seg], {BASE + 10: 1, BASE + 40: 1}, macros)
    assert seg.macro_cell == 0


def test_annotate_macro_largest_overlap():
    seg = MesoSegment(cell=1, start=BASE + 89, end=BASE + 130)
    macros = [MacroSegment(0, BASE, BASE + 100), MacroSegment(2, BASE + 101, BASE + 400)]
    annotate([seg], {BASE + 89: 1}, macros)
    # 12 days over macro 0, 30 days over macro 2
    assert seg.macro_cell == 2


def test_classification():
    def seg(cell, min_dur, max_dur, home=0):
        s = MesoSegment(cell=cell, start=BASE, end=BASE + min_dur - 1)
        s.min_duration, s.max_duration, s.macro_cell = min_dur, max_dur, home
        return s

    assert classify_segment(seg(1, 25, 30), 20) == EVENT
    assert classify_segment(seg(0, 60, 60), 20) == "home"
    assert classify_segment(seg(1, 15, 27), 20) == AMBIGUOUS
    assert classify_segment(seg(1, 15, 18), 20) == "micro"


def test_classify_emits_events():
    daily = {BASE + i: 0 for i in range(200)}
    daily.update({BASE + 200 + i: 1 for i in range(25)})
    daily.update({BASE + 225 + i: 0 for i in range(200)})
    macros, segs = detect_user(daily, monthly_locations(daily), P)
    events = classify(segs, 20)
    assert len(events) == 1
    assert events[0].origin == 0 and events[0].destination == 1
    assert events[0].min_duration == 25


def test_constant_user_one_macro_one_meso_no_events():
    daily = {BASE + i: 4 for i in range(300)}
    macros, segs = detect_user(daily, monthly_locations(daily), P)
    assert [m.cell for m in macros] == [4]
    assert [s.cell for s in segs] == [4]
    assert classify(segs, 20) == []


@settings(max_examples=30, deadline=None)
@given(st.lists(st.sampled_from([0, 0, 0, 1, 2]), min_size=20, max_size=120), st.integers(0, 2**30))
def test_pipeline_invariants_random_series(cells, seed):
    rng = random.Random(seed)
    daily = {}
    day = BASE
    for cell in cells:
        for _ in range(rng.randint(1, 6)):
            daily[day] = cell
            day += 1
        if rng.random() < 0.3:
            day += rng.randint(1, 9)
    macros, segs = detect_user(daily, monthly_locations(daily), P)
    assert macros
    for a, b in zip(segs, segs[1:]):
        assert a.end < b.start
    for s in segs:
        assert s.min_duration == s.end - s.start + 1
        assert s.min_duration <= s.max_duration
    for ev in classify(segs, 20):
        assert ev.min_duration >= 20
        assert ev.destination != ev.origin
