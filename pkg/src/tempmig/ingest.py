"""Streaming ingestion of raw CDR files into per-user location series.

Records arrive as ``user_id,timestamp,tower_id`` lines (plain or gzip).
Ingestion never materializes the record stream: each record folds into a
per-(user, day, hour) cell counter, so memory scales with the number of
distinct user-day-hour slots rather than with record volume.  For corpora
whose user population itself is too large, records can first be hash
partitioned into spill files and each partition reduced independently.

The module also owns the observational bookkeeping: per-user profiles
(span, fraction of days observed, longest unobserved run), the bot filter
on mean daily record counts, and subset selection under observational
constraints.
"""

from __future__ import annotations

import csv
import gzip
import os
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

from .inference import daily_locations, hourly_from_counts
from .network import LocationNetwork
from .timeutil import SECONDS_PER_DAY, day_of_timestamp, date_of

DEFAULT_BOT_THRESHOLD = 100.0


@dataclass(frozen=True)
class CdrRecord:
    user_id: str
    timestamp: int
    cell: int


@dataclass(frozen=True)
class ObservationProfile:
    user_id: str
    first_day: int
    last_day: int
    days_observed: int
    n_records: int
    max_gap_days: int

    @property
    def span_days(self) -> int:
        return self.last_day - self.first_day + 1

    @property
    def frac_observed(self) -> float:
        return self.days_observed / self.span_days

    @property
    def avg_records_per_day(self) -> float:
        return self.n_records / self.span_days


@dataclass(frozen=True)
class FilterConstraints:
    min_span_days: int
    min_frac_observed: float
    max_gap_days: int

    def __post_init__(self):
        if self.min_span_days < 1:
            raise ValueError("min_span_days must be >= 1")
        if not (0 < self.min_frac_observed <= 1):
            raise ValueError("min_frac_observed must be in (0, 1]")

    def admits(self, profile: ObservationProfile) -> bool:
        return (
            profile.span_days >= self.min_span_days
            and profile.frac_observed >= self.min_frac_observed
            and profile.max_gap_days <= self.max_gap_days
        )


SUBSET_A = FilterConstraints(min_span_days=330, min_frac_observed=0.80, max_gap_days=15)
SUBSET_B = FilterConstraints(min_span_days=250, min_frac_observed=0.50, max_gap_days=25)


@dataclass
class IngestCounters:
    lines: int = 0
    records: int = 0
    malformed: int = 0
    unknown_tower: int = 0

    def merge(self, other: "IngestCounters") -> None:
        self.lines += other.lines
        self.records += other.records
        self.malformed += other.malformed
        self.unknown_tower += other.unknown_tower


def open_maybe_gzip(path, mode: str = "rt") -> IO:
    if str(path).endswith(".gz"):
        return gzip.open(path, mode)
    return open(path, mode)


def parse_cdr_lines(
    lines: Iterable[str],
    tower_to_cell: dict[str, int],
    counters: IngestCounters,
) -> Iterator[CdrRecord]:
    """Yield well-formed records; count and skip everything else."""
    for line in lines:
        counters.lines += 1
        parts = line.rstrip("\n").split(",")
        if len(parts) != 3:
            counters.malformed += 1
            continue
        user_id, ts_text, tower_id = parts
        if not user_id:
            counters.malformed += 1
            continue
        try:
            ts = int(ts_text)
        except ValueError:
            counters.malformed += 1
            continue
        cell = tower_to_cell.get(tower_id)
        if cell is None:
            counters.unknown_tower += 1
            continue
        counters.records += 1
        yield CdrRecord(user_id, ts, cell)


class UserAccumulator:
    """Compact per-user state: (day, hour) -> cell -> record count."""

    __slots__ = ("slots", "record_days", "n_records")

    def __init__(self):
        self.slots: dict[tuple[int, int], dict[int, int]] = {}
        self.record_days: set[int] = set()
        self.n_records = 0

    def add(self, timestamp: int, cell: int) -> None:
        day = day_of_timestamp(timestamp)
        hour = (timestamp % SECONDS_PER_DAY) // 3600
        slot = self.slots.setdefault((day, hour), {})
        slot[cell] = slot.get(cell, 0) + 1
        self.record_days.add(day)
        self.n_records += 1

    def daily_series(self) -> dict[int, int]:
        return daily_locations(hourly_from_counts(self.slots))

    def profile(self, user_id: str) -> ObservationProfile:
        days = sorted(self.record_days)
        max_gap = 0
        for prev, cur in zip(days, days[1:]):
            gap = cur - prev - 1
            if gap > max_gap:
                max_gap = gap
        return ObservationProfile(
            user_id=user_id,
            first_day=days[0],
            last_day=days[-1],
            days_observed=len(days),
            n_records=self.n_records,
            max_gap_days=max_gap,
        )


def accumulate(records: Iterable[CdrRecord]) -> dict[str, UserAccumulator]:
    users: dict[str, UserAccumulator] = {}
    for rec in records:
        acc = users.get(rec.user_id)
        if acc is None:
            acc = users[rec.user_id] = UserAccumulator()
        acc.add(rec.timestamp, rec.cell)
    return users


def ingest_files(
    paths: Iterable,
    tower_to_cell: dict[str, int],
    counters: IngestCounters | None = None,
    spill_dir=None,
    n_partitions: int = 1,
) -> tuple[dict[str, UserAccumulator], IngestCounters]:
    """Reduce one or more CDR files to per-user accumulators.

    With ``n_partitions > 1`` records are first spilled to hash partitions
    on user id, then each partition is reduced on its own, which bounds
    peak memory by the largest partition's user population.
    """
    counters = counters or IngestCounters()
    if n_partitions <= 1:
        users: dict[str, UserAccumulator] = {}
        for path in paths:
            with open_maybe_gzip(path) as fh:
                for rec in parse_cdr_lines(fh, tower_to_cell, counters):
                    acc = users.get(rec.user_id)
                    if acc is None:
                        acc = users[rec.user_id] = UserAccumulator()
                    acc.add(rec.timestamp, rec.cell)
        return users, counters

    spill_dir = spill_dir or os.environ.get("TEMPMIG_TMPDIR") or "."
    os.makedirs(spill_dir, exist_ok=True)
    part_paths = [os.path.join(spill_dir, f"spill_{i:03d}.csv") for i in range(n_partitions)]
    part_files = [open(p, "w") for p in part_paths]
    try:
        for path in paths:
            with open_maybe_gzip(path) as fh:
                for rec in parse_cdr_lines(fh, tower_to_cell, counters):
                    idx = hash(rec.user_id) % n_partitions
                    part_files[idx].write(f"{rec.user_id},{rec.timestamp},{rec.cell}\n")
    finally:
        for fh in part_files:
            fh.close()

    users = {}
    for p in part_paths:
        with open(p) as fh:
            for line in fh:
                user_id, ts, cell = line.rstrip("\n").split(",")
                acc = users.get(user_id)
                if acc is None:
                    acc = users[user_id] = UserAccumulator()
                acc.add(int(ts), int(cell))
        os.remove(p)
    return users, counters


def filter_bots(
    profiles: dict[str, ObservationProfile],
    max_avg_records_per_day: float = DEFAULT_BOT_THRESHOLD,
) -> tuple[set[str], set[str]]:
    """Split users into (kept, removed): strictly more than the threshold
    of records per span day flags a bot-like identifier."""
    kept, removed = set(), set()
    for user_id, profile in profiles.items():
        if profile.avg_records_per_day > max_avg_records_per_day:
            removed.add(user_id)
        else:
            kept.add(user_id)
    return kept, removed


def select_subset(
    profiles: dict[str, ObservationProfile],
    constraints: FilterConstraints,
) -> set[str]:
    return {u for u, p in profiles.items() if constraints.admits(p)}


# ---------------------------------------------------------------------------
# CSV interfaces for the stage boundaries

def write_daily_series(users: dict[str, dict[int, int]], path) -> None:
    """Dump ``user_id,date,cell_id`` rows, sorted for determinism."""
    with open_maybe_gzip(path, "wt") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id", "date", "cell_id"])
        for user_id in sorted(users):
            series = users[user_id]
            for day in sorted(series):
                writer.writerow([user_id, date_of(day).isoformat(), series[day]])


def read_daily_series(path) -> dict[str, dict[int, int]]:
    from .timeutil import parse_iso_date

    users: dict[str, dict[int, int]] = {}
    with open_maybe_gzip(path, "rt") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            users.setdefault(row["user_id"], {})[parse_iso_date(row["date"])] = int(row["cell_id"])
    return users


def write_profiles(profiles: dict[str, ObservationProfile], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["user_id", "first_day", "last_day", "span_days", "days_observed",
             "frac_observed", "max_gap_days", "n_records"]
        )
        for user_id in sorted(profiles):
            p = profiles[user_id]
            writer.writerow(
                [user_id, date_of(p.first_day).isoformat(), date_of(p.last_day).isoformat(),
                 p.span_days, p.days_observed, f"{p.frac_observed:.6f}", p.max_gap_days, p.n_records]
            )


def read_profiles(path) -> dict[str, ObservationProfile]:
    from .timeutil import parse_iso_date

    out: dict[str, ObservationProfile] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            out[row["user_id"]] = ObservationProfile(
                user_id=row["user_id"],
                first_day=parse_iso_date(row["first_day"]),
                last_day=parse_iso_date(row["last_day"]),
                days_observed=int(row["days_observed"]),
                n_records=int(row["n_records"]),
                max_gap_days=int(row["max_gap_days"]),
            )
    return out


def write_user_list(users: Iterable[str], path) -> None:
    with open(path, "w") as fh:
        for user in sorted(users):
            fh.write(user + "\n")


def read_user_list(path) -> set[str]:
    with open(path) as fh:
        return {line.strip() for line in fh if line.strip()}
