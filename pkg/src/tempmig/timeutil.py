"""Calendar arithmetic on day ordinals, months and half-month time units.

All dates are proleptic-Gregorian day ordinals (``datetime.date.toordinal``).
Timestamps are seconds since the Unix epoch in a single civil timezone
(UTC offset 0 for the corpora this package targets), so the civil date of a
record is just integer division by 86400.
"""

from __future__ import annotations

import calendar
from dataclasses import dataclass
from datetime import date

EPOCH_ORDINAL = date(1970, 1, 1).toordinal()  # 719163

SECONDS_PER_DAY = 86400


def day_of_timestamp(ts: int) -> int:
    """Civil date (day ordinal) of an epoch timestamp."""
    return EPOCH_ORDINAL + ts // SECONDS_PER_DAY


def hour_of_timestamp(ts: int) -> int:
    return (ts % SECONDS_PER_DAY) // 3600


def ordinal_of(year: int, month: int, day: int) -> int:
    return date(year, month, day).toordinal()


def date_of(ordinal: int) -> date:
    return date.fromordinal(ordinal)


def parse_iso_date(text: str) -> int:
    return date.fromisoformat(text).toordinal()


def month_index(ordinal: int) -> int:
    """Serial month number (year*12 + month-1) of a day ordinal."""
    d = date.fromordinal(ordinal)
    return d.year * 12 + d.month - 1


def month_bounds(mindex: int) -> tuple[int, int]:
    """First and last day ordinals of a serial month."""
    year, month = divmod(mindex, 12)
    month += 1
    last = calendar.monthrange(year, month)[1]
    return ordinal_of(year, month, 1), ordinal_of(year, month, last)


@dataclass(frozen=True, order=True)
class HalfMonth:
    """One half-month time unit: days 1-15, or day 16 to the end of month."""

    year: int
    month: int
    half: int  # 1 or 2

    @property
    def start(self) -> int:
        if self.half == 1:
            return ordinal_of(self.year, self.month, 1)
        return ordinal_of(self.year, self.month, 16)

    @property
    def end(self) -> int:
        if self.half == 1:
            return ordinal_of(self.year, self.month, 15)
        last = calendar.monthrange(self.year, self.month)[1]
        return ordinal_of(self.year, self.month, last)

    @property
    def n_days(self) -> int:
        return self.end - self.start + 1

    def key(self) -> tuple[int, int, int]:
        return (self.year, self.month, self.half)

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}-H{self.half}"


def halfmonth_of(ordinal: int) -> HalfMonth:
    d = date.fromordinal(ordinal)
    return HalfMonth(d.year, d.month, 1 if d.day <= 15 else 2)


def halfmonths_between(start_ordinal: int, end_ordinal: int) -> list[HalfMonth]:
    """All half-month units intersecting the inclusive ordinal range."""
    if end_ordinal < start_ordinal:
        return []
    units = []
    unit = halfmonth_of(start_ordinal)
    while unit.start <= end_ordinal:
        units.append(unit)
        unit = next_halfmonth(unit)
    return units


def next_halfmonth(unit: HalfMonth) -> HalfMonth:
    if unit.half == 1:
        return HalfMonth(unit.year, unit.month, 2)
    if unit.month == 12:
        return HalfMonth(unit.year + 1, 1, 1)
    return HalfMonth(unit.year, unit.month + 1, 1)


def overlap_days(a_start: int, a_end: int, b_start: int, b_end: int) -> int:
    """Days in the intersection of two inclusive ordinal ranges."""
    lo = max(a_start, b_start)
    hi = min(a_end, b_end)
    return hi - lo + 1 if hi >= lo else 0
