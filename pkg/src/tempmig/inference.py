"""Hierarchical location inference: hourly, daily and monthly locations.

A user's raw records are reduced to modal locations at three resolutions.
Daily locations prefer night hours (6pm-8am): the night window of day ``d``
spans hours 18-23 of ``d`` plus hours 0-7 of ``d+1``, so early-morning
records are attributed to the previous civil day.  Days with no night
records fall back to the mode over daytime hours 8-17.  A consequence,
accepted and tested, is that a day can carry a location although all of its
defining records are timestamped on the next civil date.

Ties are always broken toward the smallest cell id, which makes every
level deterministic and invariant to record order.
"""

from __future__ import annotations

from typing import Iterable, Mapping

from .timeutil import month_bounds, month_index

NIGHT_EVENING = range(18, 24)   # hours of day d in night window N_d
NIGHT_MORNING = range(0, 8)     # hours of day d+1 in night window N_d
DAYTIME = range(8, 18)

DEFAULT_MIN_MONTH_DAYS = 10


def mode_cell(counts: Mapping[int, int]) -> int:
    """Most frequent cell; ties go to the smallest cell id.

    ``counts`` must be nonempty.
    """
    best_cell = -1
    best_count = 0
    for cell, count in counts.items():
        if count > best_count or (count == best_count and cell < best_cell):
            best_cell = cell
            best_count = count
    if best_count == 0:
        raise ValueError("mode of an empty multiset is undefined")
    return best_cell


def hourly_locations(records: Iterable[tuple[int, int, int]]) -> dict[tuple[int, int], int]:
    """Reduce ``(day, hour, cell)`` records to one cell per (day, hour).

    Also accepts pre-counted input via :func:`hourly_from_counts`.
    """
    counts: dict[tuple[int, int], dict[int, int]] = {}
    for day, hour, cell in records:
        slot = counts.setdefault((day, hour), {})
        slot[cell] = slot.get(cell, 0) + 1
    return {slot: mode_cell(c) for slot, c in counts.items()}


def hourly_from_counts(counts: Mapping[tuple[int, int], Mapping[int, int]]) -> dict[tuple[int, int], int]:
    return {slot: mode_cell(c) for slot, c in counts.items()}


def daily_locations(hourly: Mapping[tuple[int, int], int]) -> dict[int, int]:
    """Night-preferred daily locations from hourly locations.

    Returns a mapping day ordinal -> cell for every day whose night or
    daytime window contains at least one hourly location.
    """
    night: dict[int, dict[int, int]] = {}
    daytime: dict[int, dict[int, int]] = {}
    for (day, hour), cell in hourly.items():
        if hour >= 18:
            slot = night.setdefault(day, {})
        elif hour < 8:
            slot = night.setdefault(day - 1, {})
        else:
            slot = daytime.setdefault(day, {})
        slot[cell] = slot.get(cell, 0) + 1

    daily: dict[int, int] = {}
    for day, cells in night.items():
        daily[day] = mode_cell(cells)
    for day, cells in daytime.items():
        if day not in daily:
            daily[day] = mode_cell(cells)
    return daily


def monthly_locations(daily: Mapping[int, int], min_month_days: int = DEFAULT_MIN_MONTH_DAYS) -> dict[int, int]:
    """Modal daily location per serial month, defined only for months with
    at least ``min_month_days`` observed days."""
    per_month: dict[int, dict[int, int]] = {}
    month_days: dict[int, int] = {}
    for day, cell in daily.items():
        m = month_index(day)
        slot = per_month.setdefault(m, {})
        slot[cell] = slot.get(cell, 0) + 1
        month_days[m] = month_days.get(m, 0) + 1
    return {
        m: mode_cell(cells)
        for m, cells in per_month.items()
        if month_days[m] >= min_month_days
    }
