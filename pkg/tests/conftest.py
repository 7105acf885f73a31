import pytest

from tempmig.aggregate import AggregationParams
from tempmig.segments import MacroSegment, MesoSegment
from tempmig.aggregate import UserTimeline
from tempmig.timeutil import HalfMonth

# reference unit for geometry fixtures: 2013-03-16 .. 2013-03-31 (16 days)
UNIT = HalfMonth(2013, 3, 2)
T0 = UNIT.start
T1 = UNIT.end

HOME = 0
AWAY = 5
OTHER = 3


def make_timeline(segs, home=HOME, user="u"):
    """Timeline from (cell, start, end) day-offset triples relative to T0.

    Offsets may be negative; min/max durations are filled the way the
    detection layer would (observed span; neighbours bound the maximum).
    """
    segments = []
    for cell, a, b in segs:
        segments.append(
            MesoSegment(cell=cell, start=T0 + a, end=T0 + b, macro_cell=home)
        )
    segments.sort(key=lambda s: s.start)
    for i, seg in enumerate(segments):
        seg.min_duration = seg.end - seg.start + 1
        earliest = segments[i - 1].end + 1 if i > 0 else seg.start
        latest = segments[i + 1].start - 1 if i + 1 < len(segments) else seg.end
        seg.max_duration = latest - earliest + 1
    macro = MacroSegment(home, segments[0].start, segments[-1].end)
    return UserTimeline(user, segments, [macro])


def params(tau=20, tol=7, sigma=8, eps_gap=7, low=False):
    return AggregationParams(
        tau_min_days=tau,
        eps_tol_days=tol,
        sigma_days=sigma,
        eps_gap_meso_days=eps_gap,
        low_confidence=low,
    )
