"""Multi-scale stay detection on daily location series.

Two clustering passes produce the layers the aggregation stage consumes:

* macro-segments: month-level runs of at least ``tau_max_days`` marking the
  usual residence.  Users for whom zero or one run survives get a single
  macro at their preliminary home spanning the whole observation period.
* meso-segments: day-level runs tolerant of short observation gaps, merged
  across micro-trips, filtered by the fraction of days actually spent at
  the run's cell, and made pairwise disjoint by splitting overlaps at the
  middle day.

Every meso-segment is annotated with an observed (minimum) duration, a
maximum duration bounded by the adjacent observed days, and the macro cell
covering it.  Classification then tags non-home segments as migration
events (observed duration reaches ``tau_min``) or as ambiguous (only the
maximum duration reaches it).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .inference import mode_cell
from .timeutil import month_bounds, overlap_days


@dataclass(frozen=True)
class DetectionParams:
    tau_min_days: int = 20
    tau_max_days: int = 180
    eps_gap_macro_months: int = 6
    eps_gap_meso_days: int = 7
    phi: float = 0.5

    def __post_init__(self):
        if not (0 < self.tau_min_days <= self.tau_max_days):
            raise ValueError("need 0 < tau_min_days <= tau_max_days")
        if not (0 < self.phi <= 1):
            raise ValueError("phi must be in (0, 1]")


@dataclass(frozen=True)
class MacroSegment:
    cell: int
    start: int  # day ordinals, inclusive
    end: int

    @property
    def n_days(self) -> int:
        return self.end - self.start + 1


@dataclass
class MesoSegment:
    cell: int
    start: int
    end: int
    frac_days_at_cell: float = 1.0
    min_duration: int = 0
    max_duration: int = 0
    macro_cell: int = -1

    @property
    def is_home(self) -> bool:
        return self.cell == self.macro_cell

    @property
    def n_days(self) -> int:
        return self.end - self.start + 1


# classification tags
HOME = "home"
MICRO = "micro"
EVENT = "event"
AMBIGUOUS = "ambiguous"


@dataclass(frozen=True)
class MigrationEvent:
    origin: int       # macro cell at the time of the stay
    destination: int  # meso cell
    start: int
    end: int
    min_duration: int
    max_duration: int


def preliminary_home(daily: dict[int, int]) -> int:
    """Default unique home: modal daily location over the whole series."""
    if not daily:
        raise ValueError("empty daily series")
    counts: dict[int, int] = {}
    for cell in daily.values():
        counts[cell] = counts.get(cell, 0) + 1
    return mode_cell(counts)


# ---------------------------------------------------------------------------
# macro detection (month level)

@dataclass
class _MonthGroup:
    cell: int
    first_month: int
    last_month: int

    def span_days(self) -> int:
        return month_bounds(self.last_month)[1] - month_bounds(self.first_month)[0] + 1


def _month_groups(monthly: dict[int, int], eps_gap_months: int) -> list[_MonthGroup]:
    groups: list[_MonthGroup] = []
    for m in sorted(monthly):
        cell = monthly[m]
        if groups and groups[-1].cell == cell and m - groups[-1].last_month - 1 <= eps_gap_months:
            groups[-1].last_month = m
        else:
            groups.append(_MonthGroup(cell, m, m))
    return groups


def _merge_same_cell(groups: list[_MonthGroup], tau_max_days: int) -> list[_MonthGroup]:
    """Merge same-cell groups separated by other groups whose total span is
    strictly below the macro threshold.  Separations that contain no group
    at all (long unobserved runs) are never bridged."""
    merged = [replace_group(g) for g in groups]
    changed = True
    while changed:
        changed = False
        for i in range(len(merged)):
            for j in range(i + 1, len(merged)):
                a, b = merged[i], merged[j]
                if a.cell != b.cell:
                    continue
                between = [
                    g for k, g in enumerate(merged)
                    if k != i and k != j and g.first_month > a.last_month and g.last_month < b.first_month
                ]
                if not between:
                    continue
                if sum(g.span_days() for g in between) < tau_max_days:
                    a.last_month = b.last_month
                    del merged[j]
                    changed = True
                    break
            if changed:
                break
    return merged


def replace_group(g: _MonthGroup) -> _MonthGroup:
    return _MonthGroup(g.cell, g.first_month, g.last_month)


def _resolve_month_overlaps(groups: list[_MonthGroup], tau_max_days: int) -> list[_MonthGroup]:
    groups = [g for g in groups if g.span_days() >= tau_max_days]
    groups.sort(key=lambda g: (g.first_month, g.last_month))
    while True:
        overlapped = False
        for i in range(len(groups) - 1):
            a, b = groups[i], groups[i + 1]
            if b.first_month <= a.last_month:
                overlapped = True
                # contested months go to the longer group
                if a.span_days() >= b.span_days():
                    b.first_month = a.last_month + 1
                else:
                    a.last_month = b.first_month - 1
                groups = [
                    g for g in groups
                    if g.first_month <= g.last_month and g.span_days() >= tau_max_days
                ]
                groups.sort(key=lambda g: (g.first_month, g.last_month))
                break
        if not overlapped:
            return groups


def detect_macro(
    monthly: dict[int, int],
    daily: dict[int, int],
    params: DetectionParams,
) -> list[MacroSegment]:
    """Macro-segments for one user.

    With two or more surviving month runs the runs become macro-segments
    (clamped to the observation period); with one or zero the user gets a
    single macro at the preliminary home over the whole period.
    """
    if not daily:
        return []
    first_obs = min(daily)
    last_obs = max(daily)
    groups = _month_groups(monthly, params.eps_gap_macro_months)
    groups = _merge_same_cell(groups, params.tau_max_days)
    groups = _resolve_month_overlaps(groups, params.tau_max_days)
    if len(groups) <= 1:
        return [MacroSegment(preliminary_home(daily), first_obs, last_obs)]
    macros = []
    for g in groups:
        start = max(month_bounds(g.first_month)[0], first_obs)
        end = min(month_bounds(g.last_month)[1], last_obs)
        if start <= end:
            macros.append(MacroSegment(g.cell, start, end))
    if len(macros) <= 1:
        return [MacroSegment(preliminary_home(daily), first_obs, last_obs)]
    return macros


# ---------------------------------------------------------------------------
# meso detection (day level)

def _day_runs(days: list[int], cells: list[int], eps_gap: int) -> list[MesoSegment]:
    runs: list[MesoSegment] = []
    for day, cell in zip(days, cells):
        if runs and runs[-1].cell == cell and day - runs[-1].end - 1 <= eps_gap:
            runs[-1].end = day
        else:
            runs.append(MesoSegment(cell=cell, start=day, end=day))
    return runs


def _merge_day_runs(runs: list[MesoSegment], eps_gap: int) -> list[MesoSegment]:
    """Merge same-cell runs strictly less than ``eps_gap`` days apart,
    bridging over runs at other cells."""
    by_cell: dict[int, list[MesoSegment]] = {}
    for run in runs:
        by_cell.setdefault(run.cell, []).append(run)
    merged: list[MesoSegment] = []
    for cell in by_cell:
        chain = by_cell[cell]
        current = chain[0]
        for nxt in chain[1:]:
            if nxt.start - current.end - 1 < eps_gap:
                current.end = nxt.end
            else:
                merged.append(current)
                current = nxt
        merged.append(current)
    merged.sort(key=lambda s: (s.start, s.end, s.cell))
    return merged


def _apply_frac_filter(segments: list[MesoSegment], daily: dict[int, int], phi: float) -> list[MesoSegment]:
    days = sorted(daily)
    import bisect

    kept = []
    for seg in segments:
        lo = bisect.bisect_left(days, seg.start)
        hi = bisect.bisect_right(days, seg.end)
        observed = days[lo:hi]
        at_cell = sum(1 for d in observed if daily[d] == seg.cell)
        frac = at_cell / len(observed) if observed else 0.0
        if frac >= phi:
            seg.frac_days_at_cell = frac
            kept.append(seg)
    return kept


def _resolve_meso_overlaps(segments: list[MesoSegment]) -> list[MesoSegment]:
    """Make segments pairwise disjoint.

    Partial overlaps are split at the middle day (odd overlaps give the
    extra day to the earlier segment).  A segment wholly contained in
    another is dropped: it is micro-scale noise inside a dominating stay.
    """
    segments = sorted(segments, key=lambda s: (s.start, s.end, s.cell))
    while True:
        changed = False
        for i in range(len(segments) - 1):
            a, b = segments[i], segments[i + 1]
            if b.start > a.end:
                continue
            changed = True
            if b.end <= a.end:
                contained = b if (b.start, -b.end) >= (a.start, -a.end) else a
                segments.remove(contained)
            else:
                overlap = a.end - b.start + 1
                new_end = b.start + (overlap + 1) // 2 - 1
                a.end = new_end
                b.start = new_end + 1
                segments = [s for s in segments if s.start <= s.end]
            segments.sort(key=lambda s: (s.start, s.end, s.cell))
            break
        if not changed:
            return segments


def detect_meso(daily: dict[int, int], params: DetectionParams) -> list[MesoSegment]:
    """Disjoint, time-sorted meso-segments from a daily series."""
    if not daily:
        return []
    days = sorted(daily)
    cells = [daily[d] for d in days]
    runs = _day_runs(days, cells, params.eps_gap_meso_days)
    merged = _merge_day_runs(runs, params.eps_gap_meso_days)
    filtered = _apply_frac_filter(merged, daily, params.phi)
    return _resolve_meso_overlaps(filtered)


# ---------------------------------------------------------------------------
# annotation and classification

def annotate(
    segments: list[MesoSegment],
    daily: dict[int, int],
    macros: list[MacroSegment],
) -> list[MesoSegment]:
    """Fill in min/max durations and the covering macro cell.

    The maximum duration spans from the day after the last observation
    preceding the segment to the day before the first observation
    following it; at the edges of the observation period the bound stops
    at the segment's own observed start or end.
    """
    days = sorted(daily)
    import bisect

    for seg in segments:
        seg.min_duration = seg.end - seg.start + 1
        lo = bisect.bisect_left(days, seg.start)
        hi = bisect.bisect_right(days, seg.end)
        earliest = days[lo - 1] + 1 if lo > 0 else seg.start
        latest = days[hi] - 1 if hi < len(days) else seg.end
        seg.max_duration = latest - earliest + 1
        seg.macro_cell = _macro_for(seg, macros)
    return segments


def _macro_for(seg: MesoSegment, macros: list[MacroSegment]) -> int:
    if not macros:
        return -1
    best = None
    best_key = None
    for i, macro in enumerate(macros):
        if macro.start <= seg.start and seg.end <= macro.end:
            return macro.cell
        ov = overlap_days(seg.start, seg.end, macro.start, macro.end)
        if ov > 0:
            key = (1, ov, -i)
        else:
            distance = macro.start - seg.end if macro.start > seg.end else seg.start - macro.end
            key = (0, -distance, -i)
        if best_key is None or key > best_key:
            best_key = key
            best = macro
    return best.cell


def classify_segment(seg: MesoSegment, tau_min_days: int) -> str:
    if seg.is_home:
        return HOME
    if seg.min_duration >= tau_min_days:
        return EVENT
    if seg.max_duration >= tau_min_days:
        return AMBIGUOUS
    return MICRO


def classify(segments: list[MesoSegment], tau_min_days: int) -> list[MigrationEvent]:
    """High-confidence migration events among annotated segments."""
    events = []
    for seg in segments:
        if classify_segment(seg, tau_min_days) == EVENT:
            events.append(
                MigrationEvent(
                    origin=seg.macro_cell,
                    destination=seg.cell,
                    start=seg.start,
                    end=seg.end,
                    min_duration=seg.min_duration,
                    max_duration=seg.max_duration,
                )
            )
    return events


def detect_user(daily: dict[int, int], monthly: dict[int, int], params: DetectionParams) -> tuple[list[MacroSegment], list[MesoSegment]]:
    """Full per-user detection: macros plus annotated meso-segments."""
    macros = detect_macro(monthly, daily, params)
    segments = detect_meso(daily, params)
    annotate(segments, daily, macros)
    return macros, segments
