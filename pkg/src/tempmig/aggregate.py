"""Half-month flow, stock and observation-status aggregation.

Per (user, half-month) the engine decides three measures:

* departures: migration stays whose observed start falls in the unit,
  provided the unobserved run before the unit start stays within the
  tolerance; the optional low-confidence path also counts duration-
  ambiguous stays whose maximum admissible window reaches ``tau_min``.
* returns: the mirror image on observed end dates.
* stock: migration stays overlapping the unit on at least ``sigma`` days.

Each measure also carries an observation status.  A user is *unobserved*
for a measure when some admissible placement of stays inside their
observation gaps would change the measure's outcome; the decision is a
case table over gap/segment geometry (left, right, full-cover and interior
gaps, sample entry and exit, and non-home stays that may conceal a longer
stay).  Every case predicate carries a short id (``dep-g-left``,
``stk-conceal-right``...) so a verdict can be traced to one rule.

Counted events take precedence over unobserved verdicts: a user with a
definite departure in the unit has a determined (true) outcome no matter
what else their gaps could hide.
"""

from __future__ import annotations

import csv
import gzip
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .segments import MacroSegment, MesoSegment
from .timeutil import HalfMonth, halfmonths_between, overlap_days

MEASURES = ("depart", "return", "stock")

EVENT = "event"
NO_EVENT = "no_event"
UNOBSERVED = "unobserved"

# Half-month rows removed at each corpus-window edge, by minimum migration
# duration: (units at a leading edge, units at the trailing edge of the
# final window).  Trailing edges of non-final windows use the leading count.
EDGE_EXCLUSION_SCHEDULE: dict[int, tuple[int, int]] = {20: (1, 1), 30: (2, 2), 60: (4, 2)}


@dataclass(frozen=True)
class AggregationParams:
    tau_min_days: int = 20
    eps_tol_days: int = 7
    sigma_days: int = 8
    eps_gap_meso_days: int = 7
    low_confidence: bool = False

    def __post_init__(self):
        if self.sigma_days > 13:
            raise ValueError("sigma_days must not exceed the shortest half-month (13 days)")
        if self.eps_tol_days < 0 or self.tau_min_days <= 0:
            raise ValueError("bad aggregation parameters")


@dataclass
class UserTimeline:
    """One user's regularized location history: disjoint, sorted stays."""

    user_id: str
    segments: list[MesoSegment]
    macros: list[MacroSegment]

    def __post_init__(self):
        self.segments = sorted(self.segments, key=lambda s: s.start)

    @property
    def first_obs(self) -> int:
        return self.segments[0].start

    @property
    def last_obs(self) -> int:
        return self.segments[-1].end

    def home_cell_at(self, unit: HalfMonth) -> int:
        """Macro cell active during the unit: largest overlap, then nearest."""
        best_cell = -1
        best_key = None
        for i, macro in enumerate(self.macros):
            ov = overlap_days(unit.start, unit.end, macro.start, macro.end)
            if ov > 0:
                key = (1, ov, -i)
            else:
                distance = macro.start - unit.end if macro.start > unit.end else unit.start - macro.end
                key = (0, -distance, -i)
            if best_key is None or key > best_key:
                best_key = key
                best_cell = macro.cell
        return best_cell

    # -- window bounds used by the flow and conceal rules ------------------

    def _prev(self, i: int) -> MesoSegment | None:
        return self.segments[i - 1] if i > 0 else None

    def _next(self, i: int) -> MesoSegment | None:
        return self.segments[i + 1] if i + 1 < len(self.segments) else None

    def _w_start(self, i: int) -> int:
        """Earliest admissible start of stay i: day after the previous stay,
        or its own observed start at sample entry."""
        prev = self._prev(i)
        return prev.end + 1 if prev is not None else self.segments[i].start

    def _w_end(self, i: int) -> int:
        """Latest admissible end of stay i: day before the next stay, or its
        own observed end at sample exit."""
        nxt = self._next(i)
        return nxt.start - 1 if nxt is not None else self.segments[i].end

    def _gaps(self) -> Iterable[tuple[int, int, MesoSegment, MesoSegment]]:
        """Interior unobserved runs: (first day, last day, prev, next)."""
        for i in range(len(self.segments) - 1):
            a, b = self.segments[i], self.segments[i + 1]
            if b.start > a.end + 1:
                yield a.end + 1, b.start - 1, a, b


def _seg_overlap(seg: MesoSegment, unit: HalfMonth) -> int:
    return overlap_days(seg.start, seg.end, unit.start, unit.end)


# ---------------------------------------------------------------------------
# flows and stock

def departures(tl: UserTimeline, unit: HalfMonth, params: AggregationParams) -> list[int]:
    """Destination cells of migration departures attributed to the unit."""
    t0, t1 = unit.start, unit.end
    tau, eg = params.tau_min_days, params.eps_gap_meso_days
    dests = []
    for i, seg in enumerate(tl.segments):
        if seg.is_home or not (t0 <= seg.start <= t1):
            continue
        prev = tl._prev(i)
        if prev is None:
            continue  # start uncertainty unbounded at sample entry
        if (t0 - 1) - prev.end > params.eps_tol_days:
            continue  # unobserved run before the unit exceeds the tolerance
        if seg.min_duration >= tau:
            dests.append(seg.cell)  # dep-hi: certain duration
        elif params.low_confidence:
            # dep-lo: earliest in-unit start bounded by the previous stay
            # (same-cell stays cannot restart within the merge gap).
            min_start = prev.end + (eg + 1 if prev.cell == seg.cell else 1)
            window = tl._w_end(i) - max(t0, min_start) + 1
            if window >= tau:
                dests.append(seg.cell)
    return dests


def returns(tl: UserTimeline, unit: HalfMonth, params: AggregationParams) -> list[int]:
    """Destination cells of migration returns attributed to the unit."""
    t0, t1 = unit.start, unit.end
    tau, eg = params.tau_min_days, params.eps_gap_meso_days
    dests = []
    for i, seg in enumerate(tl.segments):
        if seg.is_home or not (t0 <= seg.end <= t1):
            continue
        nxt = tl._next(i)
        if nxt is None:
            continue  # end uncertainty unbounded at sample exit
        if (nxt.start - 1) - t1 > params.eps_tol_days:
            continue
        if seg.min_duration >= tau:
            dests.append(seg.cell)  # ret-hi
        elif params.low_confidence:
            # ret-lo: latest in-unit end bounded by the following stay
            max_end = nxt.start - (eg + 1 if nxt.cell == seg.cell else 1)
            window = min(t1, max_end) - tl._w_start(i) + 1
            if window >= tau:
                dests.append(seg.cell)
    return dests


def stock(tl: UserTimeline, unit: HalfMonth, params: AggregationParams) -> list[int]:
    """Destination of the user's in-migration status for the unit.

    At most one destination is reported per user and unit (the stay with
    the largest overlap wins), so summed stocks never exceed the number of
    observed users.
    """
    tau, eg, sigma = params.tau_min_days, params.eps_gap_meso_days, params.sigma_days
    candidates: list[tuple[int, int, int]] = []  # (overlap, -index, cell)
    for i, seg in enumerate(tl.segments):
        if seg.is_home:
            continue
        ov = _seg_overlap(seg, unit)
        if ov < sigma:
            continue
        if seg.min_duration >= tau:
            candidates.append((ov, -i, seg.cell))  # stk-hi
        elif params.low_confidence:
            prev, nxt = tl._prev(i), tl._next(i)
            min_start = prev.end + (eg + 1 if prev.cell == seg.cell else 1) if prev else seg.start
            max_end = nxt.start - (eg + 1 if nxt.cell == seg.cell else 1) if nxt else seg.end
            if max_end - min_start + 1 >= tau:
                candidates.append((ov, -i, seg.cell))  # stk-lo
    if not candidates:
        return []
    return [max(candidates)[2]]


# ---------------------------------------------------------------------------
# observation status case tables

def unobserved_departures(tl: UserTimeline, unit: HalfMonth, params: AggregationParams) -> str | None:
    """Case id if the user's departure outcome for the unit is undetermined."""
    t0, t1 = unit.start, unit.end
    tau, eg = params.tau_min_days, params.eps_gap_meso_days
    segs = tl.segments

    if tl.last_obs < t1:
        # dep-exit: unbounded gap overlapping or covering the unit leaves
        # room for an unseen departure inside it.
        return "dep-exit"

    if tl.first_obs > t0:
        first = segs[0]
        g1 = first.start - 1
        if first.start > t1:
            if g1 - t0 + 1 >= tau:
                return "dep-entry-full-gap"
            if not first.is_home and tl._w_end(0) - t0 + 1 >= tau:
                return "dep-entry-full-conceal"
        else:
            if g1 - t0 + 1 >= tau:
                return "dep-entry-left-gap"
            if not first.is_home and tl._w_end(0) - t0 + 1 >= tau:
                return "dep-entry-left-conceal"

    for g0, g1, prev, nxt in tl._gaps():
        if g1 < t0 or g0 > t1:
            continue
        left = g0 <= t0
        right = g1 >= t1
        if left and right:  # gap covers the unit
            if g1 - t0 + 1 >= tau:
                return "dep-g-full"
            if not nxt.is_home:
                min_start = prev.end + (eg + 2 if prev.cell == nxt.cell else 1)
                if min_start <= t1:
                    idx = segs.index(nxt)
                    if tl._w_end(idx) - max(t0, min_start) + 1 >= tau:
                        return "dep-conceal-full"
        elif left:
            # a stay hidden entirely inside the gap can start during the
            # unit when the in-unit part of the gap is at least tau long
            if g1 - t0 + 1 >= tau:
                return "dep-g-left"
            if not nxt.is_home:
                min_start = prev.end + (eg + 1 if prev.cell == nxt.cell else 1)
                idx = segs.index(nxt)
                window = tl._w_end(idx) - max(t0, min_start) + 1
                if window >= tau and (t0 - g0) > params.eps_tol_days:
                    return "dep-conceal-left"
        elif right:
            if g1 - g0 + 1 >= tau:
                return "dep-g-right"
            if not nxt.is_home:
                min_start = prev.end + (eg + 2 if prev.cell == nxt.cell else 1)
                if min_start <= t1:
                    idx = segs.index(nxt)
                    if tl._w_end(idx) - min_start + 1 >= tau:
                        return "dep-conceal-right"
        # interior gaps strictly inside the unit are too short to hide a
        # departure of at least tau days beyond what the flow rules handle
    return None


def unobserved_returns(tl: UserTimeline, unit: HalfMonth, params: AggregationParams) -> str | None:
    t0, t1 = unit.start, unit.end
    tau, eg = params.tau_min_days, params.eps_gap_meso_days
    segs = tl.segments

    if tl.first_obs > t0:
        # ret-entry: anything may have ended during the pre-entry void.
        return "ret-entry"

    if tl.last_obs < t1:
        last = segs[-1]
        g0 = last.end + 1
        if g0 <= t0:
            if t1 - g0 + 1 >= tau:
                return "ret-exit-full-gap"
            if not last.is_home and t1 - tl._w_start(len(segs) - 1) + 1 >= tau:
                return "ret-exit-full-conceal"
        else:
            if t1 - g0 + 1 >= tau:
                return "ret-exit-right-gap"
            if not last.is_home and t1 - tl._w_start(len(segs) - 1) + 1 >= tau:
                return "ret-exit-right-conceal"

    for g0, g1, prev, nxt in tl._gaps():
        if g1 < t0 or g0 > t1:
            continue
        left = g0 <= t0
        right = g1 >= t1
        if left and right:
            if t1 - g0 + 1 >= tau:
                return "ret-g-full"
            if not prev.is_home:
                max_end = nxt.start - (eg + 2 if nxt.cell == prev.cell else 1)
                if max_end >= t0:
                    idx = segs.index(prev)
                    if min(max_end, t1) - tl._w_start(idx) + 1 >= tau:
                        return "ret-conceal-full"
        elif left:
            if g1 - g0 + 1 >= tau:
                return "ret-g-left"
            if not prev.is_home:
                max_end = nxt.start - (eg + 2 if nxt.cell == prev.cell else 1)
                if max_end >= t0:
                    idx = segs.index(prev)
                    if min(max_end, t1) - tl._w_start(idx) + 1 >= tau:
                        return "ret-conceal-left"
        elif right:
            # a stay hidden entirely inside the gap can end during the unit
            # when the in-unit part of the gap is at least tau long
            if t1 - g0 + 1 >= tau:
                return "ret-g-right"
            if not prev.is_home:
                same = nxt.cell == prev.cell
                max_end = nxt.start - (eg + 2 if same else 1)
                if max_end >= t0:
                    idx = segs.index(prev)
                    window = min(max_end, t1) - tl._w_start(idx) + 1
                    tol_excess = (nxt.start - 1) - (max_end if same else t1)
                    if window >= tau and tol_excess > params.eps_tol_days:
                        return "ret-conceal-right"
    return None


def unobserved_stock(tl: UserTimeline, unit: HalfMonth, params: AggregationParams) -> str | None:
    t0, t1 = unit.start, unit.end
    tau, sigma = params.tau_min_days, params.sigma_days
    segs = tl.segments

    if tl.last_obs < t0:
        return "stk-exit-before"
    if tl.first_obs > t1:
        return "stk-entry-after"

    if tl.first_obs > t0:
        first = segs[0]
        if _seg_overlap(first, unit) < sigma and (first.start - 1) - t0 + 1 >= sigma:
            return "stk-entry-during"
    if tl.last_obs < t1:
        last = segs[-1]
        if _seg_overlap(last, unit) < sigma and t1 - (last.end + 1) + 1 >= sigma:
            return "stk-exit-during"

    for g0, g1, prev, nxt in tl._gaps():
        if g1 < t0 or g0 > t1:
            continue
        left = g0 <= t0
        right = g1 >= t1
        gap_len = g1 - g0 + 1
        prev_idx = segs.index(prev)
        nxt_idx = segs.index(nxt)
        if left and right:
            if gap_len >= tau:
                return "stk-g-full"
            if not prev.is_home and t1 - tl._w_start(prev_idx) + 1 >= tau:
                return "stk-conceal-full-prev"
            if not nxt.is_home and tl._w_end(nxt_idx) - t0 + 1 >= tau:
                return "stk-conceal-full-next"
        elif left:
            if _seg_overlap(nxt, unit) >= sigma:
                continue  # the observed stay settles the unit
            if gap_len >= tau and g1 - t0 + 1 >= sigma:
                return "stk-g-left"
            if not nxt.is_home and tl._w_end(nxt_idx) - t0 + 1 >= tau:
                return "stk-conceal-left-next"
            if not prev.is_home and g1 - tl._w_start(prev_idx) + 1 >= tau and g1 - t0 + 1 >= sigma:
                return "stk-conceal-left-prev"
        elif right:
            if _seg_overlap(prev, unit) >= sigma:
                continue
            if gap_len >= tau and t1 - g0 + 1 >= sigma:
                return "stk-g-right"
            if not prev.is_home and t1 - tl._w_start(prev_idx) + 1 >= tau:
                return "stk-conceal-right-prev"
            if not nxt.is_home and tl._w_end(nxt_idx) - g0 + 1 >= tau and t1 - g0 + 1 >= sigma:
                return "stk-conceal-right-next"
        else:  # gap strictly inside the unit
            if _seg_overlap(prev, unit) >= sigma or _seg_overlap(nxt, unit) >= sigma:
                continue
            if not nxt.is_home:
                w_end = tl._w_end(nxt_idx)
                if w_end - g0 + 1 >= tau and min(w_end, t1) - g0 + 1 >= sigma:
                    return "stk-conceal-within-next"
            if not prev.is_home:
                w_start = tl._w_start(prev_idx)
                if g1 - w_start + 1 >= tau and g1 - max(t0, w_start) + 1 >= sigma:
                    return "stk-conceal-within-prev"
    return None


# ---------------------------------------------------------------------------
# per-user outcomes and table reduction

@dataclass(frozen=True)
class UserPeriodOutcome:
    user_id: str
    unit: HalfMonth
    origin_cell: int
    measure: str
    status: str                 # EVENT / NO_EVENT / UNOBSERVED
    destinations: tuple[int, ...] = ()
    case: str | None = None


_STATUS_FNS = {
    "depart": (departures, unobserved_departures),
    "return": (returns, unobserved_returns),
    "stock": (stock, unobserved_stock),
}


def user_outcomes(
    tl: UserTimeline,
    units: Sequence[HalfMonth],
    params: AggregationParams,
) -> Iterable[UserPeriodOutcome]:
    """Outcome of every measure for every unit the user could determine.

    Units more than ``tau_min`` days away from the observation span are
    skipped: every measure is unobserved there and unobserved users enter
    neither counts nor denominators.
    """
    if not tl.segments:
        return
    lo = tl.first_obs - params.tau_min_days + 1
    hi = tl.last_obs + params.tau_min_days - 1
    for unit in units:
        if unit.end < lo or unit.start > hi:
            continue
        origin = tl.home_cell_at(unit)
        for measure, (count_fn, unobs_fn) in _STATUS_FNS.items():
            dests = count_fn(tl, unit, params)
            if dests:
                yield UserPeriodOutcome(tl.user_id, unit, origin, measure, EVENT, tuple(dests))
                continue
            case = unobs_fn(tl, unit, params)
            if case is not None:
                yield UserPeriodOutcome(tl.user_id, unit, origin, measure, UNOBSERVED, case=case)
            else:
                yield UserPeriodOutcome(tl.user_id, unit, origin, measure, NO_EVENT)


_MEASURE_COUNT_KEY = {"depart": "N_depart", "return": "N_return", "stock": "N_migrants"}
_MEASURE_OBS_KEY = {
    "depart": "N_users_observed_depart",
    "return": "N_users_observed_return",
    "stock": "N_users_observed_stock",
}


@dataclass
class MigrationTable:
    """Counts keyed by (origin region, destination region, half-month) with
    per-(origin, half-month) observation denominators."""

    weighted: bool = False
    counts: dict[tuple[str, str, HalfMonth], dict[str, float]] = field(default_factory=dict)
    observed: dict[tuple[str, HalfMonth], dict[str, float]] = field(default_factory=dict)
    dedup_dropped: int = 0
    skipped_no_weight: int = 0

    def add_outcome(self, outcome: UserPeriodOutcome, region_of: Callable[[int], str], weight: float = 1.0) -> None:
        origin = region_of(outcome.origin_cell)
        count_key = _MEASURE_COUNT_KEY[outcome.measure]
        obs_key = _MEASURE_OBS_KEY[outcome.measure]
        if outcome.status == UNOBSERVED:
            return
        obs = self.observed.setdefault((origin, outcome.unit), {k: 0.0 for k in _MEASURE_OBS_KEY.values()})
        obs[obs_key] += weight
        if outcome.status != EVENT:
            return
        dest_regions = sorted({region_of(c) for c in outcome.destinations})
        self.dedup_dropped += len(outcome.destinations) - len({region_of(c) for c in outcome.destinations})
        for dest in dest_regions:
            row = self.counts.setdefault(
                (origin, dest, outcome.unit), {k: 0.0 for k in _MEASURE_COUNT_KEY.values()}
            )
            row[count_key] += weight

    def merge(self, other: "MigrationTable") -> None:
        for key, row in other.counts.items():
            mine = self.counts.setdefault(key, {k: 0.0 for k in _MEASURE_COUNT_KEY.values()})
            for k, v in row.items():
                mine[k] += v
        for key, row in other.observed.items():
            mine = self.observed.setdefault(key, {k: 0.0 for k in _MEASURE_OBS_KEY.values()})
            for k, v in row.items():
                mine[k] += v
        self.dedup_dropped += other.dedup_dropped
        self.skipped_no_weight += other.skipped_no_weight

    def rows(self) -> list[dict]:
        """Sorted output rows: one per (origin, destination, unit) with any
        nonzero count, denominators replicated from the origin."""
        out = []
        for (origin, dest, unit) in sorted(self.counts, key=lambda k: (k[0], k[1], k[2].key())):
            row = self.counts[(origin, dest, unit)]
            if not any(v != 0 for v in row.values()):
                continue
            obs = self.observed.get((origin, unit), {k: 0.0 for k in _MEASURE_OBS_KEY.values()})
            rec = {
                "origin": origin,
                "destination": dest,
                "year": unit.year,
                "month": unit.month,
                "half": unit.half,
            }
            rec.update(row)
            rec.update(obs)
            for m in MEASURES:
                count = row[_MEASURE_COUNT_KEY[m]]
                denom = obs[_MEASURE_OBS_KEY[m]]
                rate_key = {"depart": "rate_depart", "return": "rate_return", "stock": "rate_migrants"}[m]
                rec[rate_key] = (count / denom) if denom else None
            out.append(rec)
        return out


def aggregate(
    timelines: Iterable[UserTimeline],
    units: Sequence[HalfMonth],
    region_of: Callable[[int], str],
    params: AggregationParams,
    weight_fn: Callable[[UserPeriodOutcome], float | None] | None = None,
) -> MigrationTable:
    """Fold per-user outcomes into a migration table.

    ``weight_fn`` maps an outcome to the user's post-stratification weight
    for that unit and measure; outcomes whose weight is undefined are
    excluded and counted.  Without it every user contributes 1.
    """
    table = MigrationTable(weighted=weight_fn is not None)
    for tl in timelines:
        for outcome in user_outcomes(tl, units, params):
            if outcome.status == UNOBSERVED:
                continue
            if weight_fn is None:
                table.add_outcome(outcome, region_of)
            else:
                w = weight_fn(outcome)
                if w is None:
                    table.skipped_no_weight += 1
                    continue
                table.add_outcome(outcome, region_of, weight=w)
    return table


# ---------------------------------------------------------------------------
# edge exclusion and serialization

def excluded_units(windows: Sequence[tuple[int, int]], tau_min_days: int) -> set[HalfMonth]:
    """Half-months dropped at corpus-window edges for a duration threshold."""
    if tau_min_days not in EDGE_EXCLUSION_SCHEDULE:
        # interpolate conservatively: smallest scheduled threshold above
        candidates = [t for t in EDGE_EXCLUSION_SCHEDULE if t >= tau_min_days]
        key = min(candidates) if candidates else max(EDGE_EXCLUSION_SCHEDULE)
    else:
        key = tau_min_days
    lead, final_trail = EDGE_EXCLUSION_SCHEDULE[key]
    dropped: set[HalfMonth] = set()
    ordered = sorted(windows)
    for w_index, (w0, w1) in enumerate(ordered):
        units = halfmonths_between(w0, w1)
        trail = final_trail if w_index == len(ordered) - 1 else lead
        dropped.update(units[:lead])
        if trail:
            dropped.update(units[-trail:])
    return dropped


def exclude_edges(table: MigrationTable, tau_min_days: int, windows: Sequence[tuple[int, int]]) -> MigrationTable:
    dropped = excluded_units(windows, tau_min_days)
    table.counts = {k: v for k, v in table.counts.items() if k[2] not in dropped}
    table.observed = {k: v for k, v in table.observed.items() if k[1] not in dropped}
    return table


_BASE_COLUMNS = [
    "origin", "destination", "year", "month", "half",
    "N_depart", "N_return", "N_migrants",
    "N_users_observed_depart", "N_users_observed_return", "N_users_observed_stock",
    "rate_depart", "rate_return", "rate_migrants",
]
_MEASURE_COLUMNS = _BASE_COLUMNS[5:]


def _format_value(value, weighted: bool) -> str:
    if value is None:
        return ""
    if not weighted and float(value).is_integer():
        return str(int(value))
    return f"{value:.9g}"


def write_table(table: MigrationTable, path) -> None:
    """CSV (gzip when the path ends in .gz, with a pinned mtime so repeated
    runs are byte-identical)."""
    columns = list(_BASE_COLUMNS)
    if table.weighted:
        columns = columns[:5] + [c + "_adj" for c in _MEASURE_COLUMNS]
    text_rows = []
    for rec in table.rows():
        base = [rec["origin"], rec["destination"], str(rec["year"]), str(rec["month"]), str(rec["half"])]
        values = [
            rec["N_depart"], rec["N_return"], rec["N_migrants"],
            rec["N_users_observed_depart"], rec["N_users_observed_return"], rec["N_users_observed_stock"],
            rec["rate_depart"], rec["rate_return"], rec["rate_migrants"],
        ]
        formatted = [
            _format_value(v, table.weighted or i >= 6)
            for i, v in enumerate(values)
        ]
        text_rows.append(base + formatted)

    def _write(fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(text_rows)

    if str(path).endswith(".gz"):
        with open(path, "wb") as raw:
            with gzip.GzipFile(fileobj=raw, mode="wb", mtime=0) as gz:
                import io

                buf = io.TextIOWrapper(gz, encoding="utf-8", newline="")
                _write(buf)
                buf.flush()
                buf.detach()
    else:
        with open(path, "w", newline="") as fh:
            _write(fh)


def read_table(path) -> list[dict[str, str]]:
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "rt") as fh:
        return list(csv.DictReader(fh))


def tables_equal(a: MigrationTable, b: MigrationTable, tol: float = 0.0) -> bool:
    return count_table_diff(a, b, tol) == 0


def count_table_diff(a: MigrationTable, b: MigrationTable, tol: float = 0.0) -> int:
    """Number of differing (origin, destination, unit) rows or denominators."""
    diffs = 0
    for key in set(a.counts) | set(b.counts):
        ra = a.counts.get(key, {k: 0.0 for k in _MEASURE_COUNT_KEY.values()})
        rb = b.counts.get(key, {k: 0.0 for k in _MEASURE_COUNT_KEY.values()})
        if any(abs(ra[k] - rb[k]) > tol for k in ra):
            diffs += 1
    for key in set(a.observed) | set(b.observed):
        ra = a.observed.get(key, {k: 0.0 for k in _MEASURE_OBS_KEY.values()})
        rb = b.observed.get(key, {k: 0.0 for k in _MEASURE_OBS_KEY.values()})
        if any(abs(ra[k] - rb[k]) > tol for k in ra):
            diffs += 1
    return diffs
