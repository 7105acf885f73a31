"""Independent verification of the detection and aggregation stack.

Two routes:

* :func:`truth_tables` reads planted ground truth directly.  On a fully
  observed corpus it needs no detection at all: a departure is a planted
  stay starting in the unit, a return one ending there, the stock is any
  stay overlapping the unit enough, and every agent is observed
  everywhere.  The pipeline must reproduce these tables exactly.
* :func:`brute_table` re-derives everything from daily series with naive
  day-level scans: a from-scratch reimplementation of the grouping rules
  and of the flow/stock/status decisions, written around uniform
  "admissible placement" formulas instead of the pipeline's case tables.
  It exists to catch mechanical mistakes in either side, also on corpora
  with observation gaps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .aggregate import (
    AggregationParams,
    EVENT,
    MigrationTable,
    NO_EVENT,
    UNOBSERVED,
    UserPeriodOutcome,
)
from .inference import mode_cell
from .segments import DetectionParams
from .synth import GroundTruth, daily_series_of
from .timeutil import HalfMonth, halfmonths_between, month_bounds, month_index, overlap_days


# ---------------------------------------------------------------------------
# route 1: straight from planted truth (fully observed corpora)

def truth_tables(
    truth: GroundTruth,
    units: Sequence[HalfMonth],
    params: AggregationParams,
    region_of: Callable[[int], str],
) -> MigrationTable:
    config = truth.config
    if config.p_day_unobserved > 0 or config.long_gaps_per_agent > 0:
        raise ValueError("truth_tables requires a fully observed corpus")
    if config.p_home_change > 0:
        raise ValueError("truth_tables assumes constant homes")
    w0, w1 = truth.window
    first_unit = units[0] if units else None
    if units and (units[0].start < w0 or units[-1].end > w1):
        raise ValueError("units must lie inside the corpus window")

    table = MigrationTable()
    for agent in truth.agents:
        home = agent.home
        by_unit_depart: dict[HalfMonth, list[int]] = {}
        by_unit_return: dict[HalfMonth, list[int]] = {}
        for stay in agent.stays:
            if stay.n_days >= params.tau_min_days:
                if stay.start > w0:
                    from .timeutil import halfmonth_of

                    by_unit_depart.setdefault(halfmonth_of(stay.start), []).append(stay.destination)
                if stay.end < w1:
                    from .timeutil import halfmonth_of

                    by_unit_return.setdefault(halfmonth_of(stay.end), []).append(stay.destination)
        for unit in units:
            stock_candidates = [
                (overlap_days(s.start, s.end, unit.start, unit.end), -i, s.destination)
                for i, s in enumerate(agent.stays)
                if s.n_days >= params.tau_min_days
                and overlap_days(s.start, s.end, unit.start, unit.end) >= params.sigma_days
            ]
            outcomes = {
                "depart": tuple(by_unit_depart.get(unit, ())),
                "return": tuple(by_unit_return.get(unit, ())),
                "stock": (max(stock_candidates)[2],) if stock_candidates else (),
            }
            for measure, dests in outcomes.items():
                status = EVENT if dests else NO_EVENT
                table.add_outcome(
                    UserPeriodOutcome(agent.agent_id, unit, home, measure, status, dests),
                    region_of,
                )
    return table


# ---------------------------------------------------------------------------
# route 2: naive day-level re-derivation

@dataclass
class _Stay:
    cell: int
    start: int
    end: int
    home: int

    @property
    def is_home(self) -> bool:
        return self.cell == self.home

    @property
    def n_days(self) -> int:
        return self.end - self.start + 1


def _brute_monthly(daily: dict[int, int], min_days: int) -> dict[int, int]:
    months: dict[int, list[int]] = {}
    for day, cell in daily.items():
        months.setdefault(month_index(day), []).append(cell)
    out = {}
    for m, cells in months.items():
        if len(cells) >= min_days:
            counts: dict[int, int] = {}
            for c in cells:
                counts[c] = counts.get(c, 0) + 1
            out[m] = mode_cell(counts)
    return out


def _brute_macros(daily: dict[int, int], params: DetectionParams) -> list[tuple[int, int, int]]:
    """(cell, start, end) macro intervals, re-derived month by month."""
    monthly = _brute_monthly(daily, 10)
    months = sorted(monthly)
    groups: list[list[int]] = []
    for m in months:
        if groups and monthly[groups[-1][-1]] == monthly[m] and m - groups[-1][-1] - 1 <= params.eps_gap_macro_months:
            groups[-1].append(m)
        else:
            groups.append([m])
    spans = [[monthly[g[0]], g[0], g[-1]] for g in groups]

    def span_days(span):
        return month_bounds(span[2])[1] - month_bounds(span[1])[0] + 1

    merged = True
    while merged:
        merged = False
        for i in range(len(spans)):
            for j in range(i + 1, len(spans)):
                if spans[i][0] != spans[j][0]:
                    continue
                between = [s for s in spans if s is not spans[i] and s is not spans[j]
                           and s[1] > spans[i][2] and s[2] < spans[j][1]]
                if between and sum(span_days(s) for s in between) < params.tau_max_days:
                    spans[i][2] = spans[j][2]
                    spans.pop(j)
                    merged = True
                    break
            if merged:
                break

    spans = [s for s in spans if span_days(s) >= params.tau_max_days]
    spans.sort(key=lambda s: (s[1], s[2]))
    while True:
        for i in range(len(spans) - 1):
            a, b = spans[i], spans[i + 1]
            if b[1] <= a[2]:
                if span_days(a) >= span_days(b):
                    b[1] = a[2] + 1
                else:
                    a[2] = b[1] - 1
                spans = [s for s in spans if s[1] <= s[2] and span_days(s) >= params.tau_max_days]
                spans.sort(key=lambda s: (s[1], s[2]))
                break
        else:
            break

    first_obs, last_obs = min(daily), max(daily)
    if len(spans) <= 1:
        counts: dict[int, int] = {}
        for cell in daily.values():
            counts[cell] = counts.get(cell, 0) + 1
        return [(mode_cell(counts), first_obs, last_obs)]
    out = []
    for cell, m0, m1 in spans:
        start = max(month_bounds(m0)[0], first_obs)
        end = min(month_bounds(m1)[1], last_obs)
        if start <= end:
            out.append((cell, start, end))
    if len(out) <= 1:
        counts = {}
        for cell in daily.values():
            counts[cell] = counts.get(cell, 0) + 1
        return [(mode_cell(counts), first_obs, last_obs)]
    return out


def _brute_segments(daily: dict[int, int], params: DetectionParams) -> list[list[int]]:
    """[cell, start, end] day-level stays, re-derived with naive scans."""
    days = sorted(daily)
    runs: list[list[int]] = []
    for d in days:
        c = daily[d]
        if runs and runs[-1][0] == c and d - runs[-1][2] - 1 <= params.eps_gap_meso_days:
            runs[-1][2] = d
        else:
            runs.append([c, d, d])

    changed = True
    while changed:
        changed = False
        for i in range(len(runs)):
            for j in range(i + 1, len(runs)):
                if runs[j][0] != runs[i][0]:
                    continue
                if runs[j][1] - runs[i][2] - 1 < params.eps_gap_meso_days:
                    runs[i][2] = max(runs[i][2], runs[j][2])
                    runs.pop(j)
                    changed = True
                break  # only the first same-cell run to the right matters
            if changed:
                break
        if changed:
            runs.sort(key=lambda r: (r[1], r[2]))

    kept = []
    for cell, start, end in runs:
        observed = [d for d in days if start <= d <= end]
        at = sum(1 for d in observed if daily[d] == cell)
        if observed and at / len(observed) >= params.phi:
            kept.append([cell, start, end])
    kept.sort(key=lambda r: (r[1], r[2]))

    while True:
        for i in range(len(kept) - 1):
            a, b = kept[i], kept[i + 1]
            if b[1] > a[2]:
                continue
            if b[2] <= a[2]:
                kept.pop(i + 1)
            else:
                overlap = a[2] - b[1] + 1
                a[2] = b[1] + (overlap + 1) // 2 - 1
                b[1] = a[2] + 1
                kept = [r for r in kept if r[1] <= r[2]]
                kept.sort(key=lambda r: (r[1], r[2]))
            break
        else:
            return kept


def _home_for_interval(macros, start: int, end: int) -> int:
    best = None
    best_key = None
    for i, (cell, m0, m1) in enumerate(macros):
        ov = overlap_days(start, end, m0, m1)
        if ov > 0:
            key = (1, ov, -i)
        else:
            dist = m0 - end if m0 > end else start - m1
            key = (0, -dist, -i)
        if best_key is None or key > best_key:
            best_key, best = key, cell
    return best


def brute_detect(daily: dict[int, int], params: DetectionParams) -> list[_Stay]:
    macros = _brute_macros(daily, params)
    stays = []
    for cell, start, end in _brute_segments(daily, params):
        stays.append(_Stay(cell, start, end, _home_for_interval(macros, start, end)))
    return stays


# --- admissible-placement decisions ---------------------------------------

_INF = 10 ** 9


def _brute_measure_events(stays, unit, params: AggregationParams):
    """(departures, returns, stock) destination lists for the unit."""
    t0, t1 = unit.start, unit.end
    tau, eg, tol = params.tau_min_days, params.eps_gap_meso_days, params.eps_tol_days
    dep, ret = [], []
    stock_cands = []
    for i, s in enumerate(stays):
        if s.is_home:
            continue
        prev_s = stays[i - 1] if i > 0 else None
        next_s = stays[i + 1] if i + 1 < len(stays) else None
        big = s.n_days >= tau
        if t0 <= s.start <= t1 and prev_s is not None and (t0 - 1) - prev_s.end <= tol:
            if big:
                dep.append(s.cell)
            elif params.low_confidence:
                lo = prev_s.end + (eg + 1 if prev_s.cell == s.cell else 1)
                hi = next_s.start - 1 if next_s else s.end
                if hi - max(t0, lo) + 1 >= tau:
                    dep.append(s.cell)
        if t0 <= s.end <= t1 and next_s is not None and (next_s.start - 1) - t1 <= tol:
            if big:
                ret.append(s.cell)
            elif params.low_confidence:
                hi = next_s.start - (eg + 1 if next_s.cell == s.cell else 1)
                lo = prev_s.end + 1 if prev_s else s.start
                if min(t1, hi) - lo + 1 >= tau:
                    ret.append(s.cell)
        ov = overlap_days(s.start, s.end, t0, t1)
        if ov >= params.sigma_days:
            if big:
                stock_cands.append((ov, -i, s.cell))
            elif params.low_confidence:
                lo = prev_s.end + (eg + 1 if prev_s.cell == s.cell else 1) if prev_s else s.start
                hi = next_s.start - (eg + 1 if next_s.cell == s.cell else 1) if next_s else s.end
                if hi - lo + 1 >= tau:
                    stock_cands.append((ov, -i, s.cell))
    stk = [max(stock_cands)[2]] if stock_cands else []
    return dep, ret, stk


def _gap_list(stays):
    """(g0, g1, prev, next) with sentinels for the unbounded ends."""
    gaps = [(-_INF, stays[0].start - 1, None, stays[0])]
    for a, b in zip(stays, stays[1:]):
        if b.start > a.end + 1:
            gaps.append((a.end + 1, b.start - 1, a, b))
    gaps.append((stays[-1].end + 1, _INF, stays[-1], None))
    return gaps


def _w_bounds(stays, stay):
    i = stays.index(stay)
    prev_s = stays[i - 1] if i > 0 else None
    next_s = stays[i + 1] if i + 1 < len(stays) else None
    lo = prev_s.end + 1 if prev_s else stay.start
    hi = next_s.start - 1 if next_s else stay.end
    return lo, hi


def _brute_unobs_depart(stays, unit, params: AggregationParams) -> bool:
    t0, t1 = unit.start, unit.end
    tau, eg, tol = params.tau_min_days, params.eps_gap_meso_days, params.eps_tol_days
    for g0, g1, prev_s, next_s in _gap_list(stays):
        if g1 < t0 or g0 > t1:
            continue
        start_floor = max(g0, t0)
        if start_floor <= t1 and (g1 == _INF or g1 - start_floor + 1 >= tau):
            return True  # an unseen stay could begin in the unit
        if next_s is not None and not next_s.is_home:
            if prev_s is None:
                min_start = -_INF
            else:
                same = prev_s.cell == next_s.cell
                left_edge = g0 <= t0 and g1 < t1
                min_start = prev_s.end + ((eg + 1 if left_edge else eg + 2) if same else 1)
            eff = max(t0, min_start)
            _, w_hi = _w_bounds(stays, next_s)
            if eff <= t1 and w_hi - eff + 1 >= tau:
                if prev_s is None:
                    return True  # start uncertainty unbounded
                if g0 <= t0 and g1 < t1:  # gap over the left edge: tolerance rules
                    if t0 - g0 > tol:
                        return True
                else:
                    return True
    return False


def _brute_unobs_return(stays, unit, params: AggregationParams) -> bool:
    t0, t1 = unit.start, unit.end
    tau, eg, tol = params.tau_min_days, params.eps_gap_meso_days, params.eps_tol_days
    for g0, g1, prev_s, next_s in _gap_list(stays):
        if g1 < t0 or g0 > t1:
            continue
        end_cap = min(g1, t1)
        if end_cap >= t0 and (g0 == -_INF or end_cap - g0 + 1 >= tau):
            return True
        if prev_s is not None and not prev_s.is_home:
            if next_s is None:
                max_end = _INF
            else:
                same = next_s.cell == prev_s.cell
                max_end = next_s.start - (eg + 2 if same else 1)
            if max_end < t0:
                continue
            w_lo, _ = _w_bounds(stays, prev_s)
            eff = min(t1, max_end)
            if eff - w_lo + 1 >= tau:
                if next_s is None:
                    return True
                if g0 > t0 and g1 >= t1:  # gap over the right edge: tolerance rules
                    same = next_s.cell == prev_s.cell
                    excess = (next_s.start - 1) - (max_end if same else t1)
                    if excess > tol:
                        return True
                else:
                    return True
    return False


def _brute_unobs_stock(stays, unit, params: AggregationParams) -> bool:
    t0, t1 = unit.start, unit.end
    tau, sigma = params.tau_min_days, params.sigma_days
    for g0, g1, prev_s, next_s in _gap_list(stays):
        if g1 < t0 or g0 > t1:
            continue
        settled = False
        for adjacent in (prev_s, next_s):
            if adjacent is not None and overlap_days(adjacent.start, adjacent.end, t0, t1) >= sigma:
                settled = True
        if settled:
            continue
        in_unit = min(g1, t1) - max(g0, t0) + 1
        room = _INF if (g0 == -_INF or g1 == _INF) else g1 - g0 + 1
        if in_unit >= sigma and room >= tau:
            return True
        if next_s is not None and not next_s.is_home:
            w_lo, w_hi = _w_bounds(stays, next_s)
            lo = max(t0, w_lo)
            if w_hi - lo + 1 >= tau and min(w_hi, t1) - lo + 1 >= sigma:
                return True
        if prev_s is not None and not prev_s.is_home:
            w_lo, w_hi = _w_bounds(stays, prev_s)
            hi = min(t1, w_hi)
            if hi - w_lo + 1 >= tau and hi - max(t0, w_lo) + 1 >= sigma:
                return True
    return False


def brute_user_outcomes(
    user_id: str,
    daily: dict[int, int],
    units: Sequence[HalfMonth],
    det_params: DetectionParams,
    agg_params: AggregationParams,
) -> list[UserPeriodOutcome]:
    stays = brute_detect(daily, det_params)
    if not stays:
        return []
    macros = _brute_macros(daily, det_params)
    lo = stays[0].start - agg_params.tau_min_days + 1
    hi = stays[-1].end + agg_params.tau_min_days - 1
    out = []
    unobs_fns = {
        "depart": _brute_unobs_depart,
        "return": _brute_unobs_return,
        "stock": _brute_unobs_stock,
    }
    for unit in units:
        if unit.end < lo or unit.start > hi:
            continue
        origin = _home_for_interval(macros, unit.start, unit.end)
        dep, ret, stk = _brute_measure_events(stays, unit, agg_params)
        for measure, dests in (("depart", dep), ("return", ret), ("stock", stk)):
            if dests:
                out.append(UserPeriodOutcome(user_id, unit, origin, measure, EVENT, tuple(dests)))
            elif unobs_fns[measure](stays, unit, agg_params):
                out.append(UserPeriodOutcome(user_id, unit, origin, measure, UNOBSERVED))
            else:
                out.append(UserPeriodOutcome(user_id, unit, origin, measure, NO_EVENT))
    return out


def brute_table(
    users_daily: dict[str, dict[int, int]],
    units: Sequence[HalfMonth],
    det_params: DetectionParams,
    agg_params: AggregationParams,
    region_of: Callable[[int], str],
) -> MigrationTable:
    table = MigrationTable()
    for user_id in sorted(users_daily):
        for outcome in brute_user_outcomes(user_id, users_daily[user_id], units, det_params, agg_params):
            table.add_outcome(outcome, region_of)
    return table
