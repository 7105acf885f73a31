"""Synthetic CDR corpora with planted ground truth.

Each agent lives at a home cell and is planted with zero or more away
stays (temporary relocations to another cell) plus short micro-trips.
Placement keeps a configurable home spell between consecutive away
periods, keeps same-cell micro-trips apart, and never reuses an agent's
away-stay cells for micro-trips, so on a fully observed corpus the
detection layer recovers the planted stays with exact dates and the
planted truth doubles as the verification oracle.

Records are drawn in waking hours (8h-24h), which keeps every record of a
civil day inside that day's own night-or-daytime windows.  Observation
gaps come from i.i.d. day dropout plus optional longer runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator

import numpy as np

from .ingest import open_maybe_gzip
from .timeutil import parse_iso_date

DEFAULT_START = "2013-01-01"


@dataclass(frozen=True)
class ScenarioConfig:
    n_agents: int = 100
    n_cells: int = 25
    start: str = DEFAULT_START
    days: int = 730
    events_per_agent: float = 2.0
    event_min_days: int = 20
    event_max_days: int = 180
    min_home_spell_days: int = 8
    micro_trips_per_month: float = 1.0
    micro_trip_max_days: int = 4
    records_per_day_min: int = 2
    records_per_day_max: int = 6
    p_day_unobserved: float = 0.0
    long_gaps_per_agent: float = 0.0
    long_gap_min_days: int = 8
    long_gap_max_days: int = 20
    p_home_change: float = 0.0
    home_density_bias: float = 0.0  # >0 skews homes toward low-id cells
    seed: int = 0

    @property
    def start_ordinal(self) -> int:
        return parse_iso_date(self.start)

    def validate(self) -> None:
        if self.n_agents < 1 or self.n_cells < 2:
            raise ValueError("need at least one agent and two cells")
        if self.event_max_days >= self.days:
            raise ValueError("events cannot be longer than the horizon")
        if not (0 < self.event_min_days <= self.event_max_days):
            raise ValueError("bad event duration range")
        if not (0 <= self.p_day_unobserved < 1):
            raise ValueError("p_day_unobserved must be in [0, 1)")


def load_config(path) -> ScenarioConfig:
    """Plain-text ``key=value`` scenario file; unknown keys are rejected."""
    values: dict[str, str] = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
    kwargs = {}
    for key, raw in values.items():
        if not hasattr(ScenarioConfig, key):
            raise ValueError(f"unknown scenario key {key!r}")
        current = getattr(ScenarioConfig, key)
        if isinstance(current, bool):
            kwargs[key] = raw.lower() in ("1", "true", "yes")
        elif isinstance(current, int):
            kwargs[key] = int(raw)
        elif isinstance(current, float):
            kwargs[key] = float(raw)
        else:
            kwargs[key] = raw
    cfg = ScenarioConfig(**kwargs)
    cfg.validate()
    return cfg


@dataclass(frozen=True)
class PlantedStay:
    destination: int
    start: int  # day ordinals, inclusive
    end: int

    @property
    def n_days(self) -> int:
        return self.end - self.start + 1


@dataclass
class AgentTruth:
    agent_id: str
    home: int
    home2: int | None = None        # home after home_change_day, if any
    home_change_day: int | None = None
    stays: list[PlantedStay] = field(default_factory=list)
    micro_trips: list[PlantedStay] = field(default_factory=list)
    observed_days: np.ndarray | None = None  # sorted day ordinals

    def home_at(self, day: int) -> int:
        if self.home_change_day is not None and day >= self.home_change_day:
            return self.home2
        return self.home

    def cell_of_day(self, day: int) -> int:
        for stay in self.stays:
            if stay.start <= day <= stay.end:
                return stay.destination
        for trip in self.micro_trips:
            if trip.start <= day <= trip.end:
                return trip.destination
        return self.home_at(day)


@dataclass
class GroundTruth:
    config: ScenarioConfig
    agents: list[AgentTruth]

    @property
    def window(self) -> tuple[int, int]:
        w0 = self.config.start_ordinal
        return w0, w0 + self.config.days - 1


def _place_intervals(
    rng: np.random.Generator,
    n: int,
    horizon: tuple[int, int],
    min_len: int,
    max_len: int,
    min_separation: int,
    taken: list[tuple[int, int]],
    log_uniform: bool = True,
    max_tries: int = 200,
) -> list[tuple[int, int]]:
    """Sample up to n non-overlapping intervals, each ``min_separation``
    days away from previously taken ones and one day inside the horizon."""
    placed: list[tuple[int, int]] = []
    lo, hi = horizon
    for _ in range(n):
        for _try in range(max_tries):
            if log_uniform:
                length = int(round(math.exp(rng.uniform(math.log(min_len), math.log(max_len)))))
                length = min(max(length, min_len), max_len)
            else:
                length = int(rng.integers(min_len, max_len + 1))
            latest = hi - 1 - length + 1
            earliest = lo + 1
            if latest < earliest:
                break
            start = int(rng.integers(earliest, latest + 1))
            end = start + length - 1
            candidate = (start - min_separation, end + min_separation)
            if all(e < candidate[0] or s > candidate[1] for s, e in taken + placed):
                placed.append((start, end))
                break
    placed.sort()
    return placed


def generate(config: ScenarioConfig) -> GroundTruth:
    """Plant homes, away stays, micro-trips and observation masks."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    w0 = config.start_ordinal
    w1 = w0 + config.days - 1

    if config.home_density_bias > 0:
        ranks = np.arange(1, config.n_cells + 1, dtype=float)
        weights = ranks ** (-config.home_density_bias)
        weights /= weights.sum()
    else:
        weights = None

    agents = []
    width = max(5, len(str(config.n_agents)))
    for k in range(config.n_agents):
        agent_id = f"a{k:0{width}d}"
        home = int(rng.choice(config.n_cells, p=weights))
        truth = AgentTruth(agent_id=agent_id, home=home)

        if config.p_home_change > 0 and rng.random() < config.p_home_change:
            other = int(rng.integers(0, config.n_cells - 1))
            truth.home2 = other if other < home else other + 1
            truth.home_change_day = int(rng.integers(w0 + config.days // 3, w1 - config.days // 3))

        n_events = int(rng.poisson(config.events_per_agent))
        intervals = _place_intervals(
            rng, n_events, (w0, w1),
            config.event_min_days, config.event_max_days,
            config.min_home_spell_days, taken=[],
        )
        forbidden = {home, truth.home2} if truth.home2 is not None else {home}
        stay_cells = set()
        for start, end in intervals:
            dest = home
            while dest in forbidden:
                dest = int(rng.integers(0, config.n_cells))
            truth.stays.append(PlantedStay(dest, start, end))
            stay_cells.add(dest)

        n_months = config.days / 30.0
        n_trips = int(rng.poisson(config.micro_trips_per_month * n_months))
        trip_zones = _place_intervals(
            rng, n_trips, (w0, w1), 1, config.micro_trip_max_days,
            max(config.min_home_spell_days, 7),
            taken=[(s.start, s.end) for s in truth.stays],
            log_uniform=False,
        )
        for start, end in trip_zones:
            dest = home
            while dest in forbidden or dest in stay_cells:
                dest = int(rng.integers(0, config.n_cells))
            truth.micro_trips.append(PlantedStay(dest, start, end))

        days = np.arange(w0, w1 + 1)
        observed = np.ones(config.days, dtype=bool)
        if config.p_day_unobserved > 0:
            observed &= rng.random(config.days) >= config.p_day_unobserved
        n_long = int(rng.poisson(config.long_gaps_per_agent))
        for _ in range(n_long):
            glen = int(rng.integers(config.long_gap_min_days, config.long_gap_max_days + 1))
            gstart = int(rng.integers(0, max(1, config.days - glen)))
            observed[gstart:gstart + glen] = False
        # keep the span anchored so thinning and profiling see the horizon
        observed[0] = True
        observed[-1] = True
        truth.observed_days = days[observed]
        agents.append(truth)
    return GroundTruth(config=config, agents=agents)


def iter_records(truth: GroundTruth) -> Iterator[tuple[str, int, int]]:
    """Deterministic stream of (agent_id, timestamp, cell) records."""
    config = truth.config
    rng = np.random.default_rng(config.seed + 1)
    for agent in truth.agents:
        days = agent.observed_days
        counts = rng.integers(config.records_per_day_min, config.records_per_day_max + 1, size=len(days))
        # waking-hour seconds: 8h..24h
        seconds = rng.integers(8 * 3600, 24 * 3600, size=int(counts.sum()))
        pos = 0
        for day, count in zip(days.tolist(), counts.tolist()):
            cell = agent.cell_of_day(day)
            base = (day - 719163) * 86400
            for s in sorted(seconds[pos:pos + count].tolist()):
                yield agent.agent_id, base + s, cell
            pos += count


def write_cdr(truth: GroundTruth, path, tower_prefix: str = "T") -> int:
    """CDR CSV(.gz) with one synthetic tower per cell (``T<cell>``)."""
    n = 0
    with open_maybe_gzip(path, "wt") as fh:
        for agent_id, ts, cell in iter_records(truth):
            fh.write(f"{agent_id},{ts},{tower_prefix}{cell}\n")
            n += 1
    return n


def write_truth(truth: GroundTruth, path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["agent_id", "kind", "cell", "start_day", "end_day"])
        for agent in truth.agents:
            writer.writerow([agent.agent_id, "home", agent.home, "", ""])
            if agent.home_change_day is not None:
                writer.writerow([agent.agent_id, "home2", agent.home2, agent.home_change_day, ""])
            for stay in agent.stays:
                writer.writerow([agent.agent_id, "stay", stay.destination, stay.start, stay.end])
            for trip in agent.micro_trips:
                writer.writerow([agent.agent_id, "micro", trip.destination, trip.start, trip.end])


def daily_series_of(agent: AgentTruth) -> dict[int, int]:
    """The daily location series implied by the planted schedule."""
    return {int(d): agent.cell_of_day(int(d)) for d in agent.observed_days}


# ---------------------------------------------------------------------------
# trajectory thinning for the sensitivity protocol

@dataclass(frozen=True)
class ThinningSpec:
    delta_days: int
    omega: float
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.omega <= 1):
            raise ValueError("omega must be in (0, 1]")
        if self.delta_days < 1:
            raise ValueError("delta_days must be >= 1")


class InfeasibleThinning(ValueError):
    pass


def thin_days(days: list[int], spec: ThinningSpec, rng: np.random.Generator | None = None) -> list[int]:
    """Retain a window of exactly ``delta_days`` span and exactly
    ``ceil(omega * delta_days)`` observed days inside it.

    The window endpoints are forced into the sample so the thinned
    trajectory profiles to the requested span and fraction exactly.
    """
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    days_arr = np.asarray(sorted(days))
    delta = spec.delta_days
    k = max(1, math.ceil(spec.omega * delta))
    if delta > 1 and k < 2:
        k = 2
    if len(days_arr) < k or days_arr[-1] - days_arr[0] + 1 < delta:
        raise InfeasibleThinning("trajectory too short or too sparse")

    # feasible window starts: both endpoints observed, >= k observed inside
    starts = []
    day_set = set(days_arr.tolist())
    import bisect

    for w0 in days_arr.tolist():
        w1 = w0 + delta - 1
        if w1 > days_arr[-1]:
            break
        if w1 not in day_set:
            continue
        lo = bisect.bisect_left(days_arr, w0)
        hi = bisect.bisect_right(days_arr, w1)
        if hi - lo >= k:
            starts.append((w0, lo, hi))
    if not starts:
        raise InfeasibleThinning("no window satisfies the spec")
    w0, lo, hi = starts[int(rng.integers(0, len(starts)))]
    window = days_arr[lo:hi].tolist()
    if delta == 1 or k == 1:
        return [w0]
    interior = window[1:-1]
    chosen = rng.choice(len(interior), size=k - 2, replace=False) if k > 2 else []
    kept = sorted([window[0], window[-1]] + [interior[int(i)] for i in chosen])
    return kept


def thin_series(series: dict[int, int], spec: ThinningSpec, rng: np.random.Generator | None = None) -> dict[int, int]:
    kept = thin_days(sorted(series), spec, rng)
    return {d: series[d] for d in kept}
