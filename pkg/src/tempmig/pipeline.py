"""End-to-end orchestration: ingest, filter, detect, aggregate, weight.

Every stage reads and writes headered CSV so stages can run standalone or
composed; ``run`` chains them in-process and emits the final dataset
files, named ``{type}_{subset}_{DD}days.csv.gz`` for type in
weighted/unweighted, subset in A/B and DD the minimum stay duration.
Outputs are byte-stable for a fixed config regardless of worker count.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

from . import ingest as ing
from .aggregate import (
    AggregationParams,
    MigrationTable,
    UserTimeline,
    aggregate,
    exclude_edges,
    write_table,
)
from .ingest import FilterConstraints, SUBSET_A, SUBSET_B
from .segments import DetectionParams, MacroSegment, MesoSegment, detect_user
from .timeutil import date_of, halfmonths_between, parse_iso_date
from .weighting import compute_weights, make_weight_fn, read_strata

SUBSETS = {"A": SUBSET_A, "B": SUBSET_B}


@dataclass
class RunConfig:
    cdr_paths: list[str]
    tower_map_path: str
    region_path: str
    out_dir: str
    strata_path: str | None = None
    subsets: dict[str, FilterConstraints] = field(default_factory=lambda: dict(SUBSETS))
    detection: DetectionParams = field(default_factory=DetectionParams)
    eps_tol_days: int = 7
    sigma_days: int = 8
    tau_list: tuple[int, ...] = (20, 30, 60)
    low_confidence: bool = False
    weighted: bool = True
    bot_threshold: float = ing.DEFAULT_BOT_THRESHOLD
    windows: list[tuple[int, int]] | None = None
    workers: int = 1
    spill_partitions: int = 1


@dataclass
class RunReport:
    counters: ing.IngestCounters = field(default_factory=ing.IngestCounters)
    users_in: int = 0
    bots_removed: int = 0
    users_per_subset: dict[str, int] = field(default_factory=dict)
    segments_total: int = 0
    weight_shortfall: dict[str, float] = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)

    def write(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("lines_read=%d\n" % self.counters.lines)
            fh.write("records_parsed=%d\n" % self.counters.records)
            fh.write("malformed_lines=%d\n" % self.counters.malformed)
            fh.write("unknown_tower_records=%d\n" % self.counters.unknown_tower)
            fh.write("users_in=%d\n" % self.users_in)
            fh.write("bots_removed=%d\n" % self.bots_removed)
            for name in sorted(self.users_per_subset):
                fh.write(f"users_subset_{name}={self.users_per_subset[name]}\n")
            fh.write("segments_total=%d\n" % self.segments_total)
            for key in sorted(self.weight_shortfall):
                fh.write(f"weight_shortfall_{key}={self.weight_shortfall[key]:.6g}\n")
            for out in self.outputs:
                fh.write(f"output={out}\n")


def _detect_one(item: tuple[str, dict[int, int], DetectionParams]):
    user_id, daily, params = item
    from .inference import monthly_locations

    macros, segments = detect_user(daily, monthly_locations(daily), params)
    return user_id, macros, segments


def detect_all(
    users_daily: dict[str, dict[int, int]],
    params: DetectionParams,
    workers: int = 1,
) -> dict[str, UserTimeline]:
    """Per-user detection, optionally fanned out over processes.

    Results are keyed and ordered by user id, so the output is identical
    for any worker count.
    """
    items = [(uid, users_daily[uid], params) for uid in sorted(users_daily)]
    timelines: dict[str, UserTimeline] = {}
    if workers <= 1:
        results = map(_detect_one, items)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_detect_one, items, chunksize=max(1, len(items) // (workers * 4) or 1)))
    for user_id, macros, segments in results:
        if segments:
            timelines[user_id] = UserTimeline(user_id, segments, macros)
    return timelines


# ---------------------------------------------------------------------------
# segment dump (detect stage boundary)

def write_segments(timelines: dict[str, UserTimeline], path) -> None:
    with ing.open_maybe_gzip(path, "wt") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id", "kind", "cell_id", "start", "end", "min_dur", "max_dur", "macro_cell"])
        for user_id in sorted(timelines):
            tl = timelines[user_id]
            for m in tl.macros:
                writer.writerow([user_id, "macro", m.cell, date_of(m.start).isoformat(), date_of(m.end).isoformat(), "", "", ""])
            for s in tl.segments:
                writer.writerow(
                    [user_id, "meso", s.cell, date_of(s.start).isoformat(), date_of(s.end).isoformat(),
                     s.min_duration, s.max_duration, s.macro_cell]
                )


def read_segments(path) -> dict[str, UserTimeline]:
    users: dict[str, tuple[list[MacroSegment], list[MesoSegment]]] = {}
    with ing.open_maybe_gzip(path, "rt") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            macros, segments = users.setdefault(row["user_id"], ([], []))
            start = parse_iso_date(row["start"])
            end = parse_iso_date(row["end"])
            if row["kind"] == "macro":
                macros.append(MacroSegment(int(row["cell_id"]), start, end))
            else:
                segments.append(
                    MesoSegment(
                        cell=int(row["cell_id"]), start=start, end=end,
                        min_duration=int(row["min_dur"]), max_duration=int(row["max_dur"]),
                        macro_cell=int(row["macro_cell"]),
                    )
                )
    return {
        uid: UserTimeline(uid, segments, macros)
        for uid, (macros, segments) in users.items()
        if segments
    }


# ---------------------------------------------------------------------------
# full run

def run(config: RunConfig) -> RunReport:
    report = RunReport()
    os.makedirs(config.out_dir, exist_ok=True)
    created: list[str] = []
    try:
        tower_map = _load_tower_map(config.tower_map_path)
        region_of = _load_region_fn(config.region_path)

        users, counters = ing.ingest_files(
            config.cdr_paths, tower_map, n_partitions=config.spill_partitions
        )
        report.counters = counters
        report.users_in = len(users)

        profiles = {uid: acc.profile(uid) for uid, acc in users.items()}
        kept, bots = ing.filter_bots(profiles, config.bot_threshold)
        report.bots_removed = len(bots)

        daily_all = {uid: users[uid].daily_series() for uid in kept}
        windows = config.windows or _derive_windows(profiles, kept)
        units = []
        for w0, w1 in windows:
            units.extend(halfmonths_between(w0, w1))
        units = sorted(set(units), key=lambda u: u.key())

        timelines_all = detect_all(daily_all, config.detection, config.workers)
        report.segments_total = sum(len(t.segments) for t in timelines_all.values())

        strata = cell_map = None
        if config.weighted:
            if not config.strata_path:
                raise ValueError("weighted output requested without a strata table")
            strata, cell_map = read_strata(config.strata_path)

        for subset_name, constraints in sorted(config.subsets.items()):
            selected = ing.select_subset({u: profiles[u] for u in kept}, constraints)
            report.users_per_subset[subset_name] = len(selected)
            timelines = {u: timelines_all[u] for u in selected if u in timelines_all}
            for tau in config.tau_list:
                params = AggregationParams(
                    tau_min_days=tau,
                    eps_tol_days=config.eps_tol_days,
                    sigma_days=config.sigma_days,
                    eps_gap_meso_days=config.detection.eps_gap_meso_days,
                    low_confidence=config.low_confidence,
                )
                table = aggregate(timelines.values(), units, region_of, params)
                exclude_edges(table, tau, windows)
                out = os.path.join(config.out_dir, f"unweighted_{subset_name}_{tau}days.csv.gz")
                write_table(table, out)
                created.append(out)
                report.outputs.append(out)

                if config.weighted:
                    outcomes = list(_iter_outcomes(timelines, units, params))
                    weight_table = compute_weights(strata, outcomes, cell_map)
                    shortfall = sum(weight_table.uncovered.values())
                    report.weight_shortfall[f"{subset_name}_{tau}"] = shortfall
                    wtable = aggregate(
                        timelines.values(), units, region_of, params,
                        weight_fn=make_weight_fn(weight_table, cell_map),
                    )
                    exclude_edges(wtable, tau, windows)
                    wout = os.path.join(config.out_dir, f"weighted_{subset_name}_{tau}days.csv.gz")
                    write_table(wtable, wout)
                    created.append(wout)
                    report.outputs.append(wout)
        report.write(os.path.join(config.out_dir, "run_report.txt"))
        return report
    except Exception:
        for path in created:
            try:
                os.remove(path)
            except OSError:
                pass
        raise


def _iter_outcomes(timelines, units, params):
    from .aggregate import user_outcomes

    for uid in sorted(timelines):
        yield from user_outcomes(timelines[uid], units, params)


def _derive_windows(profiles, kept) -> list[tuple[int, int]]:
    if not kept:
        raise ValueError("no users left after filtering")
    w0 = min(profiles[u].first_day for u in kept)
    w1 = max(profiles[u].last_day for u in kept)
    return [(w0, w1)]


def _load_tower_map(path) -> dict[str, int]:
    from .network import read_tower_map

    return read_tower_map(path)


def _load_region_fn(path):
    from .network import read_region_table

    table = read_region_table(path)

    def region_of(cell: int) -> str:
        return table[cell]

    return region_of


def identity_tower_map(n_cells: int, prefix: str = "T") -> dict[str, int]:
    """Synthetic corpora use one tower per cell named ``T<cell>``."""
    return {f"{prefix}{i}": i for i in range(n_cells)}
