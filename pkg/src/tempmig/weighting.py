"""Post-stratification weights targeting the adult population.

Strata are cities (one per urban cell) plus each district's rural cells
split at the rural density median into a low- and a high-density part.
Per (stratum, half-month, measure) the weight is simply the stratum's
target population over the number of its resident users observed for that
measure, so weighted user totals add back up to the covered population.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .aggregate import UserPeriodOutcome, UNOBSERVED, _MEASURE_OBS_KEY
from .network import Cell, URBAN
from .timeutil import HalfMonth

RURAL_LOW = "rural_low_density"
RURAL_HIGH = "rural_high_density"


class WeightingError(ValueError):
    pass


@dataclass
class Stratum:
    stratum_id: str
    cells: set[int]
    zone: str  # "urban", RURAL_LOW or RURAL_HIGH
    pop: float


def rural_density_median(cells: Iterable[Cell], densities: Mapping[int, float]) -> float:
    values = sorted(densities[c.cell_id] for c in cells if c.zone != URBAN)
    if not values:
        raise WeightingError("no rural cells to take a median over")
    mid = len(values) // 2
    if len(values) % 2:
        return values[mid]
    return (values[mid - 1] + values[mid]) / 2.0


def build_strata(
    cells: Iterable[Cell],
    districts: Mapping[int, str],
    densities: Mapping[int, float],
    pops: Mapping[int, float],
    median: float | None = None,
) -> list[Stratum]:
    """City strata plus (district, density side) rural strata.

    ``districts`` maps rural cell ids to district identifiers; ``densities``
    and ``pops`` give per-cell population density and target population.
    Rural cells strictly below the median go to the low-density stratum.
    Empty strata are omitted.
    """
    cells = list(cells)
    for cell in cells:
        if cell.zone != URBAN and cell.cell_id not in densities:
            raise WeightingError(f"missing density for rural cell {cell.cell_id}")
        if cell.cell_id not in pops:
            raise WeightingError(f"missing population for cell {cell.cell_id}")
    if median is None:
        median = rural_density_median(cells, densities)

    strata: dict[str, Stratum] = {}
    for cell in cells:
        if cell.zone == URBAN:
            sid = f"city:{cell.region_id if cell.region_id else cell.cell_id}"
            zone = URBAN
        else:
            if cell.cell_id not in districts:
                raise WeightingError(f"missing district for rural cell {cell.cell_id}")
            side = RURAL_LOW if densities[cell.cell_id] < median else RURAL_HIGH
            sid = f"{districts[cell.cell_id]}:{side}"
            zone = side
        stratum = strata.get(sid)
        if stratum is None:
            stratum = strata[sid] = Stratum(stratum_id=sid, cells=set(), zone=zone, pop=0.0)
        stratum.cells.add(cell.cell_id)
        stratum.pop += pops[cell.cell_id]
    return [strata[s] for s in sorted(strata)]


def stratum_of_cell(strata: Iterable[Stratum]) -> dict[int, str]:
    mapping: dict[int, str] = {}
    for stratum in strata:
        for cell in stratum.cells:
            if cell in mapping:
                raise WeightingError(f"cell {cell} belongs to two strata")
            mapping[cell] = stratum.stratum_id
    return mapping


@dataclass
class WeightTable:
    """(stratum, half-month, measure) -> weight; undefined entries mean the
    stratum had no observed users there and contributes nothing."""

    weights: dict[tuple[str, HalfMonth, str], float] = field(default_factory=dict)
    uncovered: dict[tuple[str, HalfMonth, str], float] = field(default_factory=dict)

    def get(self, stratum_id: str, unit: HalfMonth, measure: str) -> float | None:
        return self.weights.get((stratum_id, unit, measure))


def compute_weights(
    strata: Iterable[Stratum],
    outcomes: Iterable[UserPeriodOutcome],
    cell_to_stratum: Mapping[int, str] | None = None,
) -> WeightTable:
    """Per-measure, time-varying weights from observation statuses.

    Counts, per (stratum, unit, measure), the users whose home cell lies in
    the stratum and whose outcome is determined; the weight is the stratum
    population over that count.  Stratum-periods with zero observed users
    are recorded as coverage shortfall.
    """
    strata = list(strata)
    if cell_to_stratum is None:
        cell_to_stratum = stratum_of_cell(strata)
    pop_of = {s.stratum_id: s.pop for s in strata}

    observed: dict[tuple[str, HalfMonth, str], int] = {}
    seen_units: set[HalfMonth] = set()
    for outcome in outcomes:
        seen_units.add(outcome.unit)
        if outcome.status == UNOBSERVED:
            continue
        sid = cell_to_stratum.get(outcome.origin_cell)
        if sid is None:
            raise WeightingError(f"home cell {outcome.origin_cell} not covered by any stratum")
        key = (sid, outcome.unit, outcome.measure)
        observed[key] = observed.get(key, 0) + 1

    table = WeightTable()
    for key, n_users in observed.items():
        table.weights[key] = pop_of[key[0]] / n_users
    for stratum in strata:
        for unit in seen_units:
            for measure in ("depart", "return", "stock"):
                if (stratum.stratum_id, unit, measure) not in table.weights:
                    table.uncovered[(stratum.stratum_id, unit, measure)] = stratum.pop
    return table


def make_weight_fn(weight_table: WeightTable, cell_to_stratum: Mapping[int, str]):
    """Adapter for :func:`tempmig.aggregate.aggregate`."""

    def weight_fn(outcome: UserPeriodOutcome) -> float | None:
        sid = cell_to_stratum.get(outcome.origin_cell)
        if sid is None:
            return None
        return weight_table.get(sid, outcome.unit, outcome.measure)

    return weight_fn


# ---------------------------------------------------------------------------
# CSV interfaces

def read_strata(path) -> tuple[list[Stratum], dict[int, str]]:
    """CSV ``stratum_id,cell_id,zone,pop_over_15,density``; returns strata
    with summed populations plus the cell->stratum map."""
    strata: dict[str, Stratum] = {}
    cell_map: dict[int, str] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            sid = row["stratum_id"]
            cell = int(row["cell_id"])
            stratum = strata.get(sid)
            if stratum is None:
                stratum = strata[sid] = Stratum(stratum_id=sid, cells=set(), zone=row["zone"], pop=0.0)
            stratum.cells.add(cell)
            stratum.pop += float(row["pop_over_15"])
            if cell in cell_map:
                raise WeightingError(f"cell {cell} appears in two strata")
            cell_map[cell] = sid
    return [strata[s] for s in sorted(strata)], cell_map


def write_strata(strata: Iterable[Stratum], pops: Mapping[int, float], densities: Mapping[int, float], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["stratum_id", "cell_id", "zone", "pop_over_15", "density"])
        for stratum in sorted(strata, key=lambda s: s.stratum_id):
            for cell in sorted(stratum.cells):
                writer.writerow(
                    [stratum.stratum_id, cell, stratum.zone, pops.get(cell, 0.0), densities.get(cell, "")]
                )


def write_weights(table: WeightTable, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["stratum_id", "year", "month", "half", "measure", "weight"])
        for (sid, unit, measure) in sorted(table.weights, key=lambda k: (k[0], k[1].key(), k[2])):
            writer.writerow([sid, unit.year, unit.month, unit.half, measure, f"{table.weights[(sid, unit, measure)]:.9g}"])
