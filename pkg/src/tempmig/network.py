"""Spatial partition of the study area into cells.

Towers are point sites of an (implicit) voronoi tessellation.  Towers that
fall inside a city polygon are merged into one urban cell per polygon;
remaining towers closer than a merge radius are single-linkage clustered
into additional urban cells; everything else becomes a singleton rural
cell.  The rest of the pipeline only ever needs the tower -> cell mapping,
never cell geometry, so no polygon clipping is performed: a tower inside a
city polygon stands for its coverage area intersecting the city.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

URBAN = "urban"
RURAL = "rural"


class NetworkError(ValueError):
    """Invalid tower, polygon or region input."""


@dataclass(frozen=True)
class Tower:
    tower_id: str
    x: float
    y: float


@dataclass
class Cell:
    cell_id: int
    member_towers: frozenset[str]
    zone: str  # URBAN or RURAL
    region_id: str | None = None


@dataclass
class LocationNetwork:
    cells: list[Cell]
    tower_to_cell: dict[str, int]

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def zone_of(self, cell_id: int) -> str:
        return self.cells[cell_id].zone

    def region_of(self, cell_id: int) -> str:
        region = self.cells[cell_id].region_id
        if region is None:
            raise NetworkError(f"cell {cell_id} has no region assigned")
        return region

    def urban_cells(self) -> list[Cell]:
        return [c for c in self.cells if c.zone == URBAN]

    def rural_cells(self) -> list[Cell]:
        return [c for c in self.cells if c.zone == RURAL]


def _point_in_polygon(x: float, y: float, ring: Sequence[tuple[float, float]]) -> bool:
    """Ray-casting test; points on an edge count as inside."""
    inside = False
    n = len(ring)
    for i in range(n):
        x1, y1 = ring[i]
        x2, y2 = ring[(i + 1) % n]
        # On-segment check first so boundary towers are claimed by the city.
        cross = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1)
        if abs(cross) < 1e-9:
            if min(x1, x2) - 1e-9 <= x <= max(x1, x2) + 1e-9 and min(y1, y2) - 1e-9 <= y <= max(y1, y2) + 1e-9:
                return True
        if (y1 > y) != (y2 > y):
            xi = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if xi > x:
                inside = not inside
    return inside


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def build_network(
    towers: Sequence[Tower],
    city_polygons: Sequence[tuple[str, Sequence[tuple[float, float]]]] = (),
    merge_radius: float = 2000.0,
) -> LocationNetwork:
    """Partition towers into cells.

    Parameters
    ----------
    towers:
        Tower sites with projected planar coordinates (meters).
    city_polygons:
        ``(polygon_id, ring)`` pairs; a tower inside a ring joins that
        city's cell.  A tower inside several rings goes to the smallest
        polygon_id.
    merge_radius:
        Towers strictly closer than this distance (after city assignment)
        are clustered by single linkage; clusters of two or more towers
        become urban cells.

    Cell ids are dense integers assigned in ascending order of the minimum
    tower_id each cell contains, so the partition is independent of input
    order.
    """
    if not towers:
        raise NetworkError("at least one tower is required")
    if merge_radius < 0:
        raise NetworkError("merge_radius must be >= 0")
    seen_ids: set[str] = set()
    seen_xy: dict[tuple[float, float], str] = {}
    for t in towers:
        if not (math.isfinite(t.x) and math.isfinite(t.y)):
            raise NetworkError(f"tower {t.tower_id} has non-finite coordinates")
        if t.tower_id in seen_ids:
            raise NetworkError(f"duplicate tower_id {t.tower_id}")
        seen_ids.add(t.tower_id)
        key = (t.x, t.y)
        if key in seen_xy:
            raise NetworkError(f"towers {seen_xy[key]} and {t.tower_id} share coordinates {key}")
        seen_xy[key] = t.tower_id

    order = sorted(range(len(towers)), key=lambda i: towers[i].tower_id)

    # City membership: first (smallest polygon_id) polygon containing the tower.
    polygons = sorted(city_polygons, key=lambda p: p[0])
    city_of: dict[int, str] = {}
    for i in order:
        t = towers[i]
        for pid, ring in polygons:
            if _point_in_polygon(t.x, t.y, ring):
                city_of[i] = pid
                break

    groups: dict[str, list[int]] = {}
    for i, pid in city_of.items():
        groups.setdefault(f"city:{pid}", []).append(i)

    # Single-linkage clustering of the leftover towers at the merge radius
    # (strict inequality on the pairwise distance).
    free = [i for i in order if i not in city_of]
    uf = _UnionFind(len(towers))
    r2 = merge_radius * merge_radius
    for a_pos in range(len(free)):
        ia = free[a_pos]
        ta = towers[ia]
        for ib in free[a_pos + 1:]:
            tb = towers[ib]
            dx = ta.x - tb.x
            dy = ta.y - tb.y
            if dx * dx + dy * dy < r2:
                uf.union(ia, ib)
    clusters: dict[int, list[int]] = {}
    for i in free:
        clusters.setdefault(uf.find(i), []).append(i)
    for members in clusters.values():
        key = "cluster:" + min(towers[i].tower_id for i in members)
        groups[key] = members

    cell_specs = []
    for key, members in groups.items():
        ids = frozenset(towers[i].tower_id for i in members)
        urban = key.startswith("city:") or len(members) >= 2
        cell_specs.append((min(ids), ids, URBAN if urban else RURAL))
    cell_specs.sort(key=lambda spec: spec[0])

    cells = []
    tower_to_cell: dict[str, int] = {}
    for cid, (_, ids, zone) in enumerate(cell_specs):
        cells.append(Cell(cell_id=cid, member_towers=ids, zone=zone))
        for tid in ids:
            tower_to_cell[tid] = cid
    return LocationNetwork(cells=cells, tower_to_cell=tower_to_cell)


def assign_regions(network: LocationNetwork, region_table: dict[int, str]) -> LocationNetwork:
    """Attach aggregation regions: each urban cell its own region, rural
    cells grouped into district-rural regions via the prepared table."""
    urban_regions: dict[str, int] = {}
    for cell in network.cells:
        if cell.cell_id not in region_table:
            raise NetworkError(f"region table is missing cell {cell.cell_id}")
        region = region_table[cell.cell_id]
        if cell.zone == URBAN:
            if region in urban_regions:
                raise NetworkError(
                    f"urban cells {urban_regions[region]} and {cell.cell_id} share region {region}"
                )
            urban_regions[region] = cell.cell_id
        cell.region_id = region
    return network


def regions(network: LocationNetwork) -> list[str]:
    return sorted({c.region_id for c in network.cells if c.region_id is not None})


# ---------------------------------------------------------------------------
# CSV interfaces

def read_towers(path) -> list[Tower]:
    """Headered CSV ``tower_id,x,y``."""
    towers = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            try:
                towers.append(Tower(row["tower_id"], float(row["x"]), float(row["y"])))
            except (KeyError, TypeError, ValueError) as exc:
                raise NetworkError(f"bad tower row {row!r}") from exc
    return towers


def read_city_polygons(path) -> list[tuple[str, list[tuple[float, float]]]]:
    """CSV ``polygon_id,vertex_index,x,y`` describing closed rings."""
    rings: dict[str, list[tuple[int, float, float]]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            try:
                rings.setdefault(row["polygon_id"], []).append(
                    (int(row["vertex_index"]), float(row["x"]), float(row["y"]))
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise NetworkError(f"bad polygon row {row!r}") from exc
    out = []
    for pid in sorted(rings):
        verts = sorted(rings[pid])
        ring = [(x, y) for _, x, y in verts]
        if len(ring) >= 2 and ring[0] == ring[-1]:
            ring = ring[:-1]
        if len(ring) < 3:
            raise NetworkError(f"polygon {pid} has fewer than 3 distinct vertices")
        out.append((pid, ring))
    return out


def read_region_table(path) -> dict[int, str]:
    """CSV ``cell_id,region_id,zone`` (zone column is informational)."""
    table: dict[int, str] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            try:
                table[int(row["cell_id"])] = row["region_id"]
            except (KeyError, TypeError, ValueError) as exc:
                raise NetworkError(f"bad region row {row!r}") from exc
    return table


def write_network(network: LocationNetwork, cells_path, towers_path) -> None:
    with open(cells_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cell_id", "zone", "region_id", "n_towers"])
        for cell in network.cells:
            writer.writerow([cell.cell_id, cell.zone, cell.region_id or "", len(cell.member_towers)])
    with open(towers_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tower_id", "cell_id"])
        for tid in sorted(network.tower_to_cell):
            writer.writerow([tid, network.tower_to_cell[tid]])


def read_tower_map(path) -> dict[str, int]:
    """CSV ``tower_id,cell_id`` as written by :func:`write_network`."""
    table: dict[str, int] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            table[row["tower_id"]] = int(row["cell_id"])
    return table


def read_cells(path) -> list[Cell]:
    cells = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            cells.append(
                Cell(
                    cell_id=int(row["cell_id"]),
                    member_towers=frozenset(),
                    zone=row["zone"],
                    region_id=row["region_id"] or None,
                )
            )
    cells.sort(key=lambda c: c.cell_id)
    return cells
