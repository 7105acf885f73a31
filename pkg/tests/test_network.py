import pytest

from tempmig.network import (
    NetworkError,
    Tower,
    assign_regions,
    build_network,
    read_city_polygons,
    read_region_table,
    read_towers,
    regions,
    write_network,
    read_tower_map,
)

SQUARE = [(0.0, 0.0), (4000.0, 0.0), (4000.0, 4000.0), (0.0, 4000.0)]


def test_three_distant_towers_stay_rural():
    towers = [Tower("a", 0, 0), Tower("b", 10000, 0), Tower("c", 5000, 10000)]
    net = build_network(towers, [], merge_radius=2000)
    assert net.n_cells == 3
    assert all(c.zone == "rural" for c in net.cells)
    assert all(len(c.member_towers) == 1 for c in net.cells)


def test_two_close_towers_merge_urban():
    towers = [Tower("a", 0, 0), Tower("b", 1500, 0)]
    net = build_network(towers, [], merge_radius=2000)
    assert net.n_cells == 1
    assert net.cells[0].zone == "urban"
    assert net.cells[0].member_towers == {"a", "b"}


def test_merge_radius_is_strict():
    towers = [Tower("a", 0, 0), Tower("b", 2000, 0)]
    net = build_network(towers, [], merge_radius=2000)
    assert net.n_cells == 2


def test_city_polygon_claims_towers():
    towers = [Tower("a", 1000, 1000), Tower("b", 3000, 3000), Tower("c", 90000, 90000)]
    net = build_network(towers, [("poly1", SQUARE)], merge_radius=2000)
    zones = {cell.zone for cell in net.cells}
    assert net.n_cells == 2
    city = next(c for c in net.cells if c.zone == "urban")
    assert city.member_towers == {"a", "b"}


def test_single_linkage_is_transitive():
    towers = [Tower("a", 0, 0), Tower("b", 1500, 0), Tower("c", 3000, 0)]
    net = build_network(towers, [], merge_radius=2000)
    assert net.n_cells == 1  # a-b and b-c chains join all three


def test_cell_ids_keyed_to_min_tower_id():
    towers = [Tower("t2", 0, 0), Tower("t1", 50000, 0), Tower("t0", 0, 50000)]
    net = build_network(towers, [], 2000)
    assert net.cells[0].member_towers == {"t0"}
    assert net.cells[1].member_towers == {"t1"}
    assert net.cells[2].member_towers == {"t2"}


def test_build_is_order_invariant():
    towers = [Tower("a", 0, 0), Tower("b", 1500, 0), Tower("c", 50000, 0), Tower("d", 90000, 9000)]
    net1 = build_network(towers, [], 2000)
    net2 = build_network(list(reversed(towers)), [], 2000)
    assert net1.tower_to_cell == net2.tower_to_cell
    assert [c.zone for c in net1.cells] == [c.zone for c in net2.cells]


def test_merge_idempotence():
    # re-clustering the produced cells (one representative per cell) adds no merges
    towers = [Tower("a", 0, 0), Tower("b", 1500, 0), Tower("c", 9000, 0), Tower("d", 20000, 0)]
    net = build_network(towers, [], 2000)
    reps = []
    for cell in net.cells:
        tid = min(cell.member_towers)
        t = next(t for t in towers if t.tower_id == tid)
        reps.append(t)
    net2 = build_network(reps, [], 2000)
    assert net2.n_cells == net.n_cells


def test_tower_count_conserved():
    towers = [Tower(f"t{i}", i * 3000.0, 0.0) for i in range(10)]
    net = build_network(towers, [], 2000)
    assert sum(len(c.member_towers) for c in net.cells) == 10
    assert set(net.tower_to_cell) == {t.tower_id for t in towers}


def test_rejects_bad_input():
    with pytest.raises(NetworkError):
        build_network([], [], 2000)
    with pytest.raises(NetworkError):
        build_network([Tower("a", 0, 0), Tower("b", 0, 0)], [], 2000)
    with pytest.raises(NetworkError):
        build_network([Tower("a", 0, 0), Tower("a", 1, 1)], [], 2000)


def test_assign_regions_counts():
    towers = [Tower("a", 0, 0), Tower("b", 1000, 0), Tower("c", 50000, 0),
              Tower("d", 80000, 0), Tower("e", 110000, 0)]
    net = build_network(towers, [], 2000)  # a+b urban, c, d, e rural
    table = {0: "cityA", 1: "districtD-rural", 2: "districtD-rural", 3: "districtD-rural"}
    assign_regions(net, table)
    assert len(regions(net)) == 2


def test_assign_regions_identity_all_rural():
    towers = [Tower(f"t{i}", i * 10000.0, 0.0) for i in range(5)]
    net = build_network(towers, [], 2000)
    assign_regions(net, {i: f"r{i}" for i in range(5)})
    assert len(regions(net)) == 5


def test_assign_regions_missing_cell_rejected():
    net = build_network([Tower("a", 0, 0), Tower("b", 50000, 0)], [], 2000)
    with pytest.raises(NetworkError):
        assign_regions(net, {0: "x"})


def test_csv_roundtrip(tmp_path):
    towers_csv = tmp_path / "towers.csv"
    towers_csv.write_text("tower_id,x,y\na,0,0\nb,1500,0\nc,50000,0\n")
    polys_csv = tmp_path / "polys.csv"
    polys_csv.write_text(
        "polygon_id,vertex_index,x,y\np,0,-1,-1\np,1,3000,-1\np,2,3000,3000\np,3,-1,3000\n"
    )
    towers = read_towers(towers_csv)
    polygons = read_city_polygons(polys_csv)
    net = build_network(towers, polygons, 2000)
    assign_regions(net, {0: "city-p", 1: "rural-c"})
    write_network(net, tmp_path / "cells.csv", tmp_path / "map.csv")
    mapping = read_tower_map(tmp_path / "map.csv")
    assert mapping == net.tower_to_cell
