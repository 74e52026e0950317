import numpy as np
import pytest

from tilesense.catalog import (
    CENTER,
    CITY_BIT,
    CLOISTER_BIT,
    FIELD_BIT,
    ROAD_BIT,
    SIDE_SLOTS,
    CatalogError,
    dump_catalog,
    parse_catalog,
    rotate_slot,
)


def test_base_counts(catalog):
    assert len(catalog.tiles) == 24
    assert sum(t.count for t in catalog.tiles) == 72


def test_ids_unique_and_sorted_lookup(catalog):
    ids = [t.tile_id for t in catalog.tiles]
    assert len(set(ids)) == len(ids)
    for t in catalog.tiles:
        assert catalog[t.tile_id] is t
    assert "D" in catalog
    assert "zz" not in catalog


def test_groups_partition_slots(catalog):
    for t in catalog.tiles:
        slots = [s for g in t.groups for s in g]
        expected = set(SIDE_SLOTS) | ({CENTER} if t.cloister else set())
        assert set(slots) == expected
        assert len(slots) == len(set(slots))


def test_start_tile_subgrid(catalog):
    # city at the top edge centre, road through the middle row
    grid = catalog["D"].subgrid(0)
    bits = np.array([[c.bits for c in row] for row in grid])
    assert bits.tolist() == [
        [FIELD_BIT, CITY_BIT, FIELD_BIT],
        [ROAD_BIT, ROAD_BIT, ROAD_BIT],
        [FIELD_BIT, FIELD_BIT, FIELD_BIT],
    ]


def test_cloister_subgrid_centre(catalog):
    grid = catalog["B"].subgrid(0)
    assert grid[1][1].bits == CLOISTER_BIT
    for r, c in [(0, 1), (1, 0), (1, 2), (2, 1)]:
        assert grid[r][c].bits == FIELD_BIT


def test_shield_flag_not_a_bit(catalog):
    grid = catalog["F"].subgrid(0)
    shields = [cell.shield for row in grid for cell in row]
    assert sum(shields) == 1
    for row in grid:
        for cell in row:
            assert cell.bits in (CLOISTER_BIT, ROAD_BIT, CITY_BIT, FIELD_BIT)


def test_rotation_turns_grid_clockwise(catalog):
    for t in catalog.tiles:
        base = np.array([[c.bits for c in row] for row in t.subgrid(0)])
        for r in range(4):
            got = np.array([[c.bits for c in row] for row in t.subgrid(r)])
            assert np.array_equal(got, np.rot90(base, k=-r)), (t.tile_id, r)


def test_sides_at_match_edge_cells(catalog):
    bit_of = {"road": ROAD_BIT, "city": CITY_BIT, "field": FIELD_BIT}
    edge_cell = {0: (0, 1), 1: (1, 2), 2: (2, 1), 3: (1, 0)}
    for t in catalog.tiles:
        for r in range(4):
            grid = t.subgrid(r)
            for i, side in enumerate(t.sides_at(r)):
                rr, cc = edge_cell[i]
                assert grid[rr][cc].bits == bit_of[side], (t.tile_id, r, i)


def test_rotate_slot():
    assert rotate_slot("N", 0) == "N"
    assert rotate_slot("N", 1) == "E"
    assert rotate_slot("S", 3) == "E"
    assert rotate_slot("C", 2) == "C"


def test_graph_template_shape(catalog):
    for t in catalog.tiles:
        tpl = t.graph_template(0)
        slots = [v[0] for v in tpl.vertices]
        assert slots[:4] == list(SIDE_SLOTS)
        assert (CENTER in slots) == bool(t.cloister)
        assert len(tpl.intra_edges) == 4


def test_template_rotates_groups(catalog):
    tpl = catalog["D"].graph_template(1)
    road = next(g for g in tpl.groups if g[0] == "road")
    assert sorted(road[1]) == ["N", "S"]


def test_round_trip(catalog):
    text = dump_catalog(catalog)
    again = parse_catalog(text)
    assert dump_catalog(again) == text
    assert again.hash() == parse_catalog(text).hash()


def test_parse_rejects_duplicate_id():
    text = "A, 1, ffff, 1, 0, NESW;C\nA, 1, ffff, 1, 0, NESW;C\n"
    with pytest.raises(CatalogError):
        parse_catalog(text)


def test_parse_rejects_bad_side_letter():
    with pytest.raises(CatalogError):
        parse_catalog("A, 1, ffxf, 0, 0, N;E;S;W\n")


def test_parse_rejects_mixed_group():
    # N is a city side, E is a field side: they cannot share a group
    with pytest.raises(CatalogError):
        parse_catalog("A, 1, cfff, 0, 0, NE;SW\n")


def test_parse_rejects_shield_without_city():
    with pytest.raises(CatalogError):
        parse_catalog("A, 1, ffff, 0, 1, NESW\n")


def test_parse_rejects_missing_slot():
    with pytest.raises(CatalogError):
        parse_catalog("A, 1, ffff, 0, 0, NES\n")
