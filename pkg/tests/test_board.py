import numpy as np
import pytest

from tilesense.board import BoardState, PlacedTile, PlacementError, new_board
from tilesense.catalog import CITY_BIT, FIELD_BIT, ROAD_BIT


def test_new_board_places_start_tile(catalog):
    board = new_board(9, catalog, "D")
    assert board.start_pos == (4, 4)
    placed = board.placements[(4, 4)]
    assert placed.tile_id == "D"
    assert placed.rotation == 0


def test_new_board_rejects_tiny_size(catalog):
    with pytest.raises(ValueError):
        new_board(2, catalog, "D")


def test_frontier_of_single_tile(catalog):
    board = new_board(9, catalog, "D")
    assert board.frontier() == {(4, 3), (5, 4), (4, 5), (3, 4)}


def test_place_requires_adjacency(catalog):
    board = new_board(9, catalog, "D")
    with pytest.raises(PlacementError):
        board.place(PlacedTile((0, 0), "B", 0))


def test_place_rejects_occupied_cell(catalog):
    board = new_board(9, catalog, "D")
    with pytest.raises(PlacementError):
        board.place(PlacedTile((4, 4), "B", 0))


def test_place_rejects_out_of_bounds(catalog):
    board = new_board(3, catalog, "D")
    board = board.place(PlacedTile((1, 0), "E", 2))
    with pytest.raises(PlacementError):
        board.place(PlacedTile((1, -1), "B", 0))


def test_place_checks_side_compatibility(catalog):
    board = new_board(9, catalog, "D")
    # D's north side is city; B is all fields
    with pytest.raises(PlacementError):
        board.place(PlacedTile((4, 3), "B", 0))
    board.place(PlacedTile((4, 3), "E", 2))  # city facing south: fine


def test_place_is_persistent(catalog):
    board = new_board(9, catalog, "D")
    second = board.place(PlacedTile((4, 5), "B", 0))
    assert (4, 5) in second.placements
    assert (4, 5) not in board.placements


def test_side_match_against_all_neighbours(catalog):
    board = new_board(9, catalog, "D")
    board = board.place(PlacedTile((4, 3), "F", 0))
    # (5, 3) touches F (west side must be field) and nothing else
    board = board.place(PlacedTile((5, 3), "E", 1))
    # (5, 4) now touches D (west: road) and (5, 3) (north: field)
    with pytest.raises(PlacementError):
        board.place(PlacedTile((5, 4), "B", 0))
    board.place(PlacedTile((5, 4), "U", 1))


def test_bit_matrix_geometry(catalog):
    board = new_board(9, catalog, "D")
    mat = board.bit_matrix()
    assert mat.shape == (27, 27)
    assert mat.dtype == np.uint8
    block = mat[12:15, 12:15]
    assert block.tolist() == [
        [FIELD_BIT, CITY_BIT, FIELD_BIT],
        [ROAD_BIT, ROAD_BIT, ROAD_BIT],
        [FIELD_BIT, FIELD_BIT, FIELD_BIT],
    ]
    assert mat.sum() == block.sum()  # everything else empty


def test_bit_matrix_axis_order(catalog):
    # x grows along columns, y along rows
    board = new_board(9, catalog, "D")
    board = board.place(PlacedTile((5, 4), "U", 1))
    mat = board.bit_matrix()
    assert mat[13, 16] == ROAD_BIT  # (x=5, y=4) centre cell
    assert (mat[:, 0:12] == 0).all()


def test_shield_matrix(catalog):
    board = new_board(9, catalog, "D")
    board = board.place(PlacedTile((4, 3), "F", 0))
    shields = board.shield_matrix()
    assert shields.shape == (27, 27)
    assert shields.sum() == 1
    ys, xs = np.nonzero(shields)
    assert 9 <= ys[0] < 12 and 12 <= xs[0] < 15


def test_with_meeple_records_on_placement(catalog):
    board = new_board(9, catalog, "D")
    board = board.place(PlacedTile((4, 3), "E", 2, meeple=(0, "S")))
    assert board.placements[(4, 3)].meeple == (0, "S")
