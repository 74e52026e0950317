"""Grid of placed tiles and the board-wide sub-tile bit matrix.

Coordinates: ``x`` grows east, ``y`` grows south, both in ``0..W-1`` for a
board of ``W`` tiles per side.  Board states are immutable values;
``place`` returns a new state, which keeps snapshots cheap for search and
candidate generation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .catalog import SIDE_SLOTS, TileCatalog, TileSpec

GridPos = tuple  # (x, y)

# Offsets of the four orthogonal neighbours keyed by the side facing them.
SIDE_OFFSET = {"N": (0, -1), "E": (1, 0), "S": (0, 1), "W": (-1, 0)}
FACING_SLOT = {"N": "S", "E": "W", "S": "N", "W": "E"}


class PlacementError(ValueError):
    """Raised for occupied-cell, non-adjacent, or side-mismatch placements."""


@dataclass(frozen=True)
class PlacedTile:
    pos: GridPos
    tile_id: str
    rotation: int
    meeple: Optional[tuple] = None  # (player_id, slot)


@dataclass(frozen=True)
class BoardState:
    size: int
    catalog: TileCatalog
    placements: dict = field(default_factory=dict)  # GridPos -> PlacedTile
    start_pos: GridPos = (0, 0)

    def in_bounds(self, pos: GridPos) -> bool:
        x, y = pos
        return 0 <= x < self.size and 0 <= y < self.size

    def occupied(self, pos: GridPos) -> bool:
        return pos in self.placements

    def spec_at(self, pos: GridPos) -> TileSpec:
        return self.catalog[self.placements[pos].tile_id]

    def neighbors(self, pos: GridPos):
        """(side, neighbour pos) for the in-bounds orthogonal neighbours."""
        x, y = pos
        for side, (dx, dy) in SIDE_OFFSET.items():
            npos = (x + dx, y + dy)
            if self.in_bounds(npos):
                yield side, npos

    def frontier(self) -> set:
        """Empty cells orthogonally adjacent to at least one placed tile."""
        out = set()
        for pos in self.placements:
            for _, npos in self.neighbors(pos):
                if npos not in self.placements:
                    out.add(npos)
        return out

    def place(self, placed: PlacedTile, allow_isolated: bool = False) -> "BoardState":
        """New state with `placed` added; the input state is unchanged."""
        pos = placed.pos
        if not self.in_bounds(pos):
            raise PlacementError(f"{pos} outside {self.size}x{self.size} board")
        if pos in self.placements:
            raise PlacementError(f"cell {pos} is occupied")
        spec = self.catalog[placed.tile_id]
        sides = spec.sides_at(placed.rotation)
        has_neighbor = False
        for side, npos in self.neighbors(pos):
            other = self.placements.get(npos)
            if other is None:
                continue
            has_neighbor = True
            facing = self.catalog[other.tile_id].sides_at(other.rotation)
            theirs = facing[SIDE_SLOTS.index(FACING_SLOT[side])]
            ours = sides[SIDE_SLOTS.index(side)]
            if ours != theirs:
                raise PlacementError(
                    f"side mismatch at {pos}: {side} side is {ours}, "
                    f"neighbour {npos} presents {theirs}"
                )
        if not has_neighbor and not allow_isolated:
            raise PlacementError(f"cell {pos} is not adjacent to any placed tile")
        new_placements = dict(self.placements)
        new_placements[pos] = placed
        return BoardState(
            size=self.size,
            catalog=self.catalog,
            placements=new_placements,
            start_pos=self.start_pos,
        )

    def with_meeple(self, pos: GridPos, meeple: Optional[tuple]) -> "BoardState":
        placed = self.placements[pos]
        new_placements = dict(self.placements)
        new_placements[pos] = PlacedTile(
            pos=placed.pos,
            tile_id=placed.tile_id,
            rotation=placed.rotation,
            meeple=meeple,
        )
        return BoardState(
            size=self.size,
            catalog=self.catalog,
            placements=new_placements,
            start_pos=self.start_pos,
        )

    def bit_matrix(self) -> np.ndarray:
        """3W x 3W uint8 matrix of feature-class bit fields (empty cells 0)."""
        out = np.zeros((3 * self.size, 3 * self.size), dtype=np.uint8)
        for (x, y), placed in self.placements.items():
            grid = self.catalog[placed.tile_id].subgrid(placed.rotation)
            for r in range(3):
                for c in range(3):
                    out[3 * y + r, 3 * x + c] = grid[r][c].bits
        return out

    def shield_matrix(self) -> np.ndarray:
        """3W x 3W bool matrix of the auxiliary shield flags."""
        out = np.zeros((3 * self.size, 3 * self.size), dtype=bool)
        for (x, y), placed in self.placements.items():
            grid = self.catalog[placed.tile_id].subgrid(placed.rotation)
            for r in range(3):
                for c in range(3):
                    if grid[r][c].shield:
                        out[3 * y + r, 3 * x + c] = True
        return out


def new_board(size: int, catalog: TileCatalog, start_tile_id: str) -> BoardState:
    """Fresh board with the start tile at the centre cell, rotation 0."""
    if size < 3:
        raise ValueError(f"board size must be >= 3, got {size}")
    center = (size // 2, size // 2)
    board = BoardState(size=size, catalog=catalog, start_pos=center)
    start = PlacedTile(pos=center, tile_id=start_tile_id, rotation=0)
    return board.place(start, allow_isolated=True)
