"""Per-player observation tensors for the gameplay policy.

The grid stacks five sub-cell channels over the whole board: cloister,
road, city, shield, and meeple.  Meeples are coded relative to the
viewer (+1 own, -1 opponent) so the same parameters work in any seat.
The drawn tile rides along as its rotation-0 3x3x5 block, flattened.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..catalog import CITY_BIT, CLOISTER_BIT, ROAD_BIT, SLOT_CELL
from ..engine import GameState

N_CHANNELS = 5
N_SCALARS = 5
TILE_FEATURES = 45  # 3 * 3 * 5

SCORE_SCALE = 100.0


@dataclass(frozen=True)
class Observation:
    grid: np.ndarray  # (3W, 3W, 5) float64
    scalars: np.ndarray  # (5,) float64 in [0, 1]
    current_tile: np.ndarray  # (45,) float64


def tile_block(spec, rotation: int = 0) -> np.ndarray:
    """A single tile as a 3x3x5 channel block (meeple channel zero)."""
    out = np.zeros((3, 3, N_CHANNELS), dtype=np.float64)
    grid = spec.subgrid(rotation)
    for r in range(3):
        for c in range(3):
            cell = grid[r][c]
            out[r, c, 0] = bool(cell.bits & CLOISTER_BIT)
            out[r, c, 1] = bool(cell.bits & ROAD_BIT)
            out[r, c, 2] = bool(cell.bits & CITY_BIT)
            out[r, c, 3] = cell.shield
    return out


def observe(state: GameState, player: int) -> Observation:
    if state.drawn_tile is None:
        raise ValueError("no tile drawn")
    board = state.board
    side = 3 * board.size
    grid = np.zeros((side, side, N_CHANNELS), dtype=np.float64)
    bits = board.bit_matrix()
    grid[:, :, 0] = (bits & CLOISTER_BIT) > 0
    grid[:, :, 1] = (bits & ROAD_BIT) > 0
    grid[:, :, 2] = (bits & CITY_BIT) > 0
    grid[:, :, 3] = board.shield_matrix()

    graph = state.graph
    for vid, owner in enumerate(graph.v_meeple):
        if owner is None:
            continue
        x, y = graph.v_pos[vid]
        r, c = SLOT_CELL[graph.v_slot[vid]]
        grid[3 * y + r, 3 * x + c, 4] = 1.0 if owner == player else -1.0

    own_score, own_meeples = state.players[player]
    opp_score = opp_meeples = 0
    others = [p for i, p in enumerate(state.players) if i != player]
    if others:
        opp_score, opp_meeples = max(others, key=lambda p: p[0])
    total = sum(t.count for t in state.config.catalog.tiles)
    per_player = state.config.rules.meeples_per_player
    scalars = np.clip(
        np.array([
            own_score / SCORE_SCALE,
            opp_score / SCORE_SCALE,
            len(state.deck) / (total - 1),
            own_meeples / per_player,
            opp_meeples / per_player,
        ], dtype=np.float64),
        0.0, 1.0,
    )

    current = tile_block(state.config.catalog[state.drawn_tile], 0).reshape(-1)
    return Observation(grid=grid, scalars=scalars, current_tile=current)
