"""Candidate boards: the current graph plus one hypothetical tile
instance per legal placement of the incoming tile.

Candidate instances carry the tile's template vertices and edges, are
wired to the real board exactly as a real placement would be, and are
flagged through a node attribute.  Instances never connect to each
other, so per-instance pooling reads are independent.

Node feature layout (d_in = 7):
    [cloister, road, city, field] one-hot, shield, meeple code
    (+1 mover, -1 opponent, 0 none), candidate flag
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from ..board import FACING_SLOT, SIDE_OFFSET
from ..catalog import CITY, CLOISTER, FIELD, ROAD
from ..engine import GameState
from ..graph import SLOT_PLANE

CLASS_INDEX = {CLOISTER: 0, ROAD: 1, CITY: 2, FIELD: 3}
N_FEATURES = 7
SHIELD_COL = 4
MEEPLE_COL = 5
CANDIDATE_COL = 6


class CandidateInstance(NamedTuple):
    vertex_ids: np.ndarray
    pos: tuple
    rotation: int


@dataclass
class CandidateBoard:
    x: np.ndarray  # (n_vertices, 7) int8
    edges: np.ndarray  # (n_edges, 2) int32, undirected
    n_real: int
    instances: list  # of CandidateInstance
    coords: Optional[np.ndarray] = None  # (n_vertices, 2) board-plane, or None
    slots: Optional[list] = None  # per-vertex slot names, or None
    edge_kinds: Optional[list] = None  # per-edge kind names, or None

    @property
    def n_vertices(self) -> int:
        return len(self.x)


def build_candidate_board(state: GameState, tile_id: Optional[str] = None,
                          mover: Optional[int] = None) -> CandidateBoard:
    """Candidate board for the incoming tile (default: the drawn one)."""
    tile_id = tile_id if tile_id is not None else state.drawn_tile
    if tile_id is None:
        raise ValueError("no next tile")
    mover = state.current_player if mover is None else mover
    graph = state.graph
    board = state.board
    spec = state.config.catalog[tile_id]

    n_real = graph.vertex_count
    x = np.zeros((n_real, N_FEATURES), dtype=np.int8)
    coords = [np.array([graph.vertex_coord(v) for v in range(n_real)],
                       dtype=np.float64).reshape(-1, 2)]
    slots = [graph.v_slot[v] for v in range(n_real)]
    for vid in range(n_real):
        x[vid, CLASS_INDEX[graph.v_class[vid]]] = 1
        if graph.v_shield[vid]:
            x[vid, SHIELD_COL] = 1
        owner = graph.v_meeple[vid]
        if owner is not None:
            x[vid, MEEPLE_COL] = 1 if owner == mover else -1
    rows = [x]
    edges = [np.array([(a, b) for _, a, b in graph.edges], dtype=np.int32)
             .reshape(-1, 2)]
    edge_kinds = [kind for kind, _, _ in graph.edges]

    instances = []
    next_vid = n_real
    for pos in sorted(board.frontier()):
        for rotation in range(4):
            if not graph.is_legal(board, spec, pos, rotation):
                continue
            template = spec.graph_template(rotation)
            slot_vid = {}
            block = np.zeros((len(template.vertices), N_FEATURES),
                             dtype=np.int8)
            block_xy = np.zeros((len(template.vertices), 2), dtype=np.float64)
            for i, (slot, cls, shielded) in enumerate(template.vertices):
                slot_vid[slot] = next_vid + i
                block[i, CLASS_INDEX[cls]] = 1
                if shielded:
                    block[i, SHIELD_COL] = 1
                block[i, CANDIDATE_COL] = 1
                ox, oy = SLOT_PLANE[slot]
                block_xy[i] = (pos[0] + ox, pos[1] + oy)
                slots.append(slot)
            rows.append(block)
            coords.append(block_xy)
            inst_edges = [
                (slot_vid[a], slot_vid[b]) for a, b in template.intra_edges
            ]
            edge_kinds.extend("intra_tile" for _ in template.intra_edges)
            for _, group_slots, _ in template.groups:
                ordered = sorted(group_slots)
                for i, a in enumerate(ordered):
                    for b in ordered[i + 1:]:
                        inst_edges.append((slot_vid[a], slot_vid[b]))
                        edge_kinds.append("feature")
            px, py = pos
            for side in ("N", "E", "S", "W"):
                dx, dy = SIDE_OFFSET[side]
                neighbor = (px + dx, py + dy)
                if neighbor in board.placements:
                    theirs = graph.vertex_index[(neighbor, FACING_SLOT[side])]
                    inst_edges.append((slot_vid[side], theirs))
                    edge_kinds.append("inter_tile")
            edges.append(np.array(inst_edges, dtype=np.int32))
            vids = np.arange(next_vid, next_vid + len(template.vertices),
                             dtype=np.int32)
            instances.append(CandidateInstance(vids, pos, rotation))
            next_vid += len(template.vertices)

    if not instances:
        raise ValueError(f"tile {tile_id!r} has no legal placement")
    return CandidateBoard(
        x=np.concatenate(rows, axis=0),
        edges=np.concatenate(edges, axis=0),
        n_real=n_real,
        instances=instances,
        coords=np.concatenate(coords, axis=0),
        slots=slots,
        edge_kinds=edge_kinds,
    )
