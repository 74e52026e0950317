"""Situation-model datasets: replayed game records turned into labeled
candidate boards.

Each turn of each record contributes one example: the pre-move board's
candidate graph for the tile that was drawn, labeled with the instance
actually played.  Examples are stored as a handful of flat arrays with
offset tables, which keeps half a thousand games of material within a
few hundred megabytes and makes the on-disk file byte-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..catalog import TileCatalog
from ..engine import GameError, GameRecord, replay
from ..nn import load_arrays, save_arrays
from .candidate import CandidateBoard, CandidateInstance

DATASET_KIND = "situation-dataset"
DATASET_VERSION = 1
FEATURE_SCHEMA = [
    "class_cloister", "class_road", "class_city", "class_field",
    "shield", "meeple", "candidate",
]


@dataclass
class Dataset:
    catalog_hash: str
    board_size: int
    x: np.ndarray  # (sum V, 7) int8
    edges: np.ndarray  # (sum E, 2) int32
    v_off: np.ndarray
    e_off: np.ndarray
    inst_off: np.ndarray  # instances per example
    inst_pos: np.ndarray  # (sum I, 3) int16: x, y, rotation
    inst_voff: np.ndarray  # vertex spans per instance
    inst_vids: np.ndarray  # (sum IV,) int32
    labels: np.ndarray  # (N,) int32, instance index within example
    game_ids: np.ndarray  # (N,) int32
    turns: np.ndarray  # (N,) int16

    def __len__(self) -> int:
        return len(self.labels)

    def example(self, i: int) -> tuple:
        """(CandidateBoard, label) for example i."""
        x = self.x[self.v_off[i]:self.v_off[i + 1]]
        edges = self.edges[self.e_off[i]:self.e_off[i + 1]]
        instances = []
        for j in range(self.inst_off[i], self.inst_off[i + 1]):
            vids = self.inst_vids[self.inst_voff[j]:self.inst_voff[j + 1]]
            px, py, rot = self.inst_pos[j]
            instances.append(
                CandidateInstance(vids, (int(px), int(py)), int(rot))
            )
        n_real = int((x[:, -1] == 0).sum())
        cb = CandidateBoard(x=x, edges=edges, n_real=n_real,
                            instances=instances)
        return cb, int(self.labels[i])

    def mean_candidates(self) -> float:
        return float(np.diff(self.inst_off).mean()) if len(self) else 0.0

    def split_by_game(self, val_fraction: float, seed: int) -> tuple:
        """(train indices, validation indices); whole games per side."""
        games = np.unique(self.game_ids)
        rng = np.random.default_rng(seed)
        games = games[rng.permutation(len(games))]
        n_val = max(1, int(round(len(games) * val_fraction))) \
            if len(games) > 1 else 0
        val_games = set(games[:n_val].tolist())
        val = np.flatnonzero(np.isin(self.game_ids, list(val_games)))
        train = np.flatnonzero(~np.isin(self.game_ids, list(val_games)))
        return train, val


class _Builder:
    def __init__(self):
        self.x = []
        self.edges = []
        self.v_off = [0]
        self.e_off = [0]
        self.inst_off = [0]
        self.inst_pos = []
        self.inst_voff = [0]
        self.inst_vids = []
        self.labels = []
        self.game_ids = []
        self.turns = []

    def add(self, cb: CandidateBoard, label: int, game_id: int,
            turn: int) -> None:
        self.x.append(cb.x)
        self.edges.append(cb.edges)
        self.v_off.append(self.v_off[-1] + len(cb.x))
        self.e_off.append(self.e_off[-1] + len(cb.edges))
        for inst in cb.instances:
            self.inst_pos.append(
                (inst.pos[0], inst.pos[1], inst.rotation)
            )
            self.inst_vids.append(inst.vertex_ids)
            self.inst_voff.append(self.inst_voff[-1] + len(inst.vertex_ids))
        self.inst_off.append(self.inst_off[-1] + len(cb.instances))
        self.labels.append(label)
        self.game_ids.append(game_id)
        self.turns.append(turn)

    def build(self, catalog_hash: str, board_size: int) -> Dataset:
        empty8 = np.zeros((0, 7), dtype=np.int8)
        empty32 = np.zeros((0, 2), dtype=np.int32)
        return Dataset(
            catalog_hash=catalog_hash,
            board_size=board_size,
            x=np.concatenate(self.x) if self.x else empty8,
            edges=np.concatenate(self.edges) if self.edges else empty32,
            v_off=np.array(self.v_off, dtype=np.int64),
            e_off=np.array(self.e_off, dtype=np.int64),
            inst_off=np.array(self.inst_off, dtype=np.int64),
            inst_pos=np.array(self.inst_pos, dtype=np.int16).reshape(-1, 3),
            inst_voff=np.array(self.inst_voff, dtype=np.int64),
            inst_vids=(np.concatenate(self.inst_vids)
                       if self.inst_vids else np.zeros(0, dtype=np.int32)),
            labels=np.array(self.labels, dtype=np.int32),
            game_ids=np.array(self.game_ids, dtype=np.int32),
            turns=np.array(self.turns, dtype=np.int16),
        )


def generate_dataset(records: list, catalog: TileCatalog) -> Dataset:
    """One labeled candidate board per recorded turn, via full replay."""
    from .candidate import build_candidate_board

    builder = _Builder()
    board_size = records[0].board_size if records else 0

    for game_id, record in enumerate(records):
        def observer(state, entry, _gid=game_id):
            cb = build_candidate_board(state, mover=entry["player"])
            target = (entry["x"], entry["y"], entry["rotation"])
            label = next(
                (i for i, inst in enumerate(cb.instances)
                 if (inst.pos[0], inst.pos[1], inst.rotation) == target),
                None,
            )
            if label is None:
                raise GameError(
                    f"turn {entry['turn']}: played placement missing from "
                    f"candidate set"
                )
            builder.add(cb, label, _gid, entry["turn"])

        replay(record, catalog, observer=observer)
    return builder.build(catalog.hash(), board_size)


def save_dataset(path, dataset: Dataset, extra_meta: Optional[dict] = None) -> None:
    meta = {
        "kind": DATASET_KIND,
        "version": DATASET_VERSION,
        "catalog_hash": dataset.catalog_hash,
        "board_size": dataset.board_size,
        "feature_schema": FEATURE_SCHEMA,
        "examples": len(dataset),
    }
    if extra_meta:
        for key, value in extra_meta.items():
            meta.setdefault(key, value)
    arrays = {
        "x": dataset.x,
        "edges": dataset.edges,
        "v_off": dataset.v_off,
        "e_off": dataset.e_off,
        "inst_off": dataset.inst_off,
        "inst_pos": dataset.inst_pos,
        "inst_voff": dataset.inst_voff,
        "inst_vids": dataset.inst_vids,
        "labels": dataset.labels,
        "game_ids": dataset.game_ids,
        "turns": dataset.turns,
    }
    save_arrays(path, meta, arrays)


def load_dataset(path) -> Dataset:
    meta, arrays = load_arrays(path)
    if meta.get("kind") != DATASET_KIND:
        raise ValueError(f"{path}: not a situation dataset")
    if meta.get("version") != DATASET_VERSION:
        raise ValueError(f"{path}: unsupported dataset version")
    return Dataset(
        catalog_hash=meta["catalog_hash"],
        board_size=meta["board_size"],
        **arrays,
    )
