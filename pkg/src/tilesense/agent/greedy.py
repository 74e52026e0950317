"""Baseline agents: uniform random and one-ply greedy point chasing.

The greedy agent scores every legal action with the closed-form point
preview from the feature graph (no board mutation) and picks the
argmax; ties break by seeded choice so runs stay reproducible.
"""

from __future__ import annotations

import numpy as np

from ..actions import decode_action
from ..engine import GameState


class RandomAgent:
    def __init__(self, seed: int = 0):
        self.rng = np.random.default_rng(seed)

    def __call__(self, state: GameState, mask: np.ndarray) -> int:
        return int(self.rng.choice(np.flatnonzero(mask)))


class GreedyAgent:
    """Immediate-points maximizer with a small meeple-hoarding nudge.

    meeple_cost biases against spending meeples for nothing: an action
    that parks a meeple scores preview - meeple_cost, so bare
    placements win unless the meeple actually pays.
    """

    def __init__(self, seed: int = 0, meeple_cost: float = 0.5,
                 epsilon: float = 0.0):
        self.rng = np.random.default_rng(seed)
        self.meeple_cost = meeple_cost
        self.epsilon = epsilon

    def __call__(self, state: GameState, mask: np.ndarray) -> int:
        actions = np.flatnonzero(mask)
        if self.epsilon and self.rng.random() < self.epsilon:
            return int(self.rng.choice(actions))
        config = state.config
        spec = config.catalog[state.drawn_tile]
        player = state.current_player
        values = np.empty(len(actions), dtype=np.float64)
        for i, action in enumerate(actions):
            x, y, rot, option = decode_action(config.board_size, int(action))
            slot = None if option == "none" else option
            value = state.graph.preview_points(
                state.board, spec, (x, y), rot, slot, player, config.rules
            )
            if slot is not None:
                value -= self.meeple_cost
            values[i] = value
        best = np.flatnonzero(values == values.max())
        return int(actions[self.rng.choice(best)])
