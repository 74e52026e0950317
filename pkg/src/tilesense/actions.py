"""Flat action space: (x, y, rotation, meeple option) <-> integer index.

The space has ``W*W*4*6`` entries for a board of W tiles per side
(38400 at the default W=40).  Meeple options are ``none`` plus the five
slots; rotation is in board frame (applied before side matching).
"""

from __future__ import annotations

import numpy as np

MEEPLE_OPTIONS = ("none", "N", "E", "S", "W", "C")
OPTION_CODE = {name: i for i, name in enumerate(MEEPLE_OPTIONS)}
N_ROTATIONS = 4
N_OPTIONS = len(MEEPLE_OPTIONS)


def action_space_size(board_size: int) -> int:
    return board_size * board_size * N_ROTATIONS * N_OPTIONS


def encode_action(board_size: int, x: int, y: int, rotation: int, option: str) -> int:
    if not (0 <= x < board_size and 0 <= y < board_size):
        raise ValueError(f"position ({x},{y}) out of range for W={board_size}")
    if rotation not in (0, 1, 2, 3):
        raise ValueError(f"rotation {rotation} out of range")
    if option not in OPTION_CODE:
        raise ValueError(f"unknown meeple option {option!r}")
    return ((y * board_size + x) * N_ROTATIONS + rotation) * N_OPTIONS + OPTION_CODE[option]


def decode_action(board_size: int, index: int) -> tuple:
    """(x, y, rotation, option) for a flat index."""
    if not 0 <= index < action_space_size(board_size):
        raise ValueError(f"action index {index} out of range for W={board_size}")
    index, opt = divmod(index, N_OPTIONS)
    index, rotation = divmod(index, N_ROTATIONS)
    y, x = divmod(index, board_size)
    return x, y, rotation, MEEPLE_OPTIONS[opt]


def empty_mask(board_size: int) -> np.ndarray:
    return np.zeros(action_space_size(board_size), dtype=bool)
