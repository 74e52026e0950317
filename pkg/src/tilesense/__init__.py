"""Tile-laying game engine with learned agents and gaze analytics."""

__version__ = "0.1.0"

from .catalog import TileCatalog, TileSpec, base_catalog, load_catalog
from .engine import GameConfig, GameState, new_game, run_game
from .graph import RuleTable

__all__ = [
    "GameConfig",
    "GameState",
    "RuleTable",
    "TileCatalog",
    "TileSpec",
    "base_catalog",
    "load_catalog",
    "new_game",
    "run_game",
    "__version__",
]
