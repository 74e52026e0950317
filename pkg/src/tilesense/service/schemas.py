"""Request and response bodies for the game service."""

from __future__ import annotations

from typing import List, Literal, Optional

from pydantic import BaseModel, Field

SeatKind = Literal["human", "ai"]
AgentKind = Literal["random", "greedy", "policy"]


class CreateSessionRequest(BaseModel):
    board_size: int = 9
    seed: Optional[int] = None
    seats: List[SeatKind] = Field(default=["human", "ai"])
    agent: AgentKind = "greedy"
    policy_id: Optional[str] = None
    situation_id: Optional[str] = None


class PlacementView(BaseModel):
    x: int
    y: int
    tile: str
    rotation: int
    meeple_player: Optional[int] = None
    meeple_slot: Optional[str] = None


class LegalPosition(BaseModel):
    x: int
    y: int
    rotations: List[int]


class StateView(BaseModel):
    turn_index: int
    current_player: int
    current_seat: SeatKind
    finished: bool
    drawn_tile: Optional[str]
    deck_remaining: int
    discarded: List[str]
    scores: List[int]
    meeples: List[int]
    meeples_on_board: int
    placements: List[PlacementView]
    legal_count: int
    legal_positions: List[LegalPosition]


class SessionCreated(BaseModel):
    session_id: str
    seed: int
    board_size: int
    seats: List[SeatKind]
    state: StateView


class ActionView(BaseModel):
    action: int
    x: int
    y: int
    rotation: int
    option: str


class ActionsResponse(BaseModel):
    count: int
    actions: List[ActionView]


class ActRequest(BaseModel):
    player: int
    action: int


class AppliedAction(BaseModel):
    player: int
    action: int


class ActResponse(BaseModel):
    applied: List[AppliedAction]
    state: StateView


class PredictionView(BaseModel):
    x: int
    y: int
    rotation: int
    prob: float


class PredictionsResponse(BaseModel):
    tile: str
    predictions: List[PredictionView]


class GazeRequest(BaseModel):
    trace: str
    dispersion_threshold: float = 1.0 / 3.0
    duration_threshold_ms: float = 100.0
    radius: float = 0.5


class FixationView(BaseModel):
    x: float
    y: float
    onset_ms: float
    duration_ms: float
    n_samples: int


class GazeResponse(BaseModel):
    fixations: List[FixationView]
    links: List[List[int]]
    fused: str


class HeatmapRequest(BaseModel):
    trace: str
    half_life_ms: Optional[float] = None


class HeatmapResponse(BaseModel):
    board_size: int
    grid: List[List[float]]
    off_board_ms: float


class TileView(BaseModel):
    grid: List[List[int]]
    shield: bool
    count: int


class CatalogResponse(BaseModel):
    start_tile: str
    tiles: dict
