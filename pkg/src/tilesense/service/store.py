"""Session bookkeeping for the game service.

Each session owns an engine state, per-seat agents, an append-only event
log, and a lock serializing all mutation.  The event log starts with a
header record carrying the game configuration and seed; replaying the
logged action records on a fresh game rebuilds the live state exactly.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, List, Optional

import numpy as np

from .. import engine
from ..actions import decode_action
from ..agent import (
    GreedyAgent,
    RandomAgent,
    observe,
    policy_forward,
    select_action,
)
from ..agent.policy import PolicyNet
from ..catalog import TileCatalog, base_catalog
from ..engine import DeckEmpty, GameConfig, GameState
from ..nn import child_seed
from ..situation.gcn import GcnNet


class ServiceError(ValueError):
    """Invalid request against the session store.

    ``mask_indices`` echoes the currently legal action indices when the
    rejection concerned an act call.
    """

    def __init__(self, message: str, mask_indices: Optional[list] = None):
        super().__init__(message)
        self.mask_indices = mask_indices


def _policy_chooser(net: PolicyNet) -> Callable:
    def choose(state: GameState, mask: np.ndarray) -> int:
        obs = observe(state, state.current_player)
        dist = policy_forward(net, obs, mask)
        return select_action(dist, mode="greedy")

    return choose


def load_params(path: Path):
    """Load a checkpoint, dispatching on its recorded kind."""
    from ..nn import load_arrays

    meta, _ = load_arrays(path)
    kind = meta.get("kind")
    if kind == "policy":
        return PolicyNet.load(path)
    if kind == "situation":
        return GcnNet.load(path)
    raise ServiceError(f"unsupported checkpoint kind {kind!r}")


@dataclass
class Session:
    session_id: str
    config: GameConfig
    seed: int
    seats: tuple
    choosers: list
    state: GameState
    situation_net: Optional[GcnNet] = None
    events: List[dict] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)
    log_path: Optional[Path] = None

    def seat_kind(self, player: int) -> str:
        return self.seats[player]


def state_view(state: GameState, seats: tuple) -> dict:
    """JSON-ready snapshot: board, scores, mask popcount, legal positions."""
    size = state.config.board_size
    placements = []
    for (x, y), placed in sorted(state.board.placements.items()):
        entry = {
            "x": int(x),
            "y": int(y),
            "tile": placed.tile_id,
            "rotation": int(placed.rotation),
            "meeple_player": None,
            "meeple_slot": None,
        }
        if placed.meeple is not None:
            entry["meeple_player"] = int(placed.meeple[0])
            entry["meeple_slot"] = placed.meeple[1]
        placements.append(entry)

    legal_count = 0
    by_pos: dict = {}
    if state.drawn_tile is not None and not state.finished:
        mask = engine.legal_actions(state)
        legal_count = int(mask.sum())
        for idx in np.flatnonzero(mask):
            x, y, rotation, option = decode_action(size, int(idx))
            if option == "none":
                by_pos.setdefault((x, y), set()).add(rotation)
    legal_positions = [
        {"x": int(x), "y": int(y), "rotations": sorted(rots)}
        for (x, y), rots in sorted(by_pos.items())
    ]

    return {
        "turn_index": int(state.turn_index),
        "current_player": int(state.current_player),
        "current_seat": seats[state.current_player],
        "finished": bool(state.finished),
        "drawn_tile": state.drawn_tile,
        "deck_remaining": len(state.deck),
        "discarded": list(state.discarded),
        "scores": [int(p[0]) for p in state.players],
        "meeples": [int(p[1]) for p in state.players],
        "meeples_on_board": int(state.meeples_on_board()),
        "placements": placements,
        "legal_count": legal_count,
        "legal_positions": legal_positions,
    }


class SessionStore:
    def __init__(
        self,
        catalog: Optional[TileCatalog] = None,
        params_dir: Optional[str] = None,
        persist_dir: Optional[str] = None,
    ):
        self.catalog = catalog if catalog is not None else base_catalog()
        self.params_dir = Path(params_dir) if params_dir else None
        self.persist_dir = Path(persist_dir) if persist_dir else None
        if self.persist_dir is not None:
            self.persist_dir.mkdir(parents=True, exist_ok=True)
        self._sessions: dict = {}
        self._lock = threading.Lock()

    # -- parameter files ------------------------------------------------

    def _params_path(self, params_id: str) -> Path:
        if self.params_dir is None:
            raise ServiceError("no params directory configured")
        safe = Path(params_id).name
        if safe != params_id:
            raise ServiceError(f"invalid params id {params_id!r}")
        path = self.params_dir / f"{params_id}.tsar"
        if not path.is_file():
            raise ServiceError(f"unknown params id {params_id!r}")
        return path

    def load_policy(self, params_id: str) -> PolicyNet:
        net = load_params(self._params_path(params_id))
        if not isinstance(net, PolicyNet):
            raise ServiceError(f"params id {params_id!r} is not a policy")
        return net

    def load_situation(self, params_id: str) -> GcnNet:
        net = load_params(self._params_path(params_id))
        if not isinstance(net, GcnNet):
            raise ServiceError(f"params id {params_id!r} is not a situation model")
        return net

    # -- lifecycle ------------------------------------------------------

    def create(
        self,
        board_size: int = 9,
        seed: Optional[int] = None,
        seats: Iterable[str] = ("human", "ai"),
        agent: str = "greedy",
        policy_id: Optional[str] = None,
        situation_id: Optional[str] = None,
    ) -> Session:
        seats = tuple(seats)
        if not 1 <= len(seats) <= 5:
            raise ServiceError("need between 1 and 5 seats")
        if any(kind not in ("human", "ai") for kind in seats):
            raise ServiceError("seat kinds must be 'human' or 'ai'")
        if seed is None:
            seed = int.from_bytes(os.urandom(4), "big")

        policy_net = None
        if policy_id is not None:
            policy_net = self.load_policy(policy_id)
            agent = "policy"
            if policy_net.config.board_size != board_size:
                raise ServiceError(
                    f"policy {policy_id!r} expects board size "
                    f"{policy_net.config.board_size}, session uses {board_size}"
                )
        if agent == "policy" and policy_net is None:
            raise ServiceError("agent 'policy' requires a policy_id")
        situation_net = None
        if situation_id is not None:
            situation_net = self.load_situation(situation_id)

        config = GameConfig(
            catalog=self.catalog, board_size=board_size, num_players=len(seats)
        )
        choosers: list = []
        for i, kind in enumerate(seats):
            if kind == "human":
                choosers.append(None)
            elif agent == "random":
                choosers.append(RandomAgent(seed=child_seed(seed, 100 + i)))
            elif agent == "greedy":
                choosers.append(GreedyAgent(seed=child_seed(seed, 100 + i)))
            else:
                choosers.append(_policy_chooser(policy_net))

        session = Session(
            session_id=uuid.uuid4().hex,
            config=config,
            seed=seed,
            seats=seats,
            choosers=choosers,
            state=engine.new_game(config, seed),
            situation_net=situation_net,
        )
        if self.persist_dir is not None:
            session.log_path = self.persist_dir / f"{session.session_id}.ndjson"
        self._record(
            session,
            "session",
            {
                "board_size": board_size,
                "seed": seed,
                "seats": list(seats),
                "agent": agent,
                "policy_id": policy_id,
                "situation_id": situation_id,
                "catalog_hash": self.catalog.hash(),
            },
        )
        with session.lock:
            self._advance(session)
            self._autoplay(session)
        with self._lock:
            self._sessions[session.session_id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise KeyError(session_id)
        return session

    # -- event log ------------------------------------------------------

    def _record(self, session: Session, kind: str, payload: dict) -> None:
        event = {
            "seq": len(session.events),
            "turn": int(session.state.turn_index),
            "kind": kind,
            "payload": payload,
        }
        session.events.append(event)
        if session.log_path is not None:
            line = json.dumps(event, sort_keys=True, separators=(",", ":"))
            with open(session.log_path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")

    # -- game flow ------------------------------------------------------

    def _advance(self, session: Session) -> None:
        """Draw for the next player, finalizing when the deck drains."""
        if session.state.finished or session.state.drawn_tile is not None:
            return
        try:
            state, events = engine.draw(session.state)
        except DeckEmpty as exc:
            session.state = exc.state
            for tile in exc.discards:
                self._record(session, "discard", {"tile": tile})
            state, events = engine.finalize(session.state)
        session.state = state
        for ev in events:
            self._record(session, ev.kind, ev.payload)

    def _step(self, session: Session, action: int) -> None:
        player = session.state.current_player
        self._record(session, "action", {"player": player, "action": int(action)})
        state, events = engine.apply(session.state, int(action))
        session.state = state
        for ev in events:
            self._record(session, ev.kind, ev.payload)
        self._advance(session)

    def _autoplay(self, session: Session) -> List[dict]:
        """Let AI seats move until a human is up or the game ends."""
        applied = []
        while not session.state.finished:
            player = session.state.current_player
            chooser = session.choosers[player]
            if chooser is None:
                break
            mask = engine.legal_actions(session.state)
            action = int(chooser(session.state, mask))
            self._step(session, action)
            applied.append({"player": player, "action": action})
        return applied

    def act(self, session: Session, player: int, action: int) -> List[dict]:
        """Apply one human action, then let AI seats follow.

        Rejections carry the legal mask so clients can resynchronize.
        """
        with session.lock:
            state = session.state
            if state.finished:
                raise ServiceError("game is finished", mask_indices=[])

            def mask_echo() -> list:
                return [int(i) for i in np.flatnonzero(engine.legal_actions(state))]

            if player != state.current_player:
                raise ServiceError(
                    f"it is player {state.current_player}'s turn, not {player}'s",
                    mask_indices=mask_echo(),
                )
            if session.seat_kind(player) != "human":
                raise ServiceError(
                    f"seat {player} is not a human seat", mask_indices=mask_echo()
                )
            if not engine.action_is_legal(state, int(action)):
                raise ServiceError(
                    f"action {action} is illegal", mask_indices=mask_echo()
                )
            self._step(session, int(action))
            applied = [{"player": player, "action": int(action)}]
            applied.extend(self._autoplay(session))
            return applied


def rebuild_from_events(events: Iterable[dict], catalog: TileCatalog) -> GameState:
    """Re-run a logged game: header seeds it, action records drive it."""
    events = list(events)
    if not events or events[0]["kind"] != "session":
        raise ValueError("event log must start with a session record")
    head = events[0]["payload"]
    if head["catalog_hash"] != catalog.hash():
        raise ValueError("event log was produced with a different catalog")
    config = GameConfig(
        catalog=catalog,
        board_size=head["board_size"],
        num_players=len(head["seats"]),
    )
    state = engine.new_game(config, head["seed"])
    actions = [e["payload"]["action"] for e in events if e["kind"] == "action"]
    for action in actions:
        if state.drawn_tile is None:
            state, _ = engine.draw(state)
        state, _ = engine.apply(state, int(action))
    if state.drawn_tile is None and not state.finished:
        try:
            state, _ = engine.draw(state)
        except DeckEmpty as exc:
            state, _ = engine.finalize(exc.state)
    return state


def load_event_log(path) -> List[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
