"""Turn state machine: deck, placements, meeples, scoring, replayable records.

A turn runs draw -> place_tile -> (place_meeple?) -> score* -> end_turn.
Drawn tiles with no legal placement anywhere are discarded and redrawn, so
the action mask is never empty while a drawable tile exists.  States are
immutable values: ``draw``/``apply``/``finalize`` return new states.

Game records are newline-delimited JSON: a header line (config + seed),
one line per turn, and a final line with scores.  Replaying a record
through the engine reproduces the final state bit-exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .actions import OPTION_CODE, decode_action, empty_mask, encode_action
from .board import BoardState, PlacedTile, new_board
from .catalog import FIELD, START_TILE_ID, TileCatalog
from .graph import FeatureGraph, RuleTable

RECORD_FORMAT = 1


class GameError(ValueError):
    pass


class IllegalAction(GameError):
    pass


class DeckEmpty(GameError):
    """Raised by draw when no drawable tile remains; the game is over.

    Carries the drained state (remaining unplaceables moved to discarded)
    so callers can finalize it.
    """

    def __init__(self, message: str, state: "GameState", discards: list):
        super().__init__(message)
        self.state = state
        self.discards = discards


class ReplayError(GameError):
    def __init__(self, turn: int, message: str):
        super().__init__(f"turn {turn}: {message}")
        self.turn = turn


@dataclass(frozen=True)
class GameConfig:
    catalog: TileCatalog
    board_size: int = 40
    num_players: int = 2
    rules: RuleTable = field(default_factory=RuleTable)
    start_tile_id: str = START_TILE_ID


@dataclass(frozen=True)
class TurnEvent:
    kind: str  # draw | place_tile | place_meeple | score | meeple_return | end_turn
    payload: dict

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.payload}


@dataclass(frozen=True)
class GameState:
    config: GameConfig
    seed: int
    board: BoardState
    graph: FeatureGraph
    deck: tuple  # remaining tile ids in draw order
    discarded: tuple
    current_player: int
    players: tuple  # of (score, meeples_remaining)
    drawn_tile: Optional[str]
    turn_index: int
    finished: bool = False

    def score_of(self, player: int) -> int:
        return self.players[player][0]

    def meeples_of(self, player: int) -> int:
        return self.players[player][1]

    def meeples_on_board(self) -> int:
        return sum(1 for m in self.graph.v_meeple if m is not None)


def new_game(config: GameConfig, seed: int) -> GameState:
    if not 1 <= config.num_players <= 5:
        raise GameError(f"player count must be 1..5, got {config.num_players}")
    if config.start_tile_id not in config.catalog:
        raise GameError(f"unknown start tile {config.start_tile_id!r}")
    board = new_board(config.board_size, config.catalog, config.start_tile_id)
    graph = FeatureGraph(config.catalog)
    start = board.placements[board.start_pos]
    empty = BoardState(size=config.board_size, catalog=config.catalog,
                       start_pos=board.start_pos)
    graph.add_tile_inplace(start, empty)

    deck = []
    for spec in config.catalog.tiles:
        deck.extend([spec.tile_id] * spec.count)
    deck.remove(config.start_tile_id)
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(deck))
    deck = tuple(deck[i] for i in order)

    meeples = config.rules.meeples_per_player
    return GameState(
        config=config,
        seed=seed,
        board=board,
        graph=graph,
        deck=deck,
        discarded=(),
        current_player=0,
        players=tuple((0, meeples) for _ in range(config.num_players)),
        drawn_tile=None,
        turn_index=0,
    )


def has_any_placement(state: GameState, tile_id: str) -> bool:
    spec = state.config.catalog[tile_id]
    graph, board = state.graph, state.board
    for pos in board.frontier():
        for rotation in range(4):
            if graph.is_legal(board, spec, pos, rotation):
                return True
    return False


def draw(state: GameState) -> tuple:
    """(state with drawn_tile set, events).  Unplaceable tiles are discarded."""
    if state.drawn_tile is not None:
        raise GameError("a tile is already pending placement")
    deck = list(state.deck)
    discards = []
    while deck:
        tile_id = deck.pop(0)
        if has_any_placement(state, tile_id):
            event = TurnEvent("draw", {
                "player": state.current_player,
                "tile_id": tile_id,
                "discards": list(discards),
            })
            new_state = replace(
                state,
                deck=tuple(deck),
                discarded=state.discarded + tuple(discards),
                drawn_tile=tile_id,
            )
            return new_state, [event]
        discards.append(tile_id)
    drained = replace(state, deck=(), discarded=state.discarded + tuple(discards))
    raise DeckEmpty(
        f"deck exhausted ({len(discards)} unplaceable tiles discarded)",
        drained, discards,
    )


def legal_placements(state: GameState) -> list:
    """Sorted legal (pos, rotation) pairs for the drawn tile."""
    if state.drawn_tile is None:
        raise GameError("no tile drawn")
    spec = state.config.catalog[state.drawn_tile]
    graph, board = state.graph, state.board
    out = []
    for pos in sorted(board.frontier()):
        for rotation in range(4):
            if graph.is_legal(board, spec, pos, rotation):
                out.append((pos, rotation))
    return out


def legal_actions(state: GameState) -> np.ndarray:
    """Boolean mask over the flat action space for the drawn tile."""
    if state.drawn_tile is None:
        raise GameError("no tile drawn")
    config = state.config
    spec = config.catalog[state.drawn_tile]
    mask = empty_mask(config.board_size)
    has_meeples = state.meeples_of(state.current_player) > 0
    for (x, y), rotation in legal_placements(state):
        base = encode_action(config.board_size, x, y, rotation, "none")
        mask[base] = True
        if has_meeples:
            for slot in state.graph.meeple_slots(
                state.board, spec, (x, y), rotation, config.rules
            ):
                mask[base + OPTION_CODE[slot]] = True
    return mask


def action_is_legal(state: GameState, action: int) -> bool:
    if state.drawn_tile is None:
        return False
    config = state.config
    try:
        x, y, rotation, option = decode_action(config.board_size, action)
    except ValueError:
        return False
    spec = config.catalog[state.drawn_tile]
    if not state.graph.is_legal(state.board, spec, (x, y), rotation):
        return False
    if option == "none":
        return True
    if state.meeples_of(state.current_player) <= 0:
        return False
    return option in state.graph.meeple_slots(
        state.board, spec, (x, y), rotation, config.rules
    )


def apply(state: GameState, action: int) -> tuple:
    """(new state, events).  Rejects any action the mask would reject."""
    if state.drawn_tile is None:
        raise GameError("no tile drawn")
    if not action_is_legal(state, action):
        raise IllegalAction(f"action {action} is not legal in this state")
    config = state.config
    x, y, rotation, option = decode_action(config.board_size, action)
    player = state.current_player
    meeple = (player, option) if option != "none" else None
    placed = PlacedTile(pos=(x, y), tile_id=state.drawn_tile, rotation=rotation,
                        meeple=meeple)

    board = state.board.place(placed)
    graph = state.graph.copy()
    graph.add_tile_inplace(placed, state.board)
    players = [list(p) for p in state.players]
    events = [TurnEvent("place_tile", {
        "player": player, "tile_id": placed.tile_id,
        "x": x, "y": y, "rotation": rotation,
    })]
    if meeple is not None:
        graph.set_meeple((x, y), option, player)
        players[player][1] -= 1
        events.append(TurnEvent("place_meeple", {"player": player, "slot": option}))

    for root in graph.completions_for(placed, board):
        component = graph.component_at(root)
        points, _ = graph.score_component(
            component, board, "midgame", config.rules
        )
        for pid, value in points.items():
            players[pid][0] += value
        events.append(TurnEvent("score", {
            "stage": "midgame",
            "feature_class": component.feature_class,
            "points": {str(pid): v for pid, v in sorted(points.items())},
            "tiles": len(component.tiles),
        }))
        for pid, vid in graph.clear_meeples(component.root):
            players[pid][1] += 1
            events.append(TurnEvent("meeple_return", {"player": pid, "vertex": vid}))

    events.append(TurnEvent("end_turn", {"player": player, "turn": state.turn_index}))
    new_state = replace(
        state,
        board=board,
        graph=graph,
        players=tuple(tuple(p) for p in players),
        drawn_tile=None,
        current_player=(player + 1) % config.num_players,
        turn_index=state.turn_index + 1,
    )
    return new_state, events


def finalize(state: GameState) -> tuple:
    """Endgame scoring: incomplete features and fields.  (state, events)."""
    if state.deck or state.drawn_tile is not None:
        raise GameError("game is not over: tiles remain")
    if state.finished:
        raise GameError("game already finalized")
    config = state.config
    graph = state.graph.copy()
    board = state.board
    players = [list(p) for p in state.players]
    events = []
    classes = ["road", "city", "cloister"]
    if config.rules.fields_enabled:
        classes.append("field")
    for cls in classes:
        for component in graph.components(cls):
            if not component.meeples:
                continue
            if cls != FIELD and graph.is_complete(component, board):
                continue  # completed features were scored midgame
            points, _ = graph.score_component(
                component, board, "endgame", config.rules
            )
            for pid, value in points.items():
                players[pid][0] += value
            events.append(TurnEvent("score", {
                "stage": "endgame",
                "feature_class": cls,
                "points": {str(pid): v for pid, v in sorted(points.items())},
                "tiles": len(component.tiles),
            }))
            for pid, vid in graph.clear_meeples(component.root):
                players[pid][1] += 1
                events.append(TurnEvent("meeple_return", {
                    "player": pid, "vertex": vid,
                }))
    new_state = replace(
        state,
        graph=graph,
        players=tuple(tuple(p) for p in players),
        finished=True,
    )
    return new_state, events


# -- records --


@dataclass
class GameRecord:
    board_size: int
    num_players: int
    seed: int
    catalog_hash: str
    rules: dict
    start_tile_id: str
    turns: list = field(default_factory=list)
    final_scores: list = field(default_factory=list)
    endgame_deltas: dict = field(default_factory=dict)
    trailing_discards: list = field(default_factory=list)

    def header(self) -> dict:
        return {
            "kind": "header",
            "format": RECORD_FORMAT,
            "board_size": self.board_size,
            "num_players": self.num_players,
            "seed": self.seed,
            "catalog_hash": self.catalog_hash,
            "rules": self.rules,
            "start_tile_id": self.start_tile_id,
        }

    def to_text(self) -> str:
        lines = [_dumps(self.header())]
        for turn in self.turns:
            lines.append(_dumps({"kind": "turn", **turn}))
        lines.append(_dumps({
            "kind": "final",
            "scores": self.final_scores,
            "endgame_deltas": self.endgame_deltas,
            "trailing_discards": self.trailing_discards,
        }))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "GameRecord":
        lines = [json.loads(line) for line in text.splitlines() if line.strip()]
        if not lines or lines[0].get("kind") != "header":
            raise GameError("record missing header line")
        head = lines[0]
        if head.get("format") != RECORD_FORMAT:
            raise GameError(f"unsupported record format {head.get('format')}")
        record = cls(
            board_size=head["board_size"],
            num_players=head["num_players"],
            seed=head["seed"],
            catalog_hash=head["catalog_hash"],
            rules=head["rules"],
            start_tile_id=head["start_tile_id"],
        )
        for entry in lines[1:]:
            kind = entry.pop("kind")
            if kind == "turn":
                record.turns.append(entry)
            elif kind == "final":
                record.final_scores = entry["scores"]
                record.endgame_deltas = entry["endgame_deltas"]
                record.trailing_discards = entry.get("trailing_discards", [])
            else:
                raise GameError(f"unknown record line kind {kind!r}")
        return record


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def turn_entry(turn_index: int, player: int, action: int, events: list,
               board_size: int) -> dict:
    """Record line for one turn, assembled from its events."""
    entry = {
        "turn": turn_index,
        "player": player,
        "action": action,
        "discards": [],
        "meeple": "none",
        "score_deltas": {},
    }
    x, y, rotation, option = decode_action(board_size, action)
    entry["x"], entry["y"], entry["rotation"], entry["meeple"] = x, y, rotation, option
    for event in events:
        if event.kind == "draw":
            entry["discards"] = event.payload["discards"]
            entry["tile_id"] = event.payload["tile_id"]
        elif event.kind == "score":
            for pid, value in event.payload["points"].items():
                entry["score_deltas"][pid] = entry["score_deltas"].get(pid, 0) + value
    return entry


def run_game(config: GameConfig, seed: int, choosers: list) -> tuple:
    """Play a full game; choosers[p](state, mask) -> action index.

    Returns (final state, GameRecord, per-turn event lists).
    """
    state = new_game(config, seed)
    record = GameRecord(
        board_size=config.board_size,
        num_players=config.num_players,
        seed=seed,
        catalog_hash=config.catalog.hash(),
        rules=config.rules.to_dict(),
        start_tile_id=config.start_tile_id,
    )
    all_events = []
    while True:
        try:
            state, events = draw(state)
        except DeckEmpty as exc:
            state = exc.state
            record.trailing_discards = exc.discards
            break
        mask = legal_actions(state)
        action = choosers[state.current_player](state, mask)
        player = state.current_player
        turn = state.turn_index
        state, apply_events = apply(state, action)
        events = events + apply_events
        record.turns.append(turn_entry(turn, player, action, events,
                                       config.board_size))
        all_events.append(events)
    state, end_events = finalize(state)
    if end_events:
        all_events.append(end_events)
    record.final_scores = [p[0] for p in state.players]
    deltas = {}
    for event in end_events:
        for pid, value in event.payload.get("points", {}).items():
            deltas[pid] = deltas.get(pid, 0) + value
    record.endgame_deltas = deltas
    return state, record, all_events


def replay(record: GameRecord, catalog: TileCatalog,
           observer: Optional[Callable] = None) -> GameState:
    """Re-run a record through the engine, verifying every step.

    ``observer(state_before_apply, turn_entry)`` is called per turn with
    the drawn-tile state, which is how intermediate states are recovered.
    Raises ReplayError naming the first mismatching turn.
    """
    if record.catalog_hash != catalog.hash():
        raise GameError(
            f"record catalog hash {record.catalog_hash} does not match the "
            f"provided catalog ({catalog.hash()})"
        )
    config = GameConfig(
        catalog=catalog,
        board_size=record.board_size,
        num_players=record.num_players,
        rules=RuleTable.from_dict(record.rules),
        start_tile_id=record.start_tile_id,
    )
    state = new_game(config, record.seed)
    for entry in record.turns:
        turn = entry["turn"]
        try:
            state, events = draw(state)
        except DeckEmpty:
            raise ReplayError(turn, "deck exhausted before recorded turn") from None
        drawn = events[0].payload
        if drawn["tile_id"] != entry["tile_id"]:
            raise ReplayError(
                turn,
                f"drew {drawn['tile_id']} but record says {entry['tile_id']}",
            )
        if drawn["discards"] != entry["discards"]:
            raise ReplayError(turn, "discard sequence diverges from record")
        if state.current_player != entry["player"]:
            raise ReplayError(turn, "player to move diverges from record")
        if observer is not None:
            observer(state, entry)
        try:
            state, apply_events = apply(state, entry["action"])
        except IllegalAction as exc:
            raise ReplayError(turn, str(exc)) from None
        deltas = {}
        for event in apply_events:
            if event.kind == "score":
                for pid, value in event.payload["points"].items():
                    deltas[pid] = deltas.get(pid, 0) + value
        if deltas != entry["score_deltas"]:
            raise ReplayError(
                turn, f"score deltas {deltas} diverge from record "
                      f"{entry['score_deltas']}"
            )
    try:
        state, _ = draw(state)
    except DeckEmpty as exc:
        state = exc.state
        if record.trailing_discards and exc.discards != record.trailing_discards:
            raise ReplayError(
                len(record.turns), "trailing discards diverge from record"
            ) from None
    else:
        raise ReplayError(
            len(record.turns), "record ended while tiles were still playable"
        )
    state, _ = finalize(state)
    scores = [p[0] for p in state.players]
    if record.final_scores and scores != record.final_scores:
        raise ReplayError(
            len(record.turns),
            f"final scores {scores} diverge from record {record.final_scores}",
        )
    return state


def save_corpus(path, records: list, header: Optional[dict] = None) -> None:
    """Write game records to one file, blank-line separated.

    An optional leading ``#`` comment line carries run metadata.
    """
    with open(path, "w", encoding="utf-8") as fh:
        if header is not None:
            fh.write("# " + _dumps(header) + "\n")
        for i, record in enumerate(records):
            if i:
                fh.write("\n")
            fh.write(record.to_text())


def load_corpus(path) -> list:
    records = []
    block: list = []

    def flush():
        if block:
            records.append(GameRecord.from_text("\n".join(block) + "\n"))
            block.clear()

    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                continue
            if not line.strip():
                flush()
            else:
                block.append(line)
    flush()
    return records
