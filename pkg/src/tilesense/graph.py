"""Graph encoding of the board: legality, feature completion, and scoring.

Vertices sit on tile sides (plus tile centres for cloisters).  Three edge
kinds connect them: ``intra_tile`` (the fixed physical ring on each tile),
``feature`` (cliques inside each logical feature group), and
``inter_tile`` (between facing side vertices of adjacent tiles).

Feature components are maintained with a union-find keyed by vertex id;
only ``feature`` and ``inter_tile`` edges union, so a component is exactly
one road / city / field / cloister.  Per-component aggregates (meeples,
shields, spanned tiles, open ends) are kept at the union-find root, which
makes completion checks and score previews cheap during play.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .board import FACING_SLOT, SIDE_OFFSET, BoardState, PlacedTile
from .catalog import (
    CENTER,
    CITY,
    CLOISTER,
    FIELD,
    ROAD,
    SIDE_SLOTS,
    TileCatalog,
    TileSpec,
)

ALL_SLOT_ORDER = SIDE_SLOTS + (CENTER,)

INTRA_TILE = "intra_tile"
FEATURE = "feature"
INTER_TILE = "inter_tile"

# Board-plane coordinates of each slot inside its tile (tile units).
SLOT_PLANE = {
    "N": (0.5, 1.0 / 6.0),
    "E": (5.0 / 6.0, 0.5),
    "S": (0.5, 5.0 / 6.0),
    "W": (1.0 / 6.0, 0.5),
    CENTER: (0.5, 0.5),
}


class ScoreError(ValueError):
    """Raised when scoring an incomplete road or city at midgame."""


@dataclass(frozen=True)
class RuleTable:
    """Scoring values; defaults follow the standard base game."""

    road_per_tile: int = 1
    city_per_tile: int = 2
    city_per_shield: int = 2
    incomplete_road_per_tile: int = 1
    incomplete_city_per_tile: int = 1
    incomplete_city_per_shield: int = 1
    cloister_base: int = 1
    cloister_per_neighbor: int = 1
    field_per_completed_city: int = 3
    fields_enabled: bool = True
    meeples_per_player: int = 7

    def to_dict(self) -> dict:
        return {
            "road_per_tile": self.road_per_tile,
            "city_per_tile": self.city_per_tile,
            "city_per_shield": self.city_per_shield,
            "incomplete_road_per_tile": self.incomplete_road_per_tile,
            "incomplete_city_per_tile": self.incomplete_city_per_tile,
            "incomplete_city_per_shield": self.incomplete_city_per_shield,
            "cloister_base": self.cloister_base,
            "cloister_per_neighbor": self.cloister_per_neighbor,
            "field_per_completed_city": self.field_per_completed_city,
            "fields_enabled": self.fields_enabled,
            "meeples_per_player": self.meeples_per_player,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RuleTable":
        return cls(**data)


@dataclass(frozen=True)
class Vertex:
    id: int
    pos: tuple
    slot: str
    feature_class: str
    shield: bool
    meeple: object  # player id or None
    candidate: bool = False


@dataclass(frozen=True)
class FeatureComponent:
    feature_class: str
    root: int
    vertex_ids: tuple
    meeples: dict  # player id -> count
    tiles: frozenset  # distinct tile positions spanned
    shields: int
    open_ends: int


def occupied_neighbors8(board: BoardState, pos) -> int:
    """Occupied cells among the 8 surrounding cells of `pos`."""
    x, y = pos
    count = 0
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            if (dx, dy) == (0, 0):
                continue
            if (x + dx, y + dy) in board.placements:
                count += 1
    return count


class FeatureGraph:
    """Mutable multigraph owned by one game instance.

    The engine treats it persistently: ``add_tile`` copies first, so prior
    snapshots stay valid.  Vertices are stored as parallel lists to keep
    copies cheap.
    """

    def __init__(self, catalog: TileCatalog):
        self.catalog = catalog
        self.v_pos = []
        self.v_slot = []
        self.v_class = []
        self.v_shield = []
        self.v_meeple = []
        self.v_has_inter = []
        self.vertex_index = {}  # (pos, slot) -> vid
        self.edges = []  # (kind, a, b)
        self._parent = []
        self._size = []
        self._comp = {}  # root -> {"meeples", "shields", "open_ends", "tiles"}

    # -- union-find --

    def find(self, vid: int) -> int:
        parent = self._parent
        root = vid
        while parent[root] != root:
            root = parent[root]
        while parent[vid] != root:
            parent[vid], vid = root, parent[vid]
        return root

    def _union(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self._size[ra] < self._size[rb]:
            ra, rb = rb, ra
        self._parent[rb] = ra
        self._size[ra] += self._size[rb]
        ca = self._comp.pop(ra)
        cb = self._comp.pop(rb)
        meeples = dict(ca["meeples"])
        for pid, n in cb["meeples"].items():
            meeples[pid] = meeples.get(pid, 0) + n
        self._comp[ra] = {
            "meeples": meeples,
            "shields": ca["shields"] + cb["shields"],
            "open_ends": ca["open_ends"] + cb["open_ends"],
            "tiles": ca["tiles"] | cb["tiles"],
        }
        return ra

    # -- copying --

    def copy(self) -> "FeatureGraph":
        g = FeatureGraph.__new__(FeatureGraph)
        g.catalog = self.catalog
        g.v_pos = self.v_pos.copy()
        g.v_slot = self.v_slot.copy()
        g.v_class = self.v_class.copy()
        g.v_shield = self.v_shield.copy()
        g.v_meeple = self.v_meeple.copy()
        g.v_has_inter = self.v_has_inter.copy()
        g.vertex_index = self.vertex_index.copy()
        g.edges = self.edges.copy()
        g._parent = self._parent.copy()
        g._size = self._size.copy()
        g._comp = {
            root: {
                "meeples": dict(c["meeples"]),
                "shields": c["shields"],
                "open_ends": c["open_ends"],
                "tiles": set(c["tiles"]),
            }
            for root, c in self._comp.items()
        }
        return g

    # -- queries --

    @property
    def vertex_count(self) -> int:
        return len(self.v_pos)

    def vertex(self, vid: int) -> Vertex:
        return Vertex(
            id=vid,
            pos=self.v_pos[vid],
            slot=self.v_slot[vid],
            feature_class=self.v_class[vid],
            shield=self.v_shield[vid],
            meeple=self.v_meeple[vid],
        )

    def vertex_coord(self, vid: int) -> tuple:
        """Board-plane position of a vertex in tile units."""
        x, y = self.v_pos[vid]
        ox, oy = SLOT_PLANE[self.v_slot[vid]]
        return (x + ox, y + oy)

    def is_legal(self, board: BoardState, spec: TileSpec, pos, rotation: int) -> bool:
        """Graph route: compare facing vertex classes of occupied neighbours."""
        if not board.in_bounds(pos) or pos in board.placements:
            return False
        sides = spec.sides_at(rotation)
        any_neighbor = False
        x, y = pos
        for i, side in enumerate(SIDE_SLOTS):
            dx, dy = SIDE_OFFSET[side]
            npos = (x + dx, y + dy)
            if npos not in board.placements:
                continue
            any_neighbor = True
            facing_vid = self.vertex_index[(npos, FACING_SLOT[side])]
            if self.v_class[facing_vid] != sides[i]:
                return False
        return any_neighbor

    # -- mutation (engine calls these on a fresh copy) --

    def add_tile(self, placed: PlacedTile, board_before: BoardState) -> "FeatureGraph":
        """Pure variant: returns a new graph with the tile added."""
        if board_before.placements and not self.is_legal(
            board_before,
            self.catalog[placed.tile_id],
            placed.pos,
            placed.rotation,
        ):
            raise ScoreError(f"illegal placement of {placed.tile_id} at {placed.pos}")
        g = self.copy()
        g.add_tile_inplace(placed, board_before)
        return g

    def add_tile_inplace(self, placed: PlacedTile, board_before: BoardState) -> None:
        pos = placed.pos
        spec = self.catalog[placed.tile_id]
        template = spec.graph_template(placed.rotation)

        slot_vid = {}
        for slot, cls, shielded in template.vertices:
            vid = len(self.v_pos)
            self.v_pos.append(pos)
            self.v_slot.append(slot)
            self.v_class.append(cls)
            self.v_shield.append(shielded)
            self.v_meeple.append(None)
            self.v_has_inter.append(False)
            self.vertex_index[(pos, slot)] = vid
            self._parent.append(vid)
            self._size.append(1)
            self._comp[vid] = {
                "meeples": {}, "shields": 0, "open_ends": 0, "tiles": set(),
            }
            slot_vid[slot] = vid

        for a, b in template.intra_edges:
            self.edges.append((INTRA_TILE, slot_vid[a], slot_vid[b]))

        for cls, slots, shielded in template.groups:
            vids = [slot_vid[s] for s in slots]
            self._comp[vids[0]].update(
                shields=1 if shielded else 0,
                open_ends=sum(1 for s in slots if s != CENTER),
                tiles={pos},
            )
            for i, a in enumerate(vids):
                for b in vids[i + 1 :]:
                    self.edges.append((FEATURE, a, b))
                    self._union(a, b)

        x, y = pos
        for side in SIDE_SLOTS:
            dx, dy = SIDE_OFFSET[side]
            npos = (x + dx, y + dy)
            if npos not in board_before.placements:
                continue
            mine = slot_vid[side]
            theirs = self.vertex_index[(npos, FACING_SLOT[side])]
            self.edges.append((INTER_TILE, mine, theirs))
            self._comp[self.find(mine)]["open_ends"] -= 1
            self._comp[self.find(theirs)]["open_ends"] -= 1
            self._union(mine, theirs)
            self.v_has_inter[mine] = True
            self.v_has_inter[theirs] = True

    def set_meeple(self, pos, slot: str, player) -> int:
        vid = self.vertex_index[(pos, slot)]
        if self.v_meeple[vid] is not None:
            raise ScoreError(f"vertex {vid} already carries a meeple")
        self.v_meeple[vid] = player
        meeples = self._comp[self.find(vid)]["meeples"]
        meeples[player] = meeples.get(player, 0) + 1
        return vid

    def clear_meeples(self, root: int) -> list:
        """Remove and return [(player, vid)] for every meeple in the component."""
        returned = []
        for vid in range(len(self.v_meeple)):
            if self.v_meeple[vid] is not None and self.find(vid) == root:
                returned.append((self.v_meeple[vid], vid))
                self.v_meeple[vid] = None
        self._comp[root]["meeples"] = {}
        return returned

    # -- components --

    def component_at(self, root: int) -> FeatureComponent:
        root = self.find(root)
        agg = self._comp[root]
        vids = tuple(v for v in range(self.vertex_count) if self.find(v) == root)
        return FeatureComponent(
            feature_class=self.v_class[root],
            root=root,
            vertex_ids=vids,
            meeples=dict(agg["meeples"]),
            tiles=frozenset(agg["tiles"]),
            shields=agg["shields"],
            open_ends=agg["open_ends"],
        )

    def components(self, feature_class: str) -> list:
        roots = []
        seen = set()
        for vid in range(self.vertex_count):
            if self.v_class[vid] != feature_class:
                continue
            root = self.find(vid)
            if root not in seen:
                seen.add(root)
                roots.append(root)
        return [self.component_at(r) for r in roots]

    def is_complete(self, component: FeatureComponent, board: BoardState) -> bool:
        if component.feature_class in (ROAD, CITY):
            return component.open_ends == 0
        if component.feature_class == CLOISTER:
            pos = self.v_pos[component.root]
            return occupied_neighbors8(board, pos) == 8
        return False  # fields never complete

    def completed_city_roots(self) -> set:
        roots = set()
        for vid in range(self.vertex_count):
            if self.v_class[vid] != CITY:
                continue
            root = self.find(vid)
            if self._comp[root]["open_ends"] == 0:
                roots.add(root)
        return roots

    def field_adjacent_city_roots(self, field_root: int) -> set:
        """City components touching the field component via intra-tile edges."""
        field_root = self.find(field_root)
        out = set()
        for kind, a, b in self.edges:
            if kind != INTRA_TILE:
                continue
            ca, cb = self.v_class[a], self.v_class[b]
            if ca == FIELD and cb == CITY and self.find(a) == field_root:
                out.add(self.find(b))
            elif ca == CITY and cb == FIELD and self.find(b) == field_root:
                out.add(self.find(a))
        return out

    # -- scoring --

    def component_value(
        self,
        component: FeatureComponent,
        board: BoardState,
        stage: str,
        rules: RuleTable,
    ) -> int:
        """Point value of the component for its owning player(s)."""
        cls = component.feature_class
        complete = self.is_complete(component, board)
        if stage == "midgame":
            if cls in (ROAD, CITY) and not complete:
                raise ScoreError(f"cannot score incomplete {cls} at midgame")
            if cls == FIELD:
                raise ScoreError("fields are scored at endgame only")
        if cls == ROAD:
            per = rules.road_per_tile if complete else rules.incomplete_road_per_tile
            return per * len(component.tiles)
        if cls == CITY:
            if complete:
                return (
                    rules.city_per_tile * len(component.tiles)
                    + rules.city_per_shield * component.shields
                )
            return (
                rules.incomplete_city_per_tile * len(component.tiles)
                + rules.incomplete_city_per_shield * component.shields
            )
        if cls == CLOISTER:
            pos = self.v_pos[component.root]
            return (
                rules.cloister_base
                + rules.cloister_per_neighbor * occupied_neighbors8(board, pos)
            )
        # field: 3 per adjacent completed city
        completed = self.completed_city_roots()
        adjacent = self.field_adjacent_city_roots(component.root)
        return rules.field_per_completed_city * len(adjacent & completed)

    def score_component(
        self,
        component: FeatureComponent,
        board: BoardState,
        stage: str,
        rules: RuleTable,
    ) -> tuple:
        """(points per player, meeples to return as [(player, vid)]).

        Points go to the player(s) holding the (possibly tied) maximum
        meeple count; zero-meeple components score nobody and return
        nothing.
        """
        if not component.meeples:
            return {}, []
        value = self.component_value(component, board, stage, rules)
        top = max(component.meeples.values())
        points = {pid: value for pid, n in component.meeples.items() if n == top}
        returned = [
            (self.v_meeple[vid], vid)
            for vid in component.vertex_ids
            if self.v_meeple[vid] is not None
        ]
        return points, returned

    # -- placement-time helpers --

    def completions_for(self, placed: PlacedTile, board_after: BoardState) -> list:
        """Roots of components completed by this placement (dedup, ordered)."""
        spec = self.catalog[placed.tile_id]
        template = spec.graph_template(placed.rotation)
        done = []
        seen = set()
        for cls, slots, _ in template.groups:
            if cls not in (ROAD, CITY):
                continue
            root = self.find(self.vertex_index[(placed.pos, slots[0])])
            if root in seen:
                continue
            if self._comp[root]["open_ends"] == 0:
                seen.add(root)
                done.append(root)
        x, y = placed.pos
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                cpos = (x + dx, y + dy)
                vid = self.vertex_index.get((cpos, CENTER))
                if vid is None:
                    continue
                if occupied_neighbors8(board_after, cpos) == 8:
                    root = self.find(vid)
                    if root not in seen:
                        seen.add(root)
                        done.append(root)
        return done

    def _merged_features(self, board: BoardState, spec: TileSpec, pos, rotation: int):
        """Features as they would exist after hypothetically placing the tile.

        Returns a list of dicts with keys ``cls``, ``slots`` (board-frame,
        across all participating tile groups), ``roots`` (merged existing
        component roots), ``matched`` (sides facing occupied neighbours),
        and ``shields``.  Same-class groups that would join through a
        shared existing component are merged into one entry.
        """
        template = spec.graph_template(rotation)
        x, y = pos
        clusters = []
        for cls, slots, shielded in template.groups:
            if cls == CLOISTER:
                clusters.append(
                    {"cls": cls, "slots": list(slots), "roots": {}, "matched": 0,
                     "shields": 0}
                )
                continue
            roots = {}
            matched = 0
            for side in slots:
                dx, dy = SIDE_OFFSET[side]
                npos = (x + dx, y + dy)
                if npos not in board.placements:
                    continue
                matched += 1
                root = self.find(self.vertex_index[(npos, FACING_SLOT[side])])
                roots[root] = self._comp[root]
            entry = {
                "cls": cls,
                "slots": list(slots),
                "roots": roots,
                "matched": matched,
                "shields": 1 if shielded else 0,
            }
            merged = None
            for other in clusters:
                if other["cls"] == cls and roots.keys() & other["roots"].keys():
                    merged = other
                    break
            if merged is None:
                clusters.append(entry)
            else:
                merged["slots"].extend(entry["slots"])
                merged["roots"].update(entry["roots"])
                merged["matched"] += entry["matched"]
                merged["shields"] += entry["shields"]
        return clusters

    def meeple_slots(
        self, board: BoardState, spec: TileSpec, pos, rotation: int, rules: RuleTable
    ) -> list:
        """Board-frame slots where a meeple could go after placing the tile.

        A slot is offered when the feature it would claim, merged across
        the hypothetical placement, carries no meeple of any player.
        """
        valid = []
        for feat in self._merged_features(board, spec, pos, rotation):
            if feat["cls"] == FIELD and not rules.fields_enabled:
                continue
            if any(c["meeples"] for c in feat["roots"].values()):
                continue
            valid.extend(feat["slots"])
        return sorted(valid, key=ALL_SLOT_ORDER.index)

    def preview_points(
        self,
        board: BoardState,
        spec: TileSpec,
        pos,
        rotation: int,
        meeple_slot,
        player,
        rules: RuleTable,
    ) -> int:
        """Immediate midgame points `player` would gain from this action.

        Pure arithmetic over union-find roots; the graph is not modified.
        """
        total = 0
        for feat in self._merged_features(board, spec, pos, rotation):
            cls = feat["cls"]
            if cls == CLOISTER:
                if meeple_slot == CENTER and occupied_neighbors8(board, pos) == 8:
                    total += rules.cloister_base + 8 * rules.cloister_per_neighbor
                continue
            if cls == FIELD:
                continue
            new_open = (
                sum(c["open_ends"] for c in feat["roots"].values())
                + len(feat["slots"])
                - 2 * feat["matched"]
            )
            if new_open != 0:
                continue
            tiles = {pos}
            shields = feat["shields"]
            meeples = {}
            for c in feat["roots"].values():
                tiles |= c["tiles"]
                shields += c["shields"]
                for pid, n in c["meeples"].items():
                    meeples[pid] = meeples.get(pid, 0) + n
            if meeple_slot in feat["slots"]:
                meeples[player] = meeples.get(player, 0) + 1
            if not meeples:
                continue
            top = max(meeples.values())
            if meeples.get(player, 0) != top:
                continue
            if cls == ROAD:
                total += rules.road_per_tile * len(tiles)
            else:
                total += rules.city_per_tile * len(tiles) + rules.city_per_shield * shields
        # Adjacent cloisters the placement completes, owned by `player`.
        x, y = pos
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                if (dx, dy) == (0, 0):
                    continue
                cpos = (x + dx, y + dy)
                vid = self.vertex_index.get((cpos, CENTER))
                if vid is None or self.v_meeple[vid] != player:
                    continue
                if occupied_neighbors8(board, cpos) == 7:
                    total += rules.cloister_base + 8 * rules.cloister_per_neighbor
        return total

    # -- export --

    def node_link_lines(self, candidate_flags=None) -> list:
        """Node-link text: one vertex per line, then one edge per line."""
        lines = []
        for vid in range(self.vertex_count):
            x, y = self.vertex_coord(vid)
            meeple = self.v_meeple[vid]
            candidate = bool(candidate_flags[vid]) if candidate_flags else False
            lines.append(
                f"v {vid} {x:.4f} {y:.4f} {self.v_slot[vid]} {self.v_class[vid]} "
                f"shield={int(self.v_shield[vid])} "
                f"meeple={'-' if meeple is None else meeple} "
                f"candidate={int(candidate)}"
            )
        for kind, a, b in self.edges:
            lines.append(f"e {kind} {a} {b}")
        return lines

    def export_node_link(self) -> str:
        return "\n".join(self.node_link_lines()) + "\n"


def brute_force_legal(board: BoardState, spec: TileSpec, pos, rotation: int) -> bool:
    """Independent legality oracle: direct side-label comparison only."""
    if not board.in_bounds(pos) or pos in board.placements:
        return False
    sides = spec.sides_at(rotation)
    any_neighbor = False
    x, y = pos
    for i, side in enumerate(SIDE_SLOTS):
        dx, dy = SIDE_OFFSET[side]
        npos = (x + dx, y + dy)
        placed = board.placements.get(npos)
        if placed is None:
            continue
        any_neighbor = True
        neighbor_sides = board.catalog[placed.tile_id].sides_at(placed.rotation)
        if neighbor_sides[SIDE_SLOTS.index(FACING_SLOT[side])] != sides[i]:
            return False
    return any_neighbor
