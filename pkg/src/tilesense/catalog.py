"""Tile vocabulary: per-tile sub-tile bit encodings and graph templates.

Each tile is described by its four side feature classes (N, E, S, W), an
optional cloister, an optional shield, and a partition of its connection
slots into feature groups (the logical features of the tile).  From that
record two derived encodings are produced:

* a 3x3 grid of sub-tile cells, each a 4-bit field in the fixed order
  [cloister, road, city, field] (LSB first) plus an auxiliary shield flag;
* a graph template with one vertex per side (plus a centre vertex for
  cloisters), a fixed ring of intra-tile edges, and feature edges forming
  a clique inside every feature group.

Sub-tile cell convention (the catalog file stores only sides + groups, the
cells are derived):

* the edge-centre cell of a side carries that side's class bit;
* a corner cell is city when both adjacent sides are city and belong to
  the same feature group, otherwise field;
* the centre cell is cloister on cloister tiles, road when the tile has
  two or more road sides, city when a connected city group spans two or
  more sides, and field otherwise;
* the shield flag sits on the centre cell when that cell is city,
  otherwise on the shielded group's first side cell in N,E,S,W order.

Catalog file grammar: UTF-8 text, ``#`` comments and blank lines ignored,
one record per line::

    tile_id, count, sides(NESW as 4 chars r/c/f), cloister(0/1),
    shield(0/1), feature_groups(';'-separated slot strings over NESWC)

The file round-trips losslessly through ``load_catalog`` / ``dump_catalog``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from importlib import resources
from typing import NamedTuple

# Feature-class bits, LSB first: [cloister, road, city, field].
CLOISTER_BIT = 1
ROAD_BIT = 2
CITY_BIT = 4
FIELD_BIT = 8

ROAD = "road"
CITY = "city"
FIELD = "field"
CLOISTER = "cloister"

CLASS_BITS = {CLOISTER: CLOISTER_BIT, ROAD: ROAD_BIT, CITY: CITY_BIT, FIELD: FIELD_BIT}
SIDE_CHAR_CLASS = {"r": ROAD, "c": CITY, "f": FIELD}
CLASS_SIDE_CHAR = {v: k for k, v in SIDE_CHAR_CLASS.items()}

SIDE_SLOTS = ("N", "E", "S", "W")
CENTER = "C"
ALL_SLOTS = SIDE_SLOTS + (CENTER,)

# Sub-tile coordinates (row, col) of each slot inside the 3x3 grid.
SLOT_CELL = {"N": (0, 1), "E": (1, 2), "S": (2, 1), "W": (1, 0), CENTER: (1, 1)}

# Physically adjacent side pairs; also the fixed intra-tile edge ring.
ADJACENT_SIDES = (("N", "E"), ("E", "S"), ("S", "W"), ("W", "N"))


class SubTileCell(NamedTuple):
    bits: int
    shield: bool


EMPTY_CELL = SubTileCell(0, False)


class CatalogError(ValueError):
    """Raised for unparsable or inconsistent catalog data."""


def rotate_slot(slot: str, rotation: int) -> str:
    """Board-frame slot occupied by `slot` after `rotation` cw quarter-turns."""
    if slot == CENTER:
        return CENTER
    return SIDE_SLOTS[(SIDE_SLOTS.index(slot) + rotation) % 4]


@dataclass(frozen=True)
class TileGraphTemplate:
    """Per-tile graph fragment in board frame: vertices, ring edges, cliques."""

    vertices: tuple  # of (slot, feature_class, shield_flag)
    intra_edges: tuple  # of (slot, slot)
    feature_edges: tuple  # of (slot, slot)
    groups: tuple  # of (feature_class, slots tuple, shield_flag)


@dataclass(frozen=True)
class TileSpec:
    tile_id: str
    count: int
    sides: tuple  # 4 feature classes in N,E,S,W order
    cloister: bool
    shield: bool
    groups: tuple  # of frozenset of slots

    def __post_init__(self):
        object.__setattr__(self, "_subgrids", {})
        object.__setattr__(self, "_templates", {})

    # -- group helpers --

    def slot_class(self, slot: str) -> str:
        if slot == CENTER:
            return CLOISTER
        return self.sides[SIDE_SLOTS.index(slot)]

    def group_of(self, slot: str) -> frozenset:
        for g in self.groups:
            if slot in g:
                return g
        raise KeyError(slot)

    def group_class(self, group: frozenset) -> str:
        return self.slot_class(next(iter(sorted(group, key=ALL_SLOTS.index))))

    def shield_group(self):
        """The (single) city group carrying this tile's shield, or None."""
        if not self.shield:
            return None
        for g in self.groups:
            if self.group_class(g) == CITY:
                return g
        return None

    @property
    def slots(self) -> tuple:
        return ALL_SLOTS if self.cloister else SIDE_SLOTS

    def sides_at(self, rotation: int) -> tuple:
        """Side classes in board-frame N,E,S,W order after rotation."""
        return tuple(self.sides[(i - rotation) % 4] for i in range(4))

    # -- derived encodings --

    def subgrid(self, rotation: int = 0) -> tuple:
        """3x3 grid of SubTileCell rotated by `rotation` cw quarter-turns."""
        if rotation not in (0, 1, 2, 3):
            raise ValueError(f"rotation must be 0..3, got {rotation}")
        cached = self._subgrids.get(rotation)
        if cached is None:
            base = self._subgrids.get(0)
            if base is None:
                base = _build_subgrid(self)
                self._subgrids[0] = base
            grid = base
            for _ in range(rotation):
                grid = _rotate_grid_cw(grid)
            self._subgrids[rotation] = cached = grid
        return cached

    def graph_template(self, rotation: int = 0) -> TileGraphTemplate:
        if rotation not in (0, 1, 2, 3):
            raise ValueError(f"rotation must be 0..3, got {rotation}")
        cached = self._templates.get(rotation)
        if cached is None:
            cached = _build_template(self, rotation)
            self._templates[rotation] = cached
        return cached


def _build_subgrid(spec: TileSpec) -> tuple:
    cells = [[EMPTY_CELL] * 3 for _ in range(3)]

    def put(rc, feature_class):
        cells[rc[0]][rc[1]] = SubTileCell(CLASS_BITS[feature_class], False)

    for slot in SIDE_SLOTS:
        put(SLOT_CELL[slot], spec.slot_class(slot))

    for a, b in ADJACENT_SIDES:
        corner = (
            SLOT_CELL[a][0] + SLOT_CELL[b][0] - 1,
            SLOT_CELL[a][1] + SLOT_CELL[b][1] - 1,
        )
        same_city = (
            spec.slot_class(a) == CITY
            and spec.slot_class(b) == CITY
            and spec.group_of(a) == spec.group_of(b)
        )
        put(corner, CITY if same_city else FIELD)

    road_sides = sum(1 for s in SIDE_SLOTS if spec.slot_class(s) == ROAD)
    wide_city = any(
        spec.group_class(g) == CITY and len(g) >= 2 for g in spec.groups
    )
    if spec.cloister:
        put(SLOT_CELL[CENTER], CLOISTER)
    elif road_sides >= 2:
        put(SLOT_CELL[CENTER], ROAD)
    elif wide_city:
        put(SLOT_CELL[CENTER], CITY)
    else:
        put(SLOT_CELL[CENTER], FIELD)

    if spec.shield:
        group = spec.shield_group()
        r, c = SLOT_CELL[CENTER]
        if not cells[r][c].bits & CITY_BIT:
            slot = min(group, key=ALL_SLOTS.index)
            r, c = SLOT_CELL[slot]
        cells[r][c] = SubTileCell(cells[r][c].bits, True)

    return tuple(tuple(row) for row in cells)


def _rotate_grid_cw(grid: tuple) -> tuple:
    return tuple(tuple(grid[2 - c][r] for c in range(3)) for r in range(3))


def _build_template(spec: TileSpec, rotation: int) -> TileGraphTemplate:
    shield_group = spec.shield_group()
    vertices = []
    groups = []
    feature_edges = []
    for group in spec.groups:
        cls = spec.group_class(group)
        shielded = group == shield_group
        slots = tuple(
            sorted((rotate_slot(s, rotation) for s in group), key=ALL_SLOTS.index)
        )
        groups.append((cls, slots, shielded))
        for slot in slots:
            vertices.append((slot, cls, shielded and cls == CITY))
        for i, a in enumerate(slots):
            for b in slots[i + 1 :]:
                feature_edges.append((a, b))
    vertices.sort(key=lambda v: ALL_SLOTS.index(v[0]))
    return TileGraphTemplate(
        vertices=tuple(vertices),
        intra_edges=ADJACENT_SIDES,
        feature_edges=tuple(feature_edges),
        groups=tuple(groups),
    )


@dataclass(frozen=True)
class TileCatalog:
    tiles: tuple
    source_text: str

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {t.tile_id: t for t in self.tiles})

    @property
    def total_count(self) -> int:
        return sum(t.count for t in self.tiles)

    def __getitem__(self, tile_id: str) -> TileSpec:
        return self._by_id[tile_id]

    def __contains__(self, tile_id: str) -> bool:
        return tile_id in self._by_id

    def hash(self) -> str:
        return hashlib.sha256(self.source_text.encode("utf-8")).hexdigest()[:16]


def parse_catalog(text: str) -> TileCatalog:
    tiles = []
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 6:
            raise CatalogError(f"line {lineno}: expected 6 fields, got {len(parts)}")
        tile_id, count_s, sides_s, cloister_s, shield_s, groups_s = parts
        if tile_id in seen:
            raise CatalogError(f"line {lineno}: duplicate tile_id {tile_id!r}")
        seen.add(tile_id)
        try:
            count = int(count_s)
            cloister = bool(int(cloister_s))
            shield = bool(int(shield_s))
        except ValueError as exc:
            raise CatalogError(f"line {lineno}: {exc}") from None
        if count < 1:
            raise CatalogError(f"line {lineno}: count must be positive")
        if len(sides_s) != 4 or any(ch not in SIDE_CHAR_CLASS for ch in sides_s):
            raise CatalogError(
                f"line {lineno}: sides must be 4 chars over r/c/f, got {sides_s!r}"
            )
        sides = tuple(SIDE_CHAR_CLASS[ch] for ch in sides_s)
        groups = tuple(
            frozenset(g) for g in groups_s.split(";") if g
        )
        spec = TileSpec(
            tile_id=tile_id,
            count=count,
            sides=sides,
            cloister=cloister,
            shield=shield,
            groups=groups,
        )
        _validate_spec(spec, lineno)
        tiles.append(spec)
    if not tiles:
        raise CatalogError("catalog has no tiles")
    return TileCatalog(tiles=tuple(tiles), source_text=text)


def _validate_spec(spec: TileSpec, lineno: int) -> None:
    def err(msg):
        raise CatalogError(f"line {lineno}: tile {spec.tile_id!r}: {msg}")

    covered = [s for g in spec.groups for s in g]
    if sorted(covered) != sorted(set(covered)):
        err("a slot appears in more than one feature group")
    expected = set(spec.slots)
    if set(covered) != expected:
        missing = expected - set(covered)
        extra = set(covered) - expected
        err(f"feature groups must partition {sorted(expected)} "
            f"(missing {sorted(missing)}, extra {sorted(extra)})")
    for g in spec.groups:
        classes = {spec.slot_class(s) for s in g}
        if len(classes) != 1:
            err(f"feature group {sorted(g)} mixes classes {sorted(classes)}")
    if spec.shield:
        city_groups = [g for g in spec.groups if spec.group_class(g) == CITY]
        if len(city_groups) != 1:
            err("shield requires exactly one city group")
    # Side labels must agree with the derived edge-centre cells.
    grid = spec.subgrid(0)
    for slot in SIDE_SLOTS:
        r, c = SLOT_CELL[slot]
        if not grid[r][c].bits & CLASS_BITS[spec.slot_class(slot)]:
            err(f"side {slot} label disagrees with its edge-centre cell")


def dump_catalog(catalog: TileCatalog) -> str:
    """Serialize tile records back to the catalog grammar (no comments)."""
    lines = []
    for t in catalog.tiles:
        sides = "".join(CLASS_SIDE_CHAR[s] for s in t.sides)
        groups = ";".join(
            "".join(sorted(g, key=ALL_SLOTS.index))
            for g in sorted(t.groups, key=lambda g: min(ALL_SLOTS.index(s) for s in g))
        )
        lines.append(
            f"{t.tile_id}, {t.count}, {sides}, {int(t.cloister)}, "
            f"{int(t.shield)}, {groups}"
        )
    return "\n".join(lines) + "\n"


def load_catalog(path) -> TileCatalog:
    with open(path, encoding="utf-8") as fh:
        return parse_catalog(fh.read())


def base_catalog() -> TileCatalog:
    """The bundled 72-tile base-game catalog."""
    text = resources.files("tilesense.data").joinpath("base_catalog.txt").read_text(
        encoding="utf-8"
    )
    return parse_catalog(text)


START_TILE_ID = "D"
