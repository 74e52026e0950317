"""Gaze trace ingestion, dwell heatmaps, fixation detection, graph fusion.

Traces are sequences of ``(t_ms, x, y, valid)`` samples in board-plane
units, where tile ``(tx, ty)`` spans ``[tx, tx+1) x [ty, ty+1)``.  The
``valid`` flag marks samples where the tracker had a lock; invalid
samples keep their place in the timeline but never contribute dwell and
always break fixation windows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .situation.candidate import CandidateBoard

SUBCELLS = 3
DEFAULT_DISPERSION = 1.0 / 3.0
DEFAULT_DURATION_MS = 100.0

_HEADER_TOKENS = ("t_ms", "t", "time")


class GazeError(ValueError):
    """Raised for malformed or non-monotone gaze logs."""


@dataclass(frozen=True)
class GazeTrace:
    t_ms: np.ndarray
    xy: np.ndarray
    valid: np.ndarray

    def __len__(self) -> int:
        return int(self.t_ms.shape[0])

    @property
    def duration_ms(self) -> float:
        if len(self) < 2:
            return 0.0
        return float(self.t_ms[-1] - self.t_ms[0])

    def valid_dwell_ms(self) -> float:
        """Total time spanned by intervals whose leading sample is valid."""
        if len(self) < 2:
            return 0.0
        dt = np.diff(self.t_ms)
        return float(dt[self.valid[:-1]].sum())

    def to_lines(self) -> list[str]:
        lines = ["t_ms,x,y,valid"]
        for i in range(len(self)):
            lines.append(
                f"{self.t_ms[i]:.3f},{self.xy[i, 0]:.5f},"
                f"{self.xy[i, 1]:.5f},{int(self.valid[i])}"
            )
        return lines


def make_trace(
    t_ms: Sequence[float],
    xy: Sequence[tuple[float, float]],
    valid: Optional[Sequence[bool]] = None,
) -> GazeTrace:
    t = np.asarray(t_ms, dtype=np.float64)
    pts = np.asarray(xy, dtype=np.float64).reshape(len(t), 2)
    if valid is None:
        ok = np.ones(len(t), dtype=bool)
    else:
        ok = np.asarray(valid, dtype=bool)
    if len(t) and np.any(np.diff(t) <= 0):
        bad = int(np.argmax(np.diff(t) <= 0)) + 1
        raise GazeError(f"sample {bad}: timestamps must be strictly increasing")
    return GazeTrace(t_ms=t, xy=pts, valid=ok)


def ingest(text: str) -> GazeTrace:
    """Parse a ``t_ms,x,y,valid`` log.

    Blank lines and ``#`` comments are skipped.  A leading header row is
    tolerated.  Any other malformed line, and any timestamp that does not
    strictly increase, raises :class:`GazeError` naming the line number.
    """
    ts: list[float] = []
    xs: list[float] = []
    ys: list[float] = []
    ok: list[bool] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 4:
            raise GazeError(f"line {lineno}: expected 4 comma-separated fields")
        try:
            t = float(parts[0])
        except ValueError:
            if not ts and parts[0].lower() in _HEADER_TOKENS:
                continue
            raise GazeError(f"line {lineno}: bad timestamp {parts[0]!r}") from None
        try:
            x, y = float(parts[1]), float(parts[2])
            v = int(parts[3])
        except ValueError as exc:
            raise GazeError(f"line {lineno}: {exc}") from None
        if v not in (0, 1):
            raise GazeError(f"line {lineno}: valid flag must be 0 or 1")
        if ts and t <= ts[-1]:
            raise GazeError(
                f"line {lineno}: timestamp {t:g} does not increase past {ts[-1]:g}"
            )
        ts.append(t)
        xs.append(x)
        ys.append(y)
        ok.append(bool(v))
    return GazeTrace(
        t_ms=np.asarray(ts, dtype=np.float64),
        xy=np.column_stack([xs, ys]) if ts else np.zeros((0, 2)),
        valid=np.asarray(ok, dtype=bool),
    )


def load_trace(path) -> GazeTrace:
    with open(path, "r", encoding="utf-8") as fh:
        return ingest(fh.read())


@dataclass(frozen=True)
class Heatmap:
    """Per-subcell dwell in milliseconds over a ``3W x 3W`` grid."""

    grid: np.ndarray
    off_board_ms: float
    board_size: int

    @property
    def on_board_ms(self) -> float:
        return float(self.grid.sum())

    def to_csv_lines(self) -> list[str]:
        lines = []
        for row in self.grid:
            lines.append(",".join(f"{v:.6f}" for v in row))
        return lines


def heatmap(
    trace: GazeTrace,
    board_size: int,
    half_life_ms: Optional[float] = None,
) -> Heatmap:
    """Accumulate dwell per subcell.

    Each inter-sample interval is credited to the earlier sample: to its
    subcell when that sample is valid and on the board, to the off-board
    bucket when valid but outside, and to nothing when invalid.  The final
    sample has no following interval and contributes no dwell.  With
    ``half_life_ms`` set, an interval starting ``a`` ms before the end of
    the trace is weighted by ``0.5 ** (a / half_life_ms)`` so that recent
    attention dominates.
    """
    side = SUBCELLS * board_size
    grid = np.zeros((side, side), dtype=np.float64)
    off = 0.0
    n = len(trace)
    if n >= 2:
        t_end = trace.t_ms[-1]
        for i in range(n - 1):
            if not trace.valid[i]:
                continue
            dt = float(trace.t_ms[i + 1] - trace.t_ms[i])
            if half_life_ms is not None:
                age = float(t_end - trace.t_ms[i])
                dt *= 0.5 ** (age / half_life_ms)
            x, y = trace.xy[i]
            cx = math.floor(x * SUBCELLS)
            cy = math.floor(y * SUBCELLS)
            if 0 <= cx < side and 0 <= cy < side:
                grid[cy, cx] += dt
            else:
                off += dt
    return Heatmap(grid=grid, off_board_ms=off, board_size=board_size)


@dataclass(frozen=True)
class Fixation:
    x: float
    y: float
    onset_ms: float
    duration_ms: float
    n_samples: int


def _dispersion(xy: np.ndarray) -> float:
    spread = xy.max(axis=0) - xy.min(axis=0)
    return float(math.hypot(spread[0], spread[1]))


def fixations(
    trace: GazeTrace,
    dispersion_threshold: float = DEFAULT_DISPERSION,
    duration_threshold_ms: float = DEFAULT_DURATION_MS,
) -> list[Fixation]:
    """Dispersion-based fixation detection.

    Starting from each candidate sample, the window grows while every
    sample is valid and the bounding-box diagonal of the window stays
    within ``dispersion_threshold``.  Window growth never consults the
    duration threshold; it only filters the finished window, so tightening
    it can only drop fixations.  A window that is too short advances the
    start by a single sample.
    """
    out: list[Fixation] = []
    t, xy, ok = trace.t_ms, trace.xy, trace.valid
    n = len(trace)
    i = 0
    while i < n:
        if not ok[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and ok[j + 1] and _dispersion(xy[i : j + 2]) <= dispersion_threshold:
            j += 1
        duration = float(t[j] - t[i])
        if duration >= duration_threshold_ms and j > i:
            centroid = xy[i : j + 1].mean(axis=0)
            out.append(
                Fixation(
                    x=float(centroid[0]),
                    y=float(centroid[1]),
                    onset_ms=float(t[i]),
                    duration_ms=duration,
                    n_samples=j - i + 1,
                )
            )
            i = j + 1
        else:
            i += 1
    return out


@dataclass(frozen=True)
class GazeGraph:
    """Fixation nodes joined by the ordered saccade path.

    ``links`` pairs a fixation index with a board vertex id and is empty
    until :func:`attach` is applied against a candidate board.
    """

    fixations: tuple[Fixation, ...]
    links: tuple[tuple[int, int], ...] = field(default=())

    @property
    def saccades(self) -> tuple[tuple[int, int], ...]:
        return tuple((i, i + 1) for i in range(len(self.fixations) - 1))


def build_gaze_graph(
    trace: GazeTrace,
    dispersion_threshold: float = DEFAULT_DISPERSION,
    duration_threshold_ms: float = DEFAULT_DURATION_MS,
) -> GazeGraph:
    return GazeGraph(
        fixations=tuple(fixations(trace, dispersion_threshold, duration_threshold_ms))
    )


def attach(graph: GazeGraph, cb: CandidateBoard, radius: float) -> GazeGraph:
    """Link each fixation to every board vertex within ``radius``.

    Distances are Euclidean in board-plane units against the vertex
    coordinates carried by ``cb``; candidate vertices participate like
    real ones.  The candidate board itself is never modified.  A
    non-positive radius produces no links.
    """
    if cb.coords is None:
        raise ValueError("candidate board carries no vertex coordinates")
    links: list[tuple[int, int]] = []
    if radius > 0 and len(graph.fixations) and cb.n_vertices:
        coords = cb.coords
        for fi, fx in enumerate(graph.fixations):
            d = np.hypot(coords[:, 0] - fx.x, coords[:, 1] - fx.y)
            for vid in np.flatnonzero(d <= radius):
                links.append((fi, int(vid)))
    return replace(graph, links=tuple(links))


_CLASS_NAMES = ("cloister", "road", "city", "field")


def candidate_node_link_lines(cb: CandidateBoard) -> list[str]:
    """Serialize a candidate board in the feature-graph node-link format."""
    if cb.coords is None:
        raise ValueError("candidate board carries no vertex coordinates")
    lines = []
    for vid in range(cb.n_vertices):
        cls_idx = int(np.argmax(cb.x[vid, :4]))
        slot = cb.slots[vid] if cb.slots is not None else "-"
        meeple = cb.x[vid, 5]
        meeple_txt = "-" if meeple == 0 else ("own" if meeple > 0 else "opp")
        lines.append(
            f"v {vid} {cb.coords[vid, 0]:.4f} {cb.coords[vid, 1]:.4f} "
            f"{slot} {_CLASS_NAMES[cls_idx]} shield={int(cb.x[vid, 4])} "
            f"meeple={meeple_txt} candidate={int(cb.x[vid, 6])}"
        )
    for idx, (a, b) in enumerate(cb.edges):
        if cb.edge_kinds is not None:
            kind = cb.edge_kinds[idx]
        else:
            kind = "inter_tile" if (a < cb.n_real) != (b < cb.n_real) else "feature"
        lines.append(f"e {kind} {int(a)} {int(b)}")
    return lines


def fused_node_link(graph: GazeGraph, cb: CandidateBoard) -> str:
    """Board vertices plus fixation nodes, saccade edges and gaze links.

    Fixation nodes reuse the ``v`` line shape with class ``gaze`` and an
    ``onset``/``duration`` tail; edge kinds ``saccade`` and ``gaze_link``
    extend the board's edge vocabulary.
    """
    lines = candidate_node_link_lines(cb)
    base = cb.n_vertices
    for fi, fx in enumerate(graph.fixations):
        lines.append(
            f"v {base + fi} {fx.x:.4f} {fx.y:.4f} - gaze shield=0 meeple=- "
            f"candidate=0 onset={fx.onset_ms:.1f} duration={fx.duration_ms:.1f}"
        )
    for a, b in graph.saccades:
        lines.append(f"e saccade {base + a} {base + b}")
    for fi, vid in graph.links:
        lines.append(f"e gaze_link {base + fi} {vid}")
    return "\n".join(lines) + "\n"
