/**
 * Canvas drawing for the board view.
 *
 * Drawing goes through the Painter interface so tests can record calls
 * without a DOM. Tile art is the 3x3 class grid served by the catalog
 * endpoint, rotated client-side in clockwise quarter turns to match the
 * placement rotation.
 */

import type { CatalogView, PlacementView, StateView } from './api.js';
import type { Badge } from './model.js';

export interface Painter {
  fillRect(x: number, y: number, w: number, h: number, color: string): void;
  strokeRect(x: number, y: number, w: number, h: number, color: string, width?: number): void;
  fillCircle(cx: number, cy: number, r: number, color: string): void;
  fillText(text: string, x: number, y: number, color: string, font?: string): void;
}

export const CLOISTER_BIT = 1;
export const ROAD_BIT = 2;
export const CITY_BIT = 4;

export const CLASS_COLORS: Record<string, string> = {
  cloister: '#b05a7a',
  city: '#c08040',
  road: '#b8b8b0',
  field: '#7aa05a',
};

export const PLAYER_COLORS = ['#2060c0', '#c03030', '#208050', '#806020'];

const SLOT_COORDS: Record<string, [number, number]> = {
  N: [0.5, 1 / 6],
  E: [5 / 6, 0.5],
  S: [0.5, 5 / 6],
  W: [1 / 6, 0.5],
  C: [0.5, 0.5],
};

/** Dominant feature class of a subcell bit pattern. */
export function classOfBits(bits: number): string {
  if (bits & CLOISTER_BIT) return 'cloister';
  if (bits & CITY_BIT) return 'city';
  if (bits & ROAD_BIT) return 'road';
  return 'field';
}

/** Rotate a 3x3 grid one quarter turn clockwise. */
export function rotateGridCw(grid: number[][]): number[][] {
  const out: number[][] = [];
  for (let r = 0; r < 3; r++) {
    const row: number[] = [];
    for (let c = 0; c < 3; c++) row.push(grid[2 - c][r]);
    out.push(row);
  }
  return out;
}

export function rotatedGrid(grid: number[][], rotation: number): number[][] {
  let g = grid;
  for (let i = 0; i < ((rotation % 4) + 4) % 4; i++) g = rotateGridCw(g);
  return g;
}

export function drawTile(
  p: Painter,
  px: number,
  py: number,
  size: number,
  grid: number[][],
  rotation: number,
  shield = false,
): void {
  const g = rotatedGrid(grid, rotation);
  const cell = size / 3;
  for (let r = 0; r < 3; r++) {
    for (let c = 0; c < 3; c++) {
      p.fillRect(px + c * cell, py + r * cell, cell, cell, CLASS_COLORS[classOfBits(g[r][c])]);
    }
  }
  p.strokeRect(px, py, size, size, '#30302880', 1);
  if (shield) {
    p.fillCircle(px + size * 0.2, py + size * 0.2, size * 0.08, '#3050c0');
  }
}

export function drawMeeple(
  p: Painter,
  px: number,
  py: number,
  size: number,
  slot: string,
  player: number,
): void {
  const [fx, fy] = SLOT_COORDS[slot] ?? SLOT_COORDS.C;
  p.fillCircle(px + fx * size, py + fy * size, size * 0.12, PLAYER_COLORS[player % PLAYER_COLORS.length]);
  p.fillCircle(px + fx * size, py + fy * size, size * 0.05, '#ffffff');
}

export function drawBoard(
  p: Painter,
  state: StateView,
  catalog: CatalogView,
  boardSize: number,
  tilePx: number,
): void {
  p.fillRect(0, 0, boardSize * tilePx, boardSize * tilePx, '#242420');
  for (const pl of state.placements) {
    drawPlacement(p, pl, catalog, tilePx);
  }
  for (const pos of state.legal_positions) {
    p.strokeRect(pos.x * tilePx + 1, pos.y * tilePx + 1, tilePx - 2, tilePx - 2, '#e0d89060', 1);
  }
}

export function drawPlacement(
  p: Painter,
  pl: PlacementView,
  catalog: CatalogView,
  tilePx: number,
): void {
  const spec = catalog.tiles[pl.tile];
  if (!spec) return;
  drawTile(p, pl.x * tilePx, pl.y * tilePx, tilePx, spec.grid, pl.rotation, spec.shield);
  if (pl.meeple_player !== null && pl.meeple_slot !== null) {
    drawMeeple(p, pl.x * tilePx, pl.y * tilePx, tilePx, pl.meeple_slot, pl.meeple_player);
  }
}

const ROT_ARROWS = ['↑', '→', '↓', '←'];

/** Prediction badges; draws nothing when the list is empty. */
export function drawOverlay(p: Painter, badges: Badge[], tilePx: number): void {
  for (const b of badges) {
    const px = b.x * tilePx;
    const py = b.y * tilePx;
    p.strokeRect(px + 2, py + 2, tilePx - 4, tilePx - 4, '#f0c040', 2);
    const arrow = ROT_ARROWS[((b.rotation % 4) + 4) % 4];
    p.fillText(`${b.rank}${arrow} ${(b.prob * 100).toFixed(0)}%`, px + 4, py + 14, '#f0c040');
  }
}

/** Attention heatmap over 3x3 subcells, alpha scaled to the max cell. */
export function drawHeatmap(p: Painter, grid: number[][], tilePx: number): void {
  let max = 0;
  for (const row of grid) {
    for (const v of row) if (v > max) max = v;
  }
  if (max <= 0) return;
  const sub = tilePx / 3;
  for (let r = 0; r < grid.length; r++) {
    for (let c = 0; c < grid[r].length; c++) {
      const v = grid[r][c];
      if (v <= 0) continue;
      const alpha = Math.min(0.75, (0.75 * v) / max);
      p.fillRect(c * sub, r * sub, sub, sub, `rgba(240, 80, 40, ${alpha.toFixed(3)})`);
    }
  }
}

/** Board cell under a canvas pixel, or null when outside. */
export function cellAt(
  px: number,
  py: number,
  boardSize: number,
  tilePx: number,
): { x: number; y: number } | null {
  const x = Math.floor(px / tilePx);
  const y = Math.floor(py / tilePx);
  if (x < 0 || y < 0 || x >= boardSize || y >= boardSize) return null;
  return { x, y };
}

/** Canvas pixel to board-plane coordinates for gaze capture. */
export function boardPoint(px: number, py: number, tilePx: number): { x: number; y: number } {
  return { x: px / tilePx, y: py / tilePx };
}

/** Painter writing to a real 2d canvas context. */
export function canvasPainter(ctx: CanvasRenderingContext2D): Painter {
  return {
    fillRect(x, y, w, h, color) {
      ctx.fillStyle = color;
      ctx.fillRect(x, y, w, h);
    },
    strokeRect(x, y, w, h, color, width = 1) {
      ctx.strokeStyle = color;
      ctx.lineWidth = width;
      ctx.strokeRect(x, y, w, h);
    },
    fillCircle(cx, cy, r, color) {
      ctx.fillStyle = color;
      ctx.beginPath();
      ctx.arc(cx, cy, r, 0, Math.PI * 2);
      ctx.fill();
    },
    fillText(text, x, y, color, font = '12px sans-serif') {
      ctx.fillStyle = color;
      ctx.font = font;
      ctx.fillText(text, x, y);
    },
  };
}
