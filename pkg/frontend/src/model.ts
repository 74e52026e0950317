/**
 * Pure view-model helpers.
 *
 * Everything here is derived from server payloads. Scores are folded
 * from the event stream so the header can be cross-checked against the
 * state view, and action lookup searches the server's legal-action list
 * instead of recomputing placement rules.
 */

import type { ActionView, GameEvent, Prediction } from './api.js';

export interface ScorePayload {
  stage: string;
  feature_class: string;
  points: Record<string, number>;
  tiles: number[][];
}

/** Sum score-event points per player, starting from zero. */
export function foldScores(events: GameEvent[], players: number): number[] {
  const totals = new Array<number>(players).fill(0);
  for (const ev of events) {
    if (ev.kind !== 'score') continue;
    const points = (ev.payload as unknown as ScorePayload).points;
    for (const [pid, value] of Object.entries(points)) {
      const idx = Number(pid);
      if (idx >= 0 && idx < players) totals[idx] += value;
    }
  }
  return totals;
}

/** Find the server action index matching a concrete move, if legal. */
export function findAction(
  actions: ActionView[],
  x: number,
  y: number,
  rotation: number,
  option: string,
): ActionView | null {
  for (const a of actions) {
    if (a.x === x && a.y === y && a.rotation === rotation && a.option === option) {
      return a;
    }
  }
  return null;
}

/** Rotations legal at a cell, in ascending order. */
export function legalRotations(
  actions: ActionView[],
  x: number,
  y: number,
): number[] {
  const rots = new Set<number>();
  for (const a of actions) {
    if (a.x === x && a.y === y) rots.add(a.rotation);
  }
  return [...rots].sort((p, q) => p - q);
}

/** Next legal rotation after `current` at a cell, cycling. */
export function nextRotation(
  actions: ActionView[],
  x: number,
  y: number,
  current: number,
): number | null {
  const rots = legalRotations(actions, x, y);
  if (rots.length === 0) return null;
  for (const r of rots) {
    if (r > current) return r;
  }
  return rots[0];
}

/** Meeple options legal for a fixed placement, "none" first. */
export function meepleOptionsAt(
  actions: ActionView[],
  x: number,
  y: number,
  rotation: number,
): string[] {
  const opts: string[] = [];
  for (const a of actions) {
    if (a.x === x && a.y === y && a.rotation === rotation && !opts.includes(a.option)) {
      opts.push(a.option);
    }
  }
  return opts;
}

export interface Badge {
  x: number;
  y: number;
  rotation: number;
  prob: number;
  rank: number;
}

/** Guidance badges for the overlay; empty when guidance is off. */
export function overlayBadges(
  predictions: Prediction[],
  enabled: boolean,
): Badge[] {
  if (!enabled) return [];
  return predictions.map((p, i) => ({
    x: p.x,
    y: p.y,
    rotation: p.rotation,
    prob: p.prob,
    rank: i + 1,
  }));
}

/** Cells with at least one legal placement, deduplicated. */
export function legalCells(actions: ActionView[]): { x: number; y: number }[] {
  const seen = new Set<string>();
  const cells: { x: number; y: number }[] = [];
  for (const a of actions) {
    const key = `${a.x},${a.y}`;
    if (!seen.has(key)) {
      seen.add(key);
      cells.push({ x: a.x, y: a.y });
    }
  }
  return cells;
}
