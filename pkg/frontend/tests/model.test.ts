import { describe, expect, it } from 'vitest';

import type { ActionView, GameEvent } from '../src/api.js';
import {
  foldScores,
  findAction,
  legalCells,
  legalRotations,
  meepleOptionsAt,
  nextRotation,
  overlayBadges,
} from '../src/model.js';

function scoreEvent(seq: number, points: Record<string, number>): GameEvent {
  return {
    seq,
    turn: seq,
    kind: 'score',
    payload: { stage: 'midgame', feature_class: 'road', points, tiles: [] },
  };
}

describe('foldScores', () => {
  it('sums score payloads per player and ignores other kinds', () => {
    const events: GameEvent[] = [
      { seq: 0, turn: 0, kind: 'session', payload: { seed: 1 } },
      scoreEvent(1, { '0': 4 }),
      { seq: 2, turn: 3, kind: 'discard', payload: { tile: 'Q' } },
      scoreEvent(3, { '0': 3, '1': 3 }),
      scoreEvent(4, { '1': 9 }),
    ];
    expect(foldScores(events, 2)).toEqual([7, 12]);
  });

  it('starts every player at zero', () => {
    expect(foldScores([], 3)).toEqual([0, 0, 0]);
  });

  it('drops point entries outside the player range', () => {
    expect(foldScores([scoreEvent(0, { '5': 10, '0': 2 })], 2)).toEqual([2, 0]);
  });
});

const ACTIONS: ActionView[] = [
  { action: 10, x: 3, y: 4, rotation: 0, option: 'none' },
  { action: 11, x: 3, y: 4, rotation: 0, option: 'N' },
  { action: 12, x: 3, y: 4, rotation: 2, option: 'none' },
  { action: 13, x: 5, y: 4, rotation: 1, option: 'none' },
  { action: 14, x: 5, y: 4, rotation: 1, option: 'C' },
];

describe('action lookup', () => {
  it('finds the exact move', () => {
    expect(findAction(ACTIONS, 3, 4, 0, 'N')?.action).toBe(11);
    expect(findAction(ACTIONS, 5, 4, 1, 'C')?.action).toBe(14);
  });

  it('returns null for illegal combinations', () => {
    expect(findAction(ACTIONS, 3, 4, 1, 'none')).toBeNull();
    expect(findAction(ACTIONS, 0, 0, 0, 'none')).toBeNull();
    expect(findAction(ACTIONS, 3, 4, 0, 'C')).toBeNull();
  });

  it('lists rotations per cell in order', () => {
    expect(legalRotations(ACTIONS, 3, 4)).toEqual([0, 2]);
    expect(legalRotations(ACTIONS, 5, 4)).toEqual([1]);
    expect(legalRotations(ACTIONS, 8, 8)).toEqual([]);
  });

  it('cycles to the next rotation', () => {
    expect(nextRotation(ACTIONS, 3, 4, 0)).toBe(2);
    expect(nextRotation(ACTIONS, 3, 4, 2)).toBe(0);
    expect(nextRotation(ACTIONS, 5, 4, 1)).toBe(1);
    expect(nextRotation(ACTIONS, 8, 8, 0)).toBeNull();
  });

  it('lists meeple options for a fixed placement', () => {
    expect(meepleOptionsAt(ACTIONS, 3, 4, 0)).toEqual(['none', 'N']);
    expect(meepleOptionsAt(ACTIONS, 3, 4, 2)).toEqual(['none']);
    expect(meepleOptionsAt(ACTIONS, 9, 9, 0)).toEqual([]);
  });

  it('deduplicates legal cells', () => {
    expect(legalCells(ACTIONS)).toEqual([
      { x: 3, y: 4 },
      { x: 5, y: 4 },
    ]);
  });
});

describe('overlayBadges', () => {
  const preds = [
    { x: 4, y: 3, rotation: 1, prob: 0.5 },
    { x: 5, y: 4, rotation: 0, prob: 0.3 },
  ];

  it('ranks predictions in payload order', () => {
    expect(overlayBadges(preds, true)).toEqual([
      { x: 4, y: 3, rotation: 1, prob: 0.5, rank: 1 },
      { x: 5, y: 4, rotation: 0, prob: 0.3, rank: 2 },
    ]);
  });

  it('is empty when guidance is off', () => {
    expect(overlayBadges(preds, false)).toEqual([]);
  });
});
