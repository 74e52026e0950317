/**
 * Browser entry point: wires the DOM to the game client.
 *
 * All game logic lives server-side; this module only routes clicks to
 * the act endpoint, reflects server state onto the canvas, folds the
 * event stream into the score header, and manages the guidance overlay
 * and pointer-gaze capture.
 */

import { ApiError, GameClient } from './api.js';
import type {
  ActionView,
  CatalogView,
  CreateSessionOptions,
  GameEvent,
  Prediction,
  SessionCreated,
  StateView,
} from './api.js';
import { findAction, foldScores, legalRotations, meepleOptionsAt, nextRotation, overlayBadges } from './model.js';
import {
  boardPoint,
  canvasPainter,
  cellAt,
  drawBoard,
  drawHeatmap,
  drawOverlay,
  drawTile,
  type Painter,
} from './render.js';
import { GazeSampler } from './gaze.js';

const TILE_PX = 48;
const BOARD_SIZE = 9;

interface Selection {
  x: number;
  y: number;
  rotation: number;
  option: string;
}

class App {
  // static files and the API usually run on different ports
  private client = new GameClient(new URLSearchParams(location.search).get('api') ?? '');
  private catalog: CatalogView | null = null;
  private session: SessionCreated | null = null;
  private state: StateView | null = null;
  private actions: ActionView[] = [];
  private events: GameEvent[] = [];
  private predictions: Prediction[] = [];
  private selection: Selection | null = null;
  private heatGrid: number[][] | null = null;
  private sampler = new GazeSampler(50, () => performance.now());
  private lastPointer: { x: number; y: number } | null = null;
  private pollTimer: number | null = null;

  private el<T extends HTMLElement>(id: string): T {
    const node = document.getElementById(id);
    if (!node) throw new Error(`missing element #${id}`);
    return node as T;
  }

  private painter(): Painter {
    const canvas = this.el<HTMLCanvasElement>('board');
    const ctx = canvas.getContext('2d');
    if (!ctx) throw new Error('canvas 2d context unavailable');
    return canvasPainter(ctx);
  }

  async boot(): Promise<void> {
    this.catalog = await this.client.catalog();
    this.bindControls();
    await this.newGame();
  }

  private startPolling(): void {
    if (this.pollTimer === null) {
      this.pollTimer = window.setInterval(() => void this.pollEvents(), 1000);
    }
  }

  private stopPolling(): void {
    if (this.pollTimer !== null) {
      window.clearInterval(this.pollTimer);
      this.pollTimer = null;
    }
  }

  private bindControls(): void {
    const canvas = this.el<HTMLCanvasElement>('board');
    canvas.width = BOARD_SIZE * TILE_PX;
    canvas.height = BOARD_SIZE * TILE_PX;
    canvas.addEventListener('click', (ev) => void this.onBoardClick(ev));
    canvas.addEventListener('pointermove', (ev) => this.onPointerMove(ev));
    canvas.addEventListener('pointerleave', () => this.onPointerLeave());

    this.el<HTMLButtonElement>('rotate').addEventListener('click', () => this.onRotate());
    this.el<HTMLButtonElement>('place').addEventListener('click', () => void this.onPlace());
    this.el<HTMLButtonElement>('new-game').addEventListener('click', () => void this.newGame());
    this.el<HTMLInputElement>('guidance').addEventListener('change', () => void this.refreshGuidance());
    this.el<HTMLInputElement>('gaze-capture').addEventListener('change', (ev) => {
      this.sampler.enabled = (ev.target as HTMLInputElement).checked;
      if (!this.sampler.enabled) this.sampler.clear();
    });
    this.el<HTMLButtonElement>('gaze-report').addEventListener('click', () => void this.onGazeReport());
    this.el<HTMLSelectElement>('meeple').addEventListener('change', (ev) => {
      if (this.selection) this.selection.option = (ev.target as HTMLSelectElement).value;
    });
  }

  private async newGame(): Promise<void> {
    const guidance = this.el<HTMLInputElement>('guidance').checked;
    const options: CreateSessionOptions = {
      board_size: BOARD_SIZE,
      seats: ['human', 'ai'],
      agent: 'greedy',
    };
    if (guidance) options.situation_id = 'situation';
    try {
      this.session = await this.client.createSession(options);
    } catch (err) {
      if (guidance && err instanceof ApiError && err.status === 400) {
        // no situation checkpoint on the server; fall back without one
        delete options.situation_id;
        this.session = await this.client.createSession(options);
      } else {
        throw err;
      }
    }
    this.state = this.session.state;
    this.events = [];
    this.selection = null;
    this.heatGrid = null;
    this.sampler.clear();
    this.startPolling();
    await this.refreshTurn();
  }

  private async refreshTurn(): Promise<void> {
    if (!this.session || !this.state) return;
    if (!this.state.finished && this.state.current_seat === 'human') {
      const resp = await this.client.actions(this.session.session_id);
      this.actions = resp.actions;
    } else {
      this.actions = [];
    }
    this.selection = null;
    await this.refreshGuidance();
    await this.pollEvents();
    if (this.state.finished) this.stopPolling();
    this.redraw();
  }

  private async refreshGuidance(): Promise<void> {
    this.predictions = [];
    const wanted = this.el<HTMLInputElement>('guidance').checked;
    if (wanted && this.session && this.state && !this.state.finished && this.state.drawn_tile) {
      try {
        const resp = await this.client.predictions(this.session.session_id, 3);
        this.predictions = resp.predictions;
      } catch (err) {
        if (!(err instanceof ApiError && err.status === 409)) throw err;
        // session has no situation model; leave the overlay empty
      }
    }
    this.redraw();
  }

  private async pollEvents(): Promise<void> {
    if (!this.session) return;
    const since = this.events.length > 0 ? this.events[this.events.length - 1].seq + 1 : 0;
    const fresh = await this.client.events(this.session.session_id, since);
    if (fresh.length === 0) return;
    this.events.push(...fresh);
    this.renderLog();
    this.renderScores();
  }

  private onPointerMove(ev: PointerEvent): void {
    const rect = (ev.target as HTMLCanvasElement).getBoundingClientRect();
    const pt = boardPoint(ev.clientX - rect.left, ev.clientY - rect.top, TILE_PX);
    this.lastPointer = pt;
    this.sampler.record(pt.x, pt.y, true);
  }

  private onPointerLeave(): void {
    if (this.lastPointer) {
      this.sampler.record(this.lastPointer.x, this.lastPointer.y, false);
    }
  }

  private async onBoardClick(ev: MouseEvent): Promise<void> {
    if (!this.state || this.state.finished || this.actions.length === 0) return;
    const rect = (ev.target as HTMLCanvasElement).getBoundingClientRect();
    const cell = cellAt(ev.clientX - rect.left, ev.clientY - rect.top, BOARD_SIZE, TILE_PX);
    if (!cell) return;
    const rots = legalRotations(this.actions, cell.x, cell.y);
    if (rots.length === 0) return;
    if (this.selection && this.selection.x === cell.x && this.selection.y === cell.y) {
      this.onRotate();
      return;
    }
    this.selection = { x: cell.x, y: cell.y, rotation: rots[0], option: 'none' };
    this.syncMeepleOptions();
    this.redraw();
  }

  private onRotate(): void {
    if (!this.selection) return;
    const next = nextRotation(this.actions, this.selection.x, this.selection.y, this.selection.rotation);
    if (next === null) return;
    this.selection.rotation = next;
    this.syncMeepleOptions();
    this.redraw();
  }

  private syncMeepleOptions(): void {
    const select = this.el<HTMLSelectElement>('meeple');
    select.innerHTML = '';
    if (!this.selection) return;
    const opts = meepleOptionsAt(this.actions, this.selection.x, this.selection.y, this.selection.rotation);
    for (const opt of opts) {
      const node = document.createElement('option');
      node.value = opt;
      node.textContent = opt === 'none' ? 'no meeple' : opt === 'C' ? 'cloister' : `side ${opt}`;
      select.appendChild(node);
    }
    this.selection.option = opts.includes(this.selection.option) ? this.selection.option : (opts[0] ?? 'none');
    select.value = this.selection.option;
  }

  private async onPlace(): Promise<void> {
    if (!this.session || !this.state || !this.selection) return;
    const chosen = findAction(
      this.actions,
      this.selection.x,
      this.selection.y,
      this.selection.rotation,
      this.selection.option,
    );
    if (!chosen) {
      this.setStatus('that placement is not legal');
      return;
    }
    try {
      const resp = await this.client.act(this.session.session_id, this.state.current_player, chosen.action);
      this.state = resp.state;
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // out of sync with the server; its mask is authoritative
        this.setStatus(`rejected: ${err.message}`);
        this.state = await this.client.state(this.session.session_id);
      } else {
        throw err;
      }
    }
    await this.refreshTurn();
  }

  private async onGazeReport(): Promise<void> {
    if (!this.session || this.sampler.size === 0) return;
    const trace = this.sampler.flush();
    const report = this.el<HTMLElement>('gaze-summary');
    try {
      const gaze = await this.client.gaze(this.session.session_id, trace);
      const heat = await this.client.heatmap(this.session.session_id, trace);
      this.heatGrid = heat.grid;
      report.textContent =
        `${gaze.fixations.length} fixations, ${gaze.links.length} board links, ` +
        `${heat.off_board_ms.toFixed(0)} ms off-board`;
    } catch (err) {
      report.textContent = err instanceof ApiError ? `gaze rejected: ${err.message}` : String(err);
    }
    this.redraw();
  }

  private renderScores(): void {
    if (!this.state || !this.session) return;
    const folded = foldScores(this.events, this.state.scores.length);
    const parts = this.state.scores.map((s, i) => {
      const seat = this.session!.seats[i];
      const mark = folded[i] === s ? '' : ' (!)';
      return `P${i} (${seat}): ${folded[i]}${mark}`;
    });
    this.el<HTMLElement>('scores').textContent = parts.join('  ');
  }

  private renderLog(): void {
    const log = this.el<HTMLElement>('log');
    const lines: string[] = [];
    for (const ev of this.events) {
      if (ev.kind === 'score') {
        const pts = Object.entries(ev.payload.points as Record<string, number>)
          .map(([p, v]) => `P${p}+${v}`)
          .join(' ');
        lines.push(`turn ${ev.turn}: ${ev.payload.stage} ${ev.payload.feature_class} ${pts}`);
      } else if (ev.kind === 'discard') {
        lines.push(`turn ${ev.turn}: discarded ${ev.payload.tile}`);
      }
    }
    log.textContent = lines.slice(-12).join('\n');
  }

  private setStatus(text: string): void {
    this.el<HTMLElement>('status').textContent = text;
  }

  private redraw(): void {
    if (!this.state || !this.catalog) return;
    const p = this.painter();
    drawBoard(p, this.state, this.catalog, BOARD_SIZE, TILE_PX);
    if (this.heatGrid) drawHeatmap(p, this.heatGrid, TILE_PX);
    const guidance = this.el<HTMLInputElement>('guidance').checked;
    drawOverlay(p, overlayBadges(this.predictions, guidance), TILE_PX);
    if (this.selection && this.state.drawn_tile) {
      const spec = this.catalog.tiles[this.state.drawn_tile];
      if (spec) {
        drawTile(
          p,
          this.selection.x * TILE_PX,
          this.selection.y * TILE_PX,
          TILE_PX,
          spec.grid,
          this.selection.rotation,
          spec.shield,
        );
        p.strokeRect(this.selection.x * TILE_PX, this.selection.y * TILE_PX, TILE_PX, TILE_PX, '#f0f0f0', 2);
      }
    }
    this.renderSidebar();
    this.renderScores();
  }

  private renderSidebar(): void {
    if (!this.state) return;
    const canvas = this.el<HTMLCanvasElement>('tile-preview');
    canvas.width = TILE_PX;
    canvas.height = TILE_PX;
    const ctx = canvas.getContext('2d');
    if (ctx && this.catalog && this.state.drawn_tile) {
      const spec = this.catalog.tiles[this.state.drawn_tile];
      if (spec) {
        drawTile(canvasPainter(ctx), 0, 0, TILE_PX, spec.grid, this.selection?.rotation ?? 0, spec.shield);
      }
    } else if (ctx) {
      ctx.clearRect(0, 0, TILE_PX, TILE_PX);
    }
    if (this.state.finished) {
      const scores = this.state.scores;
      const best = Math.max(...scores);
      const winners = scores.map((s, i) => (s === best ? `P${i}` : null)).filter(Boolean);
      this.setStatus(`game over, ${winners.join(' and ')} wins with ${best}`);
    } else {
      const seat = this.state.current_seat;
      const tile = this.state.drawn_tile ?? 'none';
      this.setStatus(
        `turn ${this.state.turn_index}, P${this.state.current_player} (${seat}) to move, ` +
          `tile ${tile}, ${this.state.deck_remaining} left`,
      );
    }
  }
}

new App().boot().catch((err) => {
  const status = document.getElementById('status');
  if (status) status.textContent = `failed to start: ${err}`;
});
