/**
 * Typed client for the game service.
 *
 * The client carries no rules knowledge: legality, scores and
 * predictions all come from server responses. Rejected actions raise
 * ApiError with the server's legal-action mask attached so callers can
 * resynchronize.
 */

export interface PlacementView {
  x: number;
  y: number;
  tile: string;
  rotation: number;
  meeple_player: number | null;
  meeple_slot: string | null;
}

export interface LegalPosition {
  x: number;
  y: number;
  rotations: number[];
}

export interface StateView {
  turn_index: number;
  current_player: number;
  current_seat: string;
  finished: boolean;
  drawn_tile: string | null;
  deck_remaining: number;
  discarded: string[];
  scores: number[];
  meeples: number[];
  meeples_on_board: number;
  placements: PlacementView[];
  legal_count: number;
  legal_positions: LegalPosition[];
}

export interface SessionCreated {
  session_id: string;
  seed: number;
  board_size: number;
  seats: string[];
  state: StateView;
}

export interface ActionView {
  action: number;
  x: number;
  y: number;
  rotation: number;
  option: string;
}

export interface AppliedAction {
  player: number;
  action: number;
}

export interface Prediction {
  x: number;
  y: number;
  rotation: number;
  prob: number;
}

export interface CatalogTile {
  grid: number[][];
  shield: boolean;
  count: number;
}

export interface CatalogView {
  start_tile: string;
  tiles: Record<string, CatalogTile>;
}

export interface GameEvent {
  seq: number;
  turn: number;
  kind: string;
  payload: Record<string, unknown>;
}

export interface FixationView {
  x: number;
  y: number;
  onset_ms: number;
  duration_ms: number;
  n_samples: number;
}

export interface GazeResult {
  fixations: FixationView[];
  links: number[][];
  fused: string;
}

export interface HeatmapResult {
  board_size: number;
  grid: number[][];
  off_board_ms: number;
}

export interface CreateSessionOptions {
  seed?: number;
  board_size?: number;
  seats?: string[];
  agent?: string;
  policy_id?: string;
  situation_id?: string;
}

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
    readonly mask: number[] | null,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export function parseNdjson(text: string): GameEvent[] {
  return text
    .split('\n')
    .filter((line) => line.trim().length > 0)
    .map((line) => JSON.parse(line) as GameEvent);
}

export class GameClient {
  constructor(
    private readonly baseUrl: string = '',
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path, init);
    if (!resp.ok) {
      let message = `HTTP ${resp.status}`;
      let mask: number[] | null = null;
      try {
        const body = await resp.json();
        const detail = body?.detail;
        if (typeof detail?.error === 'string') message = detail.error;
        if (Array.isArray(detail?.mask)) mask = detail.mask;
      } catch {
        // non-JSON error body; keep the status message
      }
      throw new ApiError(message, resp.status, mask);
    }
    return (await resp.json()) as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(payload),
    });
  }

  catalog(): Promise<CatalogView> {
    return this.request('/catalog');
  }

  createSession(options: CreateSessionOptions = {}): Promise<SessionCreated> {
    return this.post('/sessions', options);
  }

  state(sessionId: string): Promise<StateView> {
    return this.request(`/sessions/${sessionId}/state`);
  }

  actions(sessionId: string): Promise<{ count: number; actions: ActionView[] }> {
    return this.request(`/sessions/${sessionId}/actions`);
  }

  act(
    sessionId: string,
    player: number,
    action: number,
  ): Promise<{ applied: AppliedAction[]; state: StateView }> {
    return this.post(`/sessions/${sessionId}/act`, { player, action });
  }

  predictions(
    sessionId: string,
    k = 5,
  ): Promise<{ tile: string; predictions: Prediction[] }> {
    return this.request(`/sessions/${sessionId}/predictions?k=${k}`);
  }

  gaze(sessionId: string, trace: string, radius = 0.5): Promise<GazeResult> {
    return this.post(`/sessions/${sessionId}/gaze`, { trace, radius });
  }

  heatmap(
    sessionId: string,
    trace: string,
    halfLifeMs?: number,
  ): Promise<HeatmapResult> {
    return this.post(`/sessions/${sessionId}/heatmap`, {
      trace,
      half_life_ms: halfLifeMs ?? null,
    });
  }

  async events(sessionId: string, since = 0): Promise<GameEvent[]> {
    const resp = await this.fetchFn(
      `${this.baseUrl}/sessions/${sessionId}/events?since=${since}`,
    );
    if (!resp.ok) {
      throw new ApiError(`HTTP ${resp.status}`, resp.status, null);
    }
    return parseNdjson(await resp.text());
  }
}
