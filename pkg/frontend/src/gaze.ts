/**
 * Pointer-as-gaze capture.
 *
 * Pointer positions over the board stand in for eye tracking. Samples
 * are throttled to a fixed cadence (20 Hz by default) and serialized in
 * the t_ms,x,y,valid log format the server ingests. The clock is
 * injectable so tests can drive time explicitly.
 */

export interface GazeSample {
  t: number;
  x: number;
  y: number;
  valid: boolean;
}

export class GazeSampler {
  enabled = false;

  private samples: GazeSample[] = [];
  private origin: number | null = null;
  private lastT: number | null = null;

  constructor(
    private readonly intervalMs: number = 50,
    private readonly now: () => number = () => Date.now(),
  ) {}

  get size(): number {
    return this.samples.length;
  }

  /**
   * Offer a sample at the current clock time. Returns true when kept.
   * Samples closer than the cadence to the previous one are dropped,
   * which keeps timestamps strictly increasing.
   */
  record(x: number, y: number, valid = true): boolean {
    if (!this.enabled) return false;
    const wall = this.now();
    if (this.origin === null) this.origin = wall;
    const t = wall - this.origin;
    if (this.lastT !== null && t - this.lastT < this.intervalMs) return false;
    this.samples.push({ t, x, y, valid });
    this.lastT = t;
    return true;
  }

  /** Serialize and clear the buffer; next trace starts at t=0 again. */
  flush(): string {
    const lines = ['t_ms,x,y,valid'];
    for (const s of this.samples) {
      lines.push(`${s.t.toFixed(1)},${s.x.toFixed(4)},${s.y.toFixed(4)},${s.valid ? 1 : 0}`);
    }
    this.samples = [];
    this.origin = null;
    this.lastT = null;
    return lines.join('\n') + '\n';
  }

  clear(): void {
    this.samples = [];
    this.origin = null;
    this.lastT = null;
  }
}
