import { createRequestGate } from "./gate.js";

export interface SchedulerStats {
  scheduled: number;
  issued: number;
  applied: number;
  discarded: number;
  failed: number;
}

/** Debounced, latest-wins update pipeline.
 *
 *  schedule() collapses bursts (80 ms debounce), keeps at most one
 *  request in flight, and coalesces anything scheduled during a flight
 *  into a single follow-up. Responses are applied in issue order; a
 *  response whose token is no longer the latest (superseded or
 *  invalidated) is discarded, never rendered.
 */
export class UpdateScheduler<T> {
  private readonly gate = createRequestGate();
  private readonly debounceMs: number;
  private timer: ReturnType<typeof setTimeout> | undefined;
  private inFlightFlag = false;
  private pending = false;
  private lastApplied = 0;
  readonly stats: SchedulerStats = {
    scheduled: 0,
    issued: 0,
    applied: 0,
    discarded: 0,
    failed: 0,
  };

  constructor(
    private readonly work: () => Promise<T>,
    private readonly apply: (result: T, token: number) => void,
    private readonly onError: (error: unknown) => void = () => {},
    debounceMs = 80,
  ) {
    this.debounceMs = debounceMs;
  }

  get inFlight(): boolean {
    return this.inFlightFlag;
  }

  schedule(): void {
    this.stats.scheduled += 1;
    if (this.timer !== undefined) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = undefined;
      this.pump();
    }, this.debounceMs);
  }

  /** Issue immediately, skipping the debounce window (initial load). */
  scheduleNow(): void {
    this.stats.scheduled += 1;
    if (this.timer !== undefined) {
      clearTimeout(this.timer);
      this.timer = undefined;
    }
    this.pump();
  }

  /** Drop everything queued or in flight; late responses are discarded.
   *  Call when the model context changes (subject switch, reconnect). */
  invalidate(): void {
    this.gate.reset();
    this.pending = false;
    this.inFlightFlag = false;
    if (this.timer !== undefined) {
      clearTimeout(this.timer);
      this.timer = undefined;
    }
  }

  private pump(): void {
    if (this.inFlightFlag) {
      this.pending = true;
      return;
    }
    const token = this.gate.next();
    this.inFlightFlag = true;
    this.stats.issued += 1;
    this.work().then(
      (result) => this.settle(token, result, undefined),
      (error) => this.settle(token, undefined, error),
    );
  }

  private settle(token: number, result: T | undefined, error: unknown): void {
    const latest = this.gate.isLatest(token);
    if (latest) this.inFlightFlag = false;
    if (!latest) {
      // superseded or invalidated: even an error is nobody's business now
      this.stats.discarded += 1;
    } else if (error !== undefined) {
      this.stats.failed += 1;
      this.onError(error);
    } else if (token > this.lastApplied) {
      this.lastApplied = token;
      this.stats.applied += 1;
      this.apply(result as T, token);
    } else {
      this.stats.discarded += 1;
    }
    if (this.pending && !this.inFlightFlag) {
      this.pending = false;
      this.pump();
    }
  }
}
