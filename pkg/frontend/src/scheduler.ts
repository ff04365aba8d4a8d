/** Debounced, sequence-numbered request coordination.
 *
 * A burst of interactions collapses into one request after the debounce
 * window. Every request carries a sequence number; a response is applied
 * only if no newer response has been applied, so the display is always
 * monotone in request order and stale responses are dropped.
 */

export const DEBOUNCE_MS = 150;

export interface TimerHandle {
  cancel(): void;
}

export type TimerFactory = (fn: () => void, ms: number) => TimerHandle;

const defaultTimer: TimerFactory = (fn, ms) => {
  const id = setTimeout(fn, ms);
  return { cancel: () => clearTimeout(id) };
};

export class DebouncedRequester<Req, Res> {
  private pendingTimer: TimerHandle | null = null;
  private pendingReq: Req | null = null;
  private issuedSeq = 0;
  private appliedSeq = 0;
  private inFlight = new Set<number>();

  constructor(
    private readonly send: (req: Req) => Promise<Res>,
    private readonly onResult: (res: Res, req: Req) => void,
    private readonly onError: (message: string, req: Req) => void = () => {},
    private readonly debounceMs: number = DEBOUNCE_MS,
    private readonly timer: TimerFactory = defaultTimer,
  ) {}

  /** Schedule a request, replacing any not-yet-fired one. */
  request(req: Req): void {
    this.pendingReq = req;
    this.pendingTimer?.cancel();
    this.pendingTimer = this.timer(() => this.fire(), this.debounceMs);
  }

  /** Issue the pending request immediately (bypasses the debounce). */
  flush(): void {
    if (this.pendingReq !== null) {
      this.pendingTimer?.cancel();
      this.fire();
    }
  }

  get inFlightCount(): number {
    return this.inFlight.size;
  }

  private fire(): void {
    const req = this.pendingReq as Req;
    this.pendingTimer = null;
    this.pendingReq = null;
    const seq = ++this.issuedSeq;
    this.inFlight.add(seq);
    this.send(req).then(
      (res) => {
        this.inFlight.delete(seq);
        if (seq > this.appliedSeq) {
          this.appliedSeq = seq;
          this.onResult(res, req);
        }
      },
      (err: unknown) => {
        this.inFlight.delete(seq);
        if (seq > this.appliedSeq) {
          // errors surface inline but never roll the display back
          this.appliedSeq = seq;
          this.onError(err instanceof Error ? err.message : String(err), req);
        }
      },
    );
  }
}
