/** Revision change delivery: server-sent events when the browser has
 * them, plain polling otherwise. A dropped stream degrades to polling
 * without losing revisions because consumers refetch full snapshots,
 * never increments.
 */

export interface EventStreamLike {
  onopen: (() => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
  onerror: ((ev: unknown) => void) | null;
  close(): void;
}

export type EventStreamFactory = (url: string) => EventStreamLike;

export interface WatcherOptions {
  /** Returns the server's current revision; used while polling. */
  pollRevision: () => Promise<number>;
  pollIntervalMs?: number;
  /** Override the stream constructor; null forces polling. Defaults to
   * the global EventSource when one exists. */
  eventStreamFactory?: EventStreamFactory | null;
}

function defaultFactory(): EventStreamFactory | null {
  const ctor = (globalThis as { EventSource?: new (url: string) => EventStreamLike }).EventSource;
  return ctor ? (url) => new ctor(url) : null;
}

export class RevisionWatcher {
  private stream: EventStreamLike | null = null;
  private timer: ReturnType<typeof setInterval> | null = null;
  private pollInFlight = false;
  private stopped = false;

  constructor(
    private readonly url: string,
    private readonly onRevision: (revision: number) => void,
    private readonly options: WatcherOptions,
  ) {}

  start(): void {
    const factory =
      this.options.eventStreamFactory !== undefined
        ? this.options.eventStreamFactory
        : defaultFactory();
    if (!factory) {
      this.startPolling();
      return;
    }
    try {
      this.stream = factory(this.url);
    } catch {
      this.startPolling();
      return;
    }
    this.stream.onopen = () => this.stopPolling();
    this.stream.onmessage = (ev) => {
      this.stopPolling();
      let doc: unknown;
      try {
        doc = JSON.parse(ev.data);
      } catch {
        return;
      }
      const revision = (doc as { revision?: unknown }).revision;
      if (typeof revision === "number") this.onRevision(revision);
    };
    // EventSource reconnects by itself; poll until messages resume
    this.stream.onerror = () => this.startPolling();
  }

  get polling(): boolean {
    return this.timer !== null;
  }

  private startPolling(): void {
    if (this.timer !== null || this.stopped) return;
    const interval = this.options.pollIntervalMs ?? 1000;
    this.timer = setInterval(() => {
      if (this.pollInFlight) return;
      this.pollInFlight = true;
      this.options
        .pollRevision()
        .then((revision) => {
          if (!this.stopped) this.onRevision(revision);
        })
        .catch(() => undefined)
        .finally(() => {
          this.pollInFlight = false;
        });
    }, interval);
  }

  private stopPolling(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  stop(): void {
    this.stopped = true;
    this.stopPolling();
    if (this.stream) {
      this.stream.close();
      this.stream = null;
    }
  }
}
