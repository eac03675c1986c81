/** Client-side console state.
 *
 * The server's revision counter is the sole ordering authority: stale
 * documents are dropped, so the rendered revision never goes backwards
 * even when responses arrive out of order.
 */

import type {
  ForecastBody,
  ForecastDocument,
  GroupProfileBody,
  JobStatus,
  Metric,
  SessionDocument,
} from "./api.js";

export type RowStatus = "pending" | "accepted" | "rejected";

export interface FeedRow {
  key: number;
  stationId: string;
  stationName: string;
  votes: number[];
  status: RowStatus;
  note: string;
}

export interface SparkPoint {
  generation: number;
  best: number;
}

export interface JobPanelState {
  jobId: string;
  status: JobStatus;
  generation: number;
  best: number | null;
  series: SparkPoint[];
  error: string | null;
  applied: boolean;
}

export interface Snapshot {
  revision: number;
  forecast: ForecastDocument;
}

export interface BarDatum {
  party: string;
  value: number;
}

export class ConsoleStore {
  session: SessionDocument | null = null;
  metric: Metric = "abs";
  current: Snapshot | null = null;
  previous: Snapshot | null = null;
  groups: GroupProfileBody | null = null;
  feed: FeedRow[] = [];
  job: JobPanelState | null = null;
  banner: string | null = null;

  private nextKey = 1;
  private listeners = new Set<() => void>();

  get revision(): number {
    return this.session ? this.session.revision : 0;
  }

  subscribe(listener: () => void): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  /** Accept a session document unless something newer is already shown. */
  applySession(doc: SessionDocument): boolean {
    if (this.session && doc.revision < this.session.revision) return false;
    this.session = doc;
    this.emit();
    return true;
  }

  /** Accept a forecast snapshot; an advancing revision shifts the old one
   * aside so delta badges can compare against it. */
  applyForecast(body: ForecastBody): boolean {
    if (this.current) {
      if (body.revision < this.current.revision) return false;
      if (body.revision > this.current.revision) this.previous = this.current;
    }
    this.current = { revision: body.revision, forecast: body.forecast };
    this.emit();
    return true;
  }

  setMetric(metric: Metric): void {
    this.metric = metric;
    this.emit();
  }

  setGroups(body: GroupProfileBody): boolean {
    if (this.groups && body.revision < this.groups.revision) return false;
    this.groups = body;
    this.emit();
    return true;
  }

  addPendingRow(stationId: string, stationName: string, votes: number[]): number {
    const key = this.nextKey++;
    this.feed.unshift({ key, stationId, stationName, votes, status: "pending", note: "" });
    this.emit();
    return key;
  }

  resolveRow(key: number, status: RowStatus, note: string): void {
    const row = this.feed.find((r) => r.key === key);
    if (!row) return;
    row.status = status;
    row.note = note;
    this.emit();
  }

  setJob(job: JobPanelState | null): void {
    this.job = job;
    this.emit();
  }

  updateJob(patch: Partial<JobPanelState>): void {
    if (!this.job) return;
    this.job = { ...this.job, ...patch };
    this.emit();
  }

  setBanner(text: string | null): void {
    this.banner = text;
    this.emit();
  }
}

/** Per-party bars for one metric. The %Vald view has no nonvoter entry
 * because the server's pct_vald array only covers counted parties. */
export function metricSeries(doc: ForecastDocument, metric: Metric): BarDatum[] {
  switch (metric) {
    case "abs":
      return doc.party_totals.map((value, i) => ({ party: doc.cur_parties[i]!, value }));
    case "elec":
      return doc.pct_elec.map((value, i) => ({ party: doc.cur_parties[i]!, value }));
    case "vald":
      return doc.pct_vald.map((value, i) => ({ party: doc.cur_parties[i]!, value }));
  }
}

/** Signed change per bar since the previous revision; null without one. */
export function deltaSeries(
  current: Snapshot,
  previous: Snapshot | null,
  metric: Metric,
): (number | null)[] {
  const bars = metricSeries(current.forecast, metric);
  if (!previous) return bars.map(() => null);
  const before = metricSeries(previous.forecast, metric);
  return bars.map((bar, i) => {
    const old = before[i];
    return old === undefined ? null : bar.value - old.value;
  });
}
