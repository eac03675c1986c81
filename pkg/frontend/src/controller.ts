/** Wires the API client, the store, the revision watcher and the four
 * panels together for one session. */

import { ApiClient, ApiError, type Metric } from "./api.js";
import { renderDeclarationPanel } from "./panels/declarations.js";
import { renderForecastPanel } from "./panels/forecast.js";
import { renderGroupsPanel } from "./panels/groups.js";
import { renderOptimizePanel } from "./panels/optimize.js";
import { ConsoleStore } from "./state.js";
import { RevisionWatcher, type EventStreamFactory } from "./watch.js";

export interface ControllerOptions {
  pollIntervalMs?: number;
  jobPollIntervalMs?: number;
  eventStreamFactory?: EventStreamFactory | null;
}

export class Controller {
  readonly store = new ConsoleStore();
  private watcher: RevisionWatcher | null = null;
  private cleanups: (() => void)[] = [];
  private sessionId = "";
  private refreshing: Promise<void> | null = null;

  constructor(
    readonly api: ApiClient,
    private readonly root: HTMLElement,
    private readonly options: ControllerOptions = {},
  ) {}

  async attach(sessionId: string): Promise<void> {
    this.sessionId = sessionId;
    const doc = await this.api.getSession(sessionId);
    this.store.applySession(doc);
    await this.refresh();
    this.buildPanels();

    this.watcher = new RevisionWatcher(
      this.api.eventsUrl(sessionId),
      (revision) => {
        if (revision > this.store.revision || revision > (this.store.current?.revision ?? -1)) {
          void this.refresh();
        }
      },
      {
        pollRevision: async () => (await this.api.getSession(sessionId)).revision,
        pollIntervalMs: this.options.pollIntervalMs,
        eventStreamFactory: this.options.eventStreamFactory,
      },
    );
    this.watcher.start();
  }

  /** Refetch full snapshots; the store drops any that arrive stale. */
  refresh(): Promise<void> {
    if (this.refreshing) return this.refreshing;
    this.refreshing = this.doRefresh().finally(() => {
      this.refreshing = null;
    });
    return this.refreshing;
  }

  private async doRefresh(): Promise<void> {
    const id = this.sessionId;
    const [session, groups, forecast] = await Promise.all([
      this.api.getSession(id),
      this.api.getGroups(id),
      this.api.getForecast(id, this.metric).catch((err: unknown) => {
        if (err instanceof ApiError && err.body.code === "no_declarations") return null;
        throw err;
      }),
    ]);
    if (forecast) this.store.applyForecast(forecast);
    this.store.applySession(session);
    this.store.setGroups(groups);
  }

  private get metric(): Metric {
    return this.store.metric;
  }

  private buildPanels(): void {
    this.root.textContent = "";
    const wrap = document.createElement("div");
    wrap.className = "console-grid";
    const forecastEl = document.createElement("section");
    const declareEl = document.createElement("section");
    const optimizeEl = document.createElement("section");
    const groupsEl = document.createElement("section");
    wrap.append(forecastEl, declareEl, optimizeEl, groupsEl);
    this.root.appendChild(wrap);

    this.cleanups.push(renderForecastPanel(forecastEl, this.store));
    this.cleanups.push(
      renderDeclarationPanel(declareEl, {
        store: this.store,
        submit: (stationId, votes) => this.api.declare(this.sessionId, stationId, votes),
        onAccepted: () => void this.refresh(),
      }),
    );
    const optimize = renderOptimizePanel(optimizeEl, {
      store: this.store,
      start: (config) => this.api.startOptimize(this.sessionId, config),
      poll: (jobId) => this.api.getJob(jobId),
      apply: (jobId) => this.api.applyJob(this.sessionId, jobId),
      onApplied: () => void this.refresh(),
      pollIntervalMs: this.options.jobPollIntervalMs,
    });
    this.cleanups.push(optimize.dispose);
    this.cleanups.push(renderGroupsPanel(groupsEl, this.store));
  }

  dispose(): void {
    this.watcher?.stop();
    for (const cleanup of this.cleanups) cleanup();
    this.cleanups = [];
  }
}
