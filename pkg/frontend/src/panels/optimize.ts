/** Optimization job panel: config form, lifecycle controls and a
 * best-fitness sparkline fed by progress polling. Apply is enabled
 * only once the job reports done; failures render the server message.
 */

import type { ApplyResult, JobDocument } from "../api.js";
import { verbatim } from "../format.js";
import { sparklineSvg } from "../sparkline.js";
import type { ConsoleStore, SparkPoint } from "../state.js";

export const CONFIG_DEFAULTS: Record<string, number> = {
  population_size: 100,
  generations: 500,
  elite_fraction: 0.1,
  eligible_fraction: 0.7,
  mutation_prob: 0.003,
  reseed_fraction: 0.1,
  n_groups: 10,
};

const FIELD_LABELS: Record<string, string> = {
  population_size: "Population",
  generations: "Generations",
  elite_fraction: "Elite fraction",
  eligible_fraction: "Eligible fraction",
  mutation_prob: "Mutation probability",
  reseed_fraction: "Re-seeding fraction",
  n_groups: "Groups",
};

export interface OptimizeDeps {
  store: ConsoleStore;
  start: (config: Record<string, number>) => Promise<JobDocument>;
  poll: (jobId: string) => Promise<JobDocument>;
  apply: (jobId: string) => Promise<ApplyResult>;
  onApplied: () => void;
  pollIntervalMs?: number;
}

export function renderOptimizePanel(
  root: HTMLElement,
  deps: OptimizeDeps,
): { dispose: () => void } {
  const { store } = deps;
  root.classList.add("panel", "optimize-panel");

  const form = document.createElement("form");
  form.dataset.role = "optimize-form";
  const head = document.createElement("div");
  head.className = "panel-head";
  head.innerHTML = "<h2>Re-optimization</h2>";
  root.appendChild(head);

  const grid = document.createElement("div");
  grid.className = "config-grid";
  const fields = new Map<string, HTMLInputElement>();
  for (const [field, value] of Object.entries(CONFIG_DEFAULTS)) {
    const label = document.createElement("label");
    label.textContent = FIELD_LABELS[field] ?? field;
    const input = document.createElement("input");
    input.type = "text";
    input.inputMode = "decimal";
    input.dataset.field = field;
    input.value = String(value);
    label.appendChild(input);
    grid.appendChild(label);
    fields.set(field, input);
  }
  form.appendChild(grid);

  const startButton = document.createElement("button");
  startButton.type = "submit";
  startButton.dataset.role = "optimize-start";
  startButton.textContent = "Start job";
  form.appendChild(startButton);

  const formError = document.createElement("div");
  formError.className = "form-error";
  formError.dataset.role = "optimize-error";
  formError.hidden = true;
  form.appendChild(formError);
  root.appendChild(form);

  const status = document.createElement("div");
  status.className = "job-status";
  root.appendChild(status);

  let timer: ReturnType<typeof setTimeout> | null = null;
  let disposed = false;

  const stopPolling = () => {
    if (timer !== null) {
      clearTimeout(timer);
      timer = null;
    }
  };

  const recordProgress = (doc: JobDocument) => {
    const job = store.job;
    if (!job || job.jobId !== doc.job_id) return;
    const series: SparkPoint[] = job.series.slice();
    const last = series[series.length - 1];
    if (doc.best_fitness !== null && (!last || doc.generation > last.generation)) {
      series.push({ generation: doc.generation, best: doc.best_fitness });
    }
    store.updateJob({
      status: doc.status,
      generation: doc.generation,
      best: doc.best_fitness,
      series,
      error: doc.error,
    });
  };

  const pollLoop = (jobId: string) => {
    if (disposed) return;
    timer = setTimeout(() => {
      deps
        .poll(jobId)
        .then((doc) => {
          recordProgress(doc);
          if (doc.status === "queued" || doc.status === "running") {
            pollLoop(jobId);
          }
        })
        .catch(() => pollLoop(jobId));
    }, deps.pollIntervalMs ?? 250);
  };

  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const config: Record<string, number> = {};
    for (const [field, input] of fields) {
      const value = Number(input.value.trim());
      if (!Number.isFinite(value)) {
        formError.hidden = false;
        formError.textContent = `${field} is not a number`;
        return;
      }
      config[field] = value;
    }
    formError.hidden = true;
    stopPolling();
    deps
      .start(config)
      .then((doc) => {
        store.setJob({
          jobId: doc.job_id,
          status: doc.status,
          generation: doc.generation,
          best: doc.best_fitness,
          series: [],
          error: doc.error,
          applied: false,
        });
        recordProgress(doc);
        pollLoop(doc.job_id);
      })
      .catch((err: unknown) => {
        formError.hidden = false;
        formError.textContent = err instanceof Error ? err.message : String(err);
      });
  });

  const renderStatus = () => {
    status.textContent = "";
    const job = store.job;
    if (!job) {
      const idle = document.createElement("p");
      idle.className = "placeholder";
      idle.textContent = "No job started.";
      status.appendChild(idle);
      return;
    }

    const line = document.createElement("p");
    line.dataset.role = "job-status";
    line.dataset.status = job.status;
    line.textContent = `status ${job.status} · generation ${verbatim(job.generation)}`;
    status.appendChild(line);

    if (job.best !== null) {
      const best = document.createElement("p");
      best.dataset.role = "job-best";
      best.textContent = `best fitness ${verbatim(job.best)}`;
      status.appendChild(best);
    }

    const spark = document.createElement("div");
    spark.dataset.role = "sparkline";
    spark.innerHTML = sparklineSvg(job.series);
    status.appendChild(spark);

    if (job.status === "failed" && job.error) {
      const error = document.createElement("p");
      error.className = "form-error";
      error.dataset.role = "job-error";
      error.textContent = job.error;
      status.appendChild(error);
    }

    const apply = document.createElement("button");
    apply.type = "button";
    apply.dataset.role = "apply";
    apply.textContent = job.applied ? "Applied" : "Apply grouping";
    apply.disabled = job.status !== "done" || job.applied;
    apply.addEventListener("click", () => {
      deps
        .apply(job.jobId)
        .then(() => {
          store.updateJob({ applied: true });
          deps.onApplied();
        })
        .catch((err: unknown) => {
          store.updateJob({
            error: err instanceof Error ? err.message : String(err),
          });
        });
    });
    status.appendChild(apply);
  };

  renderStatus();
  const unsubscribe = store.subscribe(renderStatus);
  return {
    dispose: () => {
      disposed = true;
      stopPolling();
      unsubscribe();
    },
  };
}
