/** Per-party forecast bars with a metric toggle and delta badges.
 *
 * Pure render of the server's forecast document: bar values are the
 * JSON numbers stringified, never recomputed, and the header revision
 * is taken from the same snapshot as the bars.
 */

import type { Metric } from "../api.js";
import { signedDelta, verbatim } from "../format.js";
import { ConsoleStore, deltaSeries, metricSeries } from "../state.js";

const METRIC_LABELS: [Metric, string][] = [
  ["abs", "Votes"],
  ["elec", "%Elec"],
  ["vald", "%Vald"],
];

export function renderForecastPanel(root: HTMLElement, store: ConsoleStore): () => void {
  root.classList.add("panel", "forecast-panel");

  const render = () => {
    root.textContent = "";

    const head = document.createElement("div");
    head.className = "panel-head";
    const title = document.createElement("h2");
    title.textContent = "Forecast";
    head.appendChild(title);

    const revision = document.createElement("span");
    revision.dataset.role = "forecast-revision";
    revision.className = "revision-badge";
    head.appendChild(revision);

    const toggle = document.createElement("div");
    toggle.className = "metric-toggle";
    for (const [metric, label] of METRIC_LABELS) {
      const button = document.createElement("button");
      button.type = "button";
      button.dataset.metric = metric;
      button.textContent = label;
      if (metric === store.metric) button.classList.add("active");
      button.addEventListener("click", () => store.setMetric(metric));
      toggle.appendChild(button);
    }
    head.appendChild(toggle);
    root.appendChild(head);

    const snapshot = store.current;
    if (!snapshot) {
      revision.textContent = "rev –";
      const empty = document.createElement("p");
      empty.className = "placeholder";
      empty.dataset.role = "forecast-empty";
      empty.textContent = "No declarations yet.";
      root.appendChild(empty);
      return;
    }

    revision.textContent = `rev ${snapshot.revision}`;
    const bars = metricSeries(snapshot.forecast, store.metric);
    const deltas = deltaSeries(snapshot, store.previous, store.metric);
    const peak = Math.max(...bars.map((b) => b.value), 0) || 1;

    const list = document.createElement("div");
    list.className = "bar-list";
    bars.forEach((bar, i) => {
      const row = document.createElement("div");
      row.className = "bar-row";
      row.dataset.party = bar.party;

      const name = document.createElement("span");
      name.className = "party-name";
      name.textContent = bar.party;
      row.appendChild(name);

      const track = document.createElement("div");
      track.className = "bar-track";
      const fill = document.createElement("div");
      fill.className = "bar-fill";
      fill.style.width = `${Math.max(0, (bar.value / peak) * 100)}%`;
      track.appendChild(fill);
      row.appendChild(track);

      const value = document.createElement("span");
      value.className = "bar-value";
      value.dataset.role = "value";
      value.textContent = verbatim(bar.value);
      row.appendChild(value);

      const delta = deltas[i];
      if (delta !== null && delta !== undefined) {
        const badge = document.createElement("span");
        badge.dataset.role = "delta";
        badge.className = `delta-badge ${delta < 0 ? "down" : "up"}`;
        badge.textContent = signedDelta(delta, store.metric === "abs" ? 1 : 2);
        row.appendChild(badge);
      }
      list.appendChild(row);
    });
    root.appendChild(list);

    const footer = document.createElement("p");
    footer.className = "panel-foot";
    footer.textContent =
      `${verbatim(snapshot.forecast.declared_count)} declared / ` +
      `${verbatim(snapshot.forecast.undeclared_count)} outstanding`;
    root.appendChild(footer);
  };

  render();
  return store.subscribe(render);
}
