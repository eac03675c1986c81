/** Group characteristics as small multiples: one chart per party with
 * a bar per group and a horizontal line at the electorate-wide mean,
 * so an operator can see at a glance how the groups differ. */

import { verbatim } from "../format.js";
import type { ConsoleStore } from "../state.js";

const WIDTH = 220;
const HEIGHT = 90;
const PAD = 6;

export function renderGroupsPanel(root: HTMLElement, store: ConsoleStore): () => void {
  root.classList.add("panel", "groups-panel");

  const render = () => {
    root.textContent = "";
    const head = document.createElement("div");
    head.className = "panel-head";
    head.innerHTML = "<h2>Groups</h2>";
    root.appendChild(head);

    const body = store.groups;
    if (!body) {
      const empty = document.createElement("p");
      empty.className = "placeholder";
      empty.textContent = "No profile loaded.";
      root.appendChild(empty);
      return;
    }

    const caption = document.createElement("p");
    caption.className = "panel-foot";
    caption.dataset.role = "groups-caption";
    const counts = Object.entries(body.profile.member_counts)
      .sort(([a], [b]) => Number(a) - Number(b))
      .map(([group, count]) => `g${group}: ${verbatim(count)}`)
      .join(" · ");
    caption.textContent = `${body.election} election · rev ${body.revision} · ${counts}`;
    root.appendChild(caption);

    const groupIds = Object.keys(body.profile.group_means).sort(
      (a, b) => Number(a) - Number(b),
    );
    const grid = document.createElement("div");
    grid.className = "multiples";

    for (const party of body.profile.parties) {
      const card = document.createElement("figure");
      card.className = "multiple";
      card.dataset.party = party;

      const label = document.createElement("figcaption");
      const global = body.profile.global_means[party] ?? 0;
      label.textContent = party;
      label.title = `global mean ${verbatim(global)}`;
      card.appendChild(label);

      const values = groupIds.map((g) => body.profile.group_means[g]?.[party] ?? 0);
      const peak = Math.max(...values, global, 1e-9);
      const innerW = WIDTH - 2 * PAD;
      const innerH = HEIGHT - 2 * PAD;
      const slot = innerW / Math.max(values.length, 1);
      const barW = Math.max(slot * 0.6, 2);

      const y = (v: number) => PAD + innerH * (1 - v / peak);
      const bars = values
        .map((v, i) => {
          const x = PAD + i * slot + (slot - barW) / 2;
          const top = y(v);
          return (
            `<rect data-group="${groupIds[i]}" x="${x.toFixed(2)}" y="${top.toFixed(2)}" ` +
            `width="${barW.toFixed(2)}" height="${(HEIGHT - PAD - top).toFixed(2)}">` +
            `<title>group ${groupIds[i]}: ${verbatim(v)}</title></rect>`
          );
        })
        .join("");
      const lineY = y(global).toFixed(2);
      card.insertAdjacentHTML(
        "beforeend",
        `<svg viewBox="0 0 ${WIDTH} ${HEIGHT}" class="multiple-chart" role="img">` +
          bars +
          `<line class="global-mean" data-role="global-mean" x1="${PAD}" y1="${lineY}" ` +
          `x2="${WIDTH - PAD}" y2="${lineY}" />` +
          `</svg>`,
      );
      grid.appendChild(card);
    }
    root.appendChild(grid);
  };

  render();
  return store.subscribe(render);
}
