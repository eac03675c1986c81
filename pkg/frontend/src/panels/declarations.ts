/** Declaration entry form plus the submission feed.
 *
 * Submissions appear optimistically as pending rows and are reconciled
 * with the server's answer: accepted rows record the new revision,
 * rejections (conflict, bad votes) surface the server message on the
 * row, and a network failure raises a retry banner so nothing is lost
 * silently. Vote bounds are checked against the station electorate
 * before anything is sent.
 */

import { ApiError, type DeclareResult, type StationInfo } from "../api.js";
import { verbatim } from "../format.js";
import type { ConsoleStore } from "../state.js";

export interface DeclarationDeps {
  store: ConsoleStore;
  submit: (stationId: string, votes: number[]) => Promise<DeclareResult>;
  onAccepted: () => void;
}

interface FormRefs {
  search: HTMLInputElement;
  select: HTMLSelectElement;
  inputs: HTMLInputElement[];
  error: HTMLElement;
  banner: HTMLElement;
  feed: HTMLElement;
}

function stationLabel(st: StationInfo): string {
  return `${st.name} (${st.id}, electorate ${st.electorate_cur})`;
}

/** Nonnegative integers summing to at most the electorate, or an error. */
export function validateVotes(
  raw: string[],
  electorate: number,
): { votes: number[] } | { error: string } {
  const votes: number[] = [];
  for (const text of raw) {
    const trimmed = text.trim();
    if (!/^\d+$/.test(trimmed)) {
      return { error: "every party needs a whole nonnegative vote count" };
    }
    votes.push(Number(trimmed));
  }
  const total = votes.reduce((a, b) => a + b, 0);
  if (total > electorate) {
    return { error: `votes sum to ${total}, above the electorate of ${electorate}` };
  }
  return { votes };
}

export function renderDeclarationPanel(root: HTMLElement, deps: DeclarationDeps): () => void {
  const { store } = deps;
  root.classList.add("panel", "declaration-panel");
  root.innerHTML = `
    <div class="panel-head"><h2>Declarations</h2></div>
    <div class="banner" data-role="retry-banner" hidden></div>
    <form data-role="declare-form">
      <input type="search" data-role="station-search" placeholder="Filter stations" />
      <select data-role="station-select" size="4"></select>
      <div class="vote-inputs" data-role="vote-inputs"></div>
      <div class="form-error" data-role="form-error" hidden></div>
      <button type="submit" data-role="declare-submit">Declare</button>
    </form>
    <ul class="feed" data-role="feed"></ul>
  `;

  const refs: FormRefs = {
    search: root.querySelector('[data-role="station-search"]')!,
    select: root.querySelector('[data-role="station-select"]')!,
    inputs: [],
    error: root.querySelector('[data-role="form-error"]')!,
    banner: root.querySelector('[data-role="retry-banner"]')!,
    feed: root.querySelector('[data-role="feed"]')!,
  };
  const form = root.querySelector<HTMLFormElement>('[data-role="declare-form"]')!;
  const voteBox = root.querySelector<HTMLElement>('[data-role="vote-inputs"]')!;

  const buildVoteInputs = () => {
    voteBox.textContent = "";
    refs.inputs = [];
    const parties = store.session ? store.session.counted_parties : [];
    for (const party of parties) {
      const label = document.createElement("label");
      label.textContent = party;
      const input = document.createElement("input");
      input.type = "text";
      input.inputMode = "numeric";
      input.dataset.party = party;
      input.value = "";
      label.appendChild(input);
      voteBox.appendChild(label);
      refs.inputs.push(input);
    }
  };

  const undeclaredStations = (): StationInfo[] => {
    const session = store.session;
    if (!session) return [];
    const needle = refs.search.value.trim().toLowerCase();
    return session.stations.filter(
      (st) =>
        !st.declared &&
        (needle === "" ||
          st.id.toLowerCase().includes(needle) ||
          st.name.toLowerCase().includes(needle)),
    );
  };

  const rebuildOptions = () => {
    const selected = refs.select.value;
    refs.select.textContent = "";
    for (const st of undeclaredStations()) {
      const option = document.createElement("option");
      option.value = st.id;
      option.textContent = stationLabel(st);
      refs.select.appendChild(option);
    }
    if (selected && [...refs.select.options].some((o) => o.value === selected)) {
      refs.select.value = selected;
    }
  };

  const renderFeed = () => {
    refs.feed.textContent = "";
    for (const row of store.feed) {
      const item = document.createElement("li");
      item.className = `feed-row ${row.status}`;
      item.dataset.station = row.stationId;
      item.dataset.status = row.status;
      const votes = row.votes.map(verbatim).join(" / ");
      item.innerHTML = `<span class="feed-station"></span><span class="feed-votes"></span><span class="feed-note" data-role="row-note"></span>`;
      item.querySelector(".feed-station")!.textContent = row.stationName;
      item.querySelector(".feed-votes")!.textContent = votes;
      item.querySelector(".feed-note")!.textContent = row.note;
      refs.feed.appendChild(item);
    }
  };

  const renderBanner = () => {
    if (store.banner === null) {
      refs.banner.hidden = true;
      refs.banner.textContent = "";
      return;
    }
    refs.banner.hidden = false;
    refs.banner.textContent = "";
    const text = document.createElement("span");
    text.textContent = store.banner;
    refs.banner.appendChild(text);
    const retry = document.createElement("button");
    retry.type = "button";
    retry.dataset.role = "retry";
    retry.textContent = "Retry";
    retry.addEventListener("click", () => {
      store.setBanner(null);
      form.requestSubmit ? form.requestSubmit() : form.dispatchEvent(new Event("submit"));
    });
    refs.banner.appendChild(retry);
  };

  const showFormError = (message: string | null) => {
    if (message === null) {
      refs.error.hidden = true;
      refs.error.textContent = "";
    } else {
      refs.error.hidden = false;
      refs.error.textContent = message;
    }
  };

  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const session = store.session;
    if (!session) return;
    const stationId = refs.select.value;
    const station = session.stations.find((st) => st.id === stationId);
    if (!station) {
      showFormError("pick a station first");
      return;
    }
    const outcome = validateVotes(
      refs.inputs.map((input) => input.value),
      station.electorate_cur,
    );
    if ("error" in outcome) {
      showFormError(outcome.error);
      return;
    }
    showFormError(null);

    const key = deps.store.addPendingRow(station.id, station.name, outcome.votes);
    deps
      .submit(station.id, outcome.votes)
      .then((result) => {
        store.resolveRow(key, "accepted", `rev ${result.revision}`);
        for (const input of refs.inputs) input.value = "";
        deps.onAccepted();
      })
      .catch((err: unknown) => {
        if (err instanceof ApiError) {
          store.resolveRow(key, "rejected", err.body.message);
        } else {
          store.resolveRow(key, "pending", "waiting for retry");
          store.setBanner("Network failure: the declaration was not delivered.");
        }
      });
  });

  refs.search.addEventListener("input", rebuildOptions);

  let lastSession = store.session;
  const onChange = () => {
    if (store.session !== lastSession) {
      lastSession = store.session;
      if (refs.inputs.length !== (store.session?.counted_parties.length ?? 0)) {
        buildVoteInputs();
      }
      rebuildOptions();
    }
    renderFeed();
    renderBanner();
  };

  buildVoteInputs();
  rebuildOptions();
  renderFeed();
  renderBanner();
  return store.subscribe(onChange);
}
