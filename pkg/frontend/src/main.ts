/** Browser entry point: session chooser, then the console proper. */

import { ApiClient } from "./api.js";
import { Controller } from "./controller.js";

function sessionChooser(root: HTMLElement, onAttach: (sessionId: string) => void): void {
  root.innerHTML = `
    <div class="chooser">
      <h1>Results Console</h1>
      <form data-role="attach-form">
        <label>Session id
          <input type="text" data-role="session-id" placeholder="s0123abcd" />
        </label>
        <button type="submit">Attach</button>
      </form>
      <form data-role="create-form">
        <label>Or create a session from a dataset document
          <textarea data-role="dataset-json" rows="8" placeholder='{"parties": ...}'></textarea>
        </label>
        <button type="submit">Create session</button>
      </form>
      <p class="form-error" data-role="chooser-error" hidden></p>
    </div>
  `;
  const error = root.querySelector<HTMLElement>('[data-role="chooser-error"]')!;
  const fail = (message: string) => {
    error.hidden = false;
    error.textContent = message;
  };

  root
    .querySelector<HTMLFormElement>('[data-role="attach-form"]')!
    .addEventListener("submit", (ev) => {
      ev.preventDefault();
      const id = root
        .querySelector<HTMLInputElement>('[data-role="session-id"]')!
        .value.trim();
      if (id) onAttach(id);
      else fail("enter a session id");
    });

  root
    .querySelector<HTMLFormElement>('[data-role="create-form"]')!
    .addEventListener("submit", (ev) => {
      ev.preventDefault();
      const raw = root
        .querySelector<HTMLTextAreaElement>('[data-role="dataset-json"]')!
        .value.trim();
      let doc: unknown;
      try {
        doc = JSON.parse(raw);
      } catch {
        fail("dataset is not valid JSON");
        return;
      }
      new ApiClient()
        .createSession(doc)
        .then((created) => onAttach(created.session_id))
        .catch((err: unknown) => fail(err instanceof Error ? err.message : String(err)));
    });
}

function boot(): void {
  const root = document.getElementById("app");
  if (!root) return;
  const attach = (sessionId: string) => {
    const controller = new Controller(new ApiClient(), root);
    controller.attach(sessionId).catch((err: unknown) => {
      root.innerHTML = "";
      const message = document.createElement("p");
      message.className = "form-error";
      message.textContent = err instanceof Error ? err.message : String(err);
      root.appendChild(message);
    });
    const url = new URL(window.location.href);
    url.searchParams.set("session", sessionId);
    window.history.replaceState(null, "", url.toString());
  };

  const preset = new URL(window.location.href).searchParams.get("session");
  if (preset) attach(preset);
  else sessionChooser(root, attach);
}

boot();
