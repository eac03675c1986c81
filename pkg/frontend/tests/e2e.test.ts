// @vitest-environment jsdom
/** End-to-end: the console driving a real service process.
 *
 * A synthetic dataset is generated and served by the actual backend;
 * the test types a declaration into the form, lets a re-optimization
 * job run to completion, applies it, and checks every displayed number
 * against a direct read of the same endpoints (string comparison, no
 * reformatting allowed).
 */

import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, type ForecastBody } from "../src/api.js";
import { Controller } from "../src/controller.js";

interface StationRecord {
  id: string;
  name: string;
  electorate_cur: number;
  cur_votes: number[];
}

interface DatasetFile {
  cur_parties: string[];
  stations: StationRecord[];
}

let workDir: string;
let server: ChildProcess | null = null;
let base: string;
let dataset: DatasetFile;

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

async function until(cond: () => boolean, timeoutMs: number, what: string): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (!cond()) {
    if (Date.now() > deadline) throw new Error(`timed out waiting for ${what}`);
    await sleep(20);
  }
}

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = createServer();
    probe.listen(0, "127.0.0.1", () => {
      const address = probe.address();
      if (address === null || typeof address === "string") {
        reject(new Error("no port"));
        return;
      }
      const port = address.port;
      probe.close(() => resolve(port));
    });
  });
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "console-e2e-"));
  execFileSync("python3", [
    "-m", "votecast", "synth",
    "--groups", "3", "--stations-per-group", "4",
    "--ref-parties", "3", "--cur-parties", "3",
    "--noise-sd", "2", "--seed", "7",
    "--output-dir", join(workDir, "data"),
  ]);
  dataset = JSON.parse(
    readFileSync(join(workDir, "data", "dataset.json"), "utf8"),
  ) as DatasetFile;

  const port = await freePort();
  base = `http://127.0.0.1:${port}`;
  server = spawn(
    "python3",
    ["-m", "votecast", "serve", "--port", String(port), "--data-dir", join(workDir, "events")],
    { stdio: ["ignore", "pipe", "pipe"] },
  );

  const deadline = Date.now() + 30_000;
  for (;;) {
    try {
      const resp = await fetch(`${base}/api/jobs/warmup-probe`);
      if (resp.status === 404) break;
    } catch {
      // not listening yet
    }
    if (Date.now() > deadline) throw new Error("service did not come up");
    await sleep(100);
  }
});

afterAll(async () => {
  if (server) {
    server.kill("SIGTERM");
    await new Promise((resolve) => server!.once("exit", resolve));
  }
  rmSync(workDir, { recursive: true, force: true });
});

describe("operator console against the live service", () => {
  it("declares, re-optimizes and applies with every number taken from the server", async () => {
    const api = new ApiClient(base);
    const raw = JSON.parse(readFileSync(join(workDir, "data", "dataset.json"), "utf8"));
    const created = await api.createSession(raw);

    const root = document.createElement("div");
    document.body.replaceChildren(root);
    const controller = new Controller(api, root, {
      pollIntervalMs: 50,
      jobPollIntervalMs: 10,
      eventStreamFactory: null,
    });
    await controller.attach(created.session_id);
    const store = controller.store;

    expect(root.querySelector('[data-role="forecast-empty"]')).toBeTruthy();

    // type a declaration into the form
    const station = dataset.stations[0]!;
    const select = root.querySelector<HTMLSelectElement>('[data-role="station-select"]')!;
    select.value = station.id;
    const inputs = [...root.querySelectorAll<HTMLInputElement>(".vote-inputs input")];
    expect(inputs).toHaveLength(station.cur_votes.length);
    inputs.forEach((input, i) => {
      input.value = String(station.cur_votes[i]);
    });
    root
      .querySelector<HTMLFormElement>('[data-role="declare-form"]')!
      .dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));

    await until(
      () => store.feed[0]?.status === "accepted" && store.current !== null,
      10_000,
      "accepted declaration",
    );

    // the forecast panel must show the server's exact values
    const direct = (await (
      await fetch(`${base}/api/sessions/${created.session_id}/forecast?metric=abs`)
    ).json()) as ForecastBody;
    expect(direct.revision).toBe(1);
    await until(
      () => store.current?.revision === 1,
      5_000,
      "forecast snapshot at revision 1",
    );

    const shownAbs = [...root.querySelectorAll('[data-role="value"]')].map(
      (el) => el.textContent,
    );
    expect(shownAbs).toEqual(direct.forecast.party_totals.map((v) => String(v)));
    expect(
      root.querySelector('[data-role="forecast-revision"]')?.textContent,
    ).toBe("rev 1");

    // %Vald view: same string values as the server, summing to 100
    (root.querySelector('[data-metric="vald"]') as HTMLButtonElement).click();
    const shownVald = [...root.querySelectorAll('[data-role="value"]')].map(
      (el) => el.textContent,
    );
    expect(shownVald).toEqual(direct.forecast.pct_vald.map((v) => String(v)));
    const sum = shownVald.reduce((acc, text) => acc + Number(text), 0);
    expect(Math.abs(sum - 100)).toBeLessThan(1e-6);
    (root.querySelector('[data-metric="abs"]') as HTMLButtonElement).click();

    // a couple more declarations so the optimizer has signal
    for (const extra of dataset.stations.slice(1, 4)) {
      await api.declare(created.session_id, extra.id, extra.cur_votes);
    }
    await controller.refresh();

    // run a re-optimization job from the panel
    const setField = (field: string, value: string) => {
      root.querySelector<HTMLInputElement>(`[data-field="${field}"]`)!.value = value;
    };
    setField("population_size", "30");
    setField("generations", "200");
    setField("n_groups", "3");
    root
      .querySelector<HTMLFormElement>('[data-role="optimize-form"]')!
      .dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));

    await until(() => store.job !== null, 10_000, "job start");
    await until(() => store.job?.status === "done", 90_000, "job completion");

    // sparkline series is non-increasing (elitism as observed via polling)
    const bests = store.job!.series.map((p) => p.best);
    expect(bests.length).toBeGreaterThan(0);
    for (let i = 1; i < bests.length; i++) {
      expect(bests[i]!).toBeLessThanOrEqual(bests[i - 1]!);
    }
    expect(root.querySelector('[data-role="sparkline"] polyline')).toBeTruthy();

    const shownBest = root.querySelector('[data-role="job-best"]')?.textContent;
    const jobDirect = (await (await fetch(`${base}/api/jobs/${store.job!.jobId}`)).json()) as {
      best_fitness: number;
    };
    expect(shownBest).toBe(`best fitness ${String(jobDirect.best_fitness)}`);

    // apply: revision bumps and the bars re-render at the new revision
    const revisionBefore = store.revision;
    (root.querySelector('[data-role="apply"]') as HTMLButtonElement).click();
    await until(() => store.job?.applied === true, 10_000, "apply");
    await until(
      () => store.revision === revisionBefore + 1 && store.current?.revision === revisionBefore + 1,
      10_000,
      "post-apply refresh",
    );
    expect(
      root.querySelector('[data-role="forecast-revision"]')?.textContent,
    ).toBe(`rev ${revisionBefore + 1}`);

    const after = (await (
      await fetch(`${base}/api/sessions/${created.session_id}/forecast?metric=abs`)
    ).json()) as ForecastBody;
    const shownAfter = [...root.querySelectorAll('[data-role="value"]')].map(
      (el) => el.textContent,
    );
    expect(shownAfter).toEqual(after.forecast.party_totals.map((v) => String(v)));

    controller.dispose();
  });
});
