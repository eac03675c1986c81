import { describe, expect, it } from "vitest";

import type { ForecastBody, ForecastDocument, SessionDocument } from "../src/api.js";
import { signedDelta, verbatim } from "../src/format.js";
import { sparklineCoords } from "../src/sparkline.js";
import { ConsoleStore, deltaSeries, metricSeries } from "../src/state.js";

function sessionDoc(revision: number): SessionDocument {
  return {
    session_id: "s1",
    revision,
    cur_parties: ["A", "B", "NV"],
    counted_parties: ["A", "B"],
    n_stations: 2,
    declared_count: 0,
    grouping: [0, 0],
    forecast_digest: null,
    stations: [
      { id: "st0", name: "Station 0", electorate_cur: 100, declared: false },
      { id: "st1", name: "Station 1", electorate_cur: 100, declared: false },
    ],
  };
}

function forecastDoc(totals: number[]): ForecastDocument {
  return {
    cur_parties: ["A", "B", "NV"],
    party_totals: totals,
    pct_elec: [40.0, 35.0, 25.0],
    pct_vald: [53.3, 46.7],
    declared_count: 1,
    undeclared_count: 1,
    per_station: {},
  };
}

function forecastBody(revision: number, totals: number[]): ForecastBody {
  return { revision, metric: "abs", forecast: forecastDoc(totals) };
}

describe("rendered revision never decreases", () => {
  it("drops stale session documents", () => {
    const store = new ConsoleStore();
    expect(store.applySession(sessionDoc(5))).toBe(true);
    expect(store.applySession(sessionDoc(3))).toBe(false);
    expect(store.revision).toBe(5);
  });

  it("drops stale forecast snapshots", () => {
    const store = new ConsoleStore();
    store.applyForecast(forecastBody(4, [80, 70, 50]));
    expect(store.applyForecast(forecastBody(2, [1, 2, 3]))).toBe(false);
    expect(store.current?.forecast.party_totals).toEqual([80, 70, 50]);
  });

  it("re-reading the same revision replaces in place without shifting", () => {
    const store = new ConsoleStore();
    store.applyForecast(forecastBody(4, [80, 70, 50]));
    store.applyForecast(forecastBody(4, [80, 70, 50]));
    expect(store.previous).toBeNull();
  });

  it("an advancing revision keeps the old snapshot for deltas", () => {
    const store = new ConsoleStore();
    store.applyForecast(forecastBody(1, [80, 70, 50]));
    store.applyForecast(forecastBody(2, [90, 60, 50]));
    expect(store.previous?.revision).toBe(1);
    expect(store.current?.revision).toBe(2);
  });
});

describe("metric views", () => {
  const doc = forecastDoc([80.5, 70.25, 49.25]);

  it("abs and elec cover every party including nonvoters", () => {
    expect(metricSeries(doc, "abs").map((b) => b.party)).toEqual(["A", "B", "NV"]);
    expect(metricSeries(doc, "elec").map((b) => b.value)).toEqual([40.0, 35.0, 25.0]);
  });

  it("vald hides the nonvoter entry", () => {
    const bars = metricSeries(doc, "vald");
    expect(bars.map((b) => b.party)).toEqual(["A", "B"]);
    expect(bars.map((b) => b.value)).toEqual([53.3, 46.7]);
  });

  it("deltas are signed differences against the previous snapshot", () => {
    const store = new ConsoleStore();
    store.applyForecast(forecastBody(1, [80, 70, 50]));
    store.applyForecast(forecastBody(2, [90, 64, 46]));
    const deltas = deltaSeries(store.current!, store.previous, "abs");
    expect(deltas).toEqual([10, -6, -4]);
  });

  it("deltas are null without a previous snapshot", () => {
    const store = new ConsoleStore();
    store.applyForecast(forecastBody(1, [80, 70, 50]));
    expect(deltaSeries(store.current!, store.previous, "abs")).toEqual([
      null,
      null,
      null,
    ]);
  });
});

describe("formatting", () => {
  it("server numbers pass through verbatim", () => {
    expect(verbatim(4528.333333333334)).toBe("4528.333333333334");
    expect(verbatim(100)).toBe("100");
  });

  it("delta badges carry an explicit sign", () => {
    expect(signedDelta(1.234, 2)).toBe("+1.23");
    expect(signedDelta(-0.5, 2)).toBe("-0.50");
    expect(signedDelta(0, 2)).toBe("+0.00");
  });
});

describe("sparkline geometry", () => {
  it("a non-increasing fitness series maps to non-decreasing y", () => {
    const series = [10, 8, 8, 5, 1].map((best, generation) => ({ generation, best }));
    const ys = sparklineCoords(series, 200, 50).map(([, y]) => y);
    for (let i = 1; i < ys.length; i++) {
      expect(ys[i]!).toBeGreaterThanOrEqual(ys[i - 1]!);
    }
  });

  it("a flat series stays inside the box", () => {
    const series = [{ generation: 0, best: 3 }, { generation: 1, best: 3 }];
    for (const [x, y] of sparklineCoords(series, 100, 40)) {
      expect(x).toBeGreaterThanOrEqual(0);
      expect(x).toBeLessThanOrEqual(100);
      expect(y).toBeGreaterThanOrEqual(0);
      expect(y).toBeLessThanOrEqual(40);
    }
  });
});

describe("declaration feed", () => {
  it("optimistic rows reconcile by key", () => {
    const store = new ConsoleStore();
    const key = store.addPendingRow("st0", "Station 0", [40, 30]);
    expect(store.feed[0]?.status).toBe("pending");
    store.resolveRow(key, "accepted", "rev 1");
    expect(store.feed[0]?.status).toBe("accepted");
    expect(store.feed[0]?.note).toBe("rev 1");
  });

  it("newest submission renders first", () => {
    const store = new ConsoleStore();
    store.addPendingRow("st0", "Station 0", [1, 2]);
    store.addPendingRow("st1", "Station 1", [3, 4]);
    expect(store.feed.map((r) => r.stationId)).toEqual(["st1", "st0"]);
  });
});
