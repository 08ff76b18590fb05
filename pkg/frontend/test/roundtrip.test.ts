// Secondary acceptance: labeling through the console leaves the server
// curve identical to a raw-API transcript of the same choices, and the
// chart's threshold lines equal the session's configured stop rule.

import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { SessionConsole } from "../src/controller.js";
import { curveGeometry, inverseYScale, DEFAULT_LAYOUT } from "../src/curve.js";
import type { LabelChoice, StopRule } from "../src/types.js";
import { FakeService, makeFakeFetch } from "./mock_service.js";

const STOP_RULE: StopRule = {
  precision_min: 0.97,
  recall_min: 0.93,
  label_budget: 40,
  max_rounds: 1000,
};

const OPTIONS = {
  poolSize: 64,
  seedCount: 4,
  batchSize: 2,
  stopRule: STOP_RULE,
};

// The expert's policy, a pure function of the instance id, so the console
// run and the raw-API run make the same choices.
const choiceFor = (id: number): LabelChoice => (id % 3 === 0 ? "attack" : "normal");
const labelFor = (id: number): 0 | 1 => (choiceFor(id) === "attack" ? 1 : 0);

describe("console/raw-API round trip", () => {
  it("labeling 20 instances via the console matches the raw transcript", async () => {
    // through the console
    const consoleServer = new FakeService(OPTIONS);
    const api = new ApiClient("", makeFakeFetch(consoleServer));
    const dashboard = new SessionConsole(api, "s1");
    await dashboard.refresh();
    let labeled = 0;
    while (labeled < 20 && !dashboard.stopped) {
      const card = dashboard.snapshot().pending[0];
      expect(card).toBeDefined();
      await dashboard.label(card.id, choiceFor(card.id));
      labeled += 1;
    }
    expect(labeled).toBe(20);

    // the same choices through the raw API
    const rawServer = new FakeService(OPTIONS);
    const raw = new ApiClient("", makeFakeFetch(rawServer));
    for (let i = 0; i < 20; i += 1) {
      const query = await raw.getQuery("s1");
      const id = query.ids[0];
      await raw.postLabel("s1", id, labelFor(id));
    }

    expect(consoleServer.transcript).toEqual(rawServer.transcript);
    expect(consoleServer.curve).toEqual(rawServer.curve);
    expect(await api.getCurve("s1")).toEqual(await raw.getCurve("s1"));
  });

  it("threshold lines equal the session's configured stop rule", async () => {
    const server = new FakeService(OPTIONS);
    const api = new ApiClient("", makeFakeFetch(server));
    const dashboard = new SessionConsole(api, "s1");
    await dashboard.refresh();
    for (const id of [0, 1, 2, 3]) {
      await dashboard.label(id, choiceFor(id));
    }
    const state = dashboard.snapshot();
    expect(state.curve.length).toBeGreaterThan(0);

    const geometry = curveGeometry(state.curve, state.metrics!.stop_rule);
    expect(geometry.thresholds).toHaveLength(2);
    const byMetric = Object.fromEntries(geometry.thresholds.map((t) => [t.metric, t]));
    expect(byMetric.precision.value).toBe(STOP_RULE.precision_min);
    expect(byMetric.recall.value).toBe(STOP_RULE.recall_min);
    // the drawn y positions decode back to exactly the configured minima
    expect(inverseYScale(byMetric.precision.y, DEFAULT_LAYOUT)).toBeCloseTo(
      STOP_RULE.precision_min,
      12,
    );
    expect(inverseYScale(byMetric.recall.y, DEFAULT_LAYOUT)).toBeCloseTo(
      STOP_RULE.recall_min,
      12,
    );
  });

  it("console state numbers all come from API payloads", async () => {
    const server = new FakeService(OPTIONS);
    const api = new ApiClient("", makeFakeFetch(server));
    const dashboard = new SessionConsole(api, "s1");
    await dashboard.refresh();
    const state = dashboard.snapshot();
    expect(state.metrics).toEqual(server.metrics());
    expect(state.curve).toEqual(server.curve);
    expect(state.pending.map((c) => c.id)).toEqual(server.pending);
  });
});
