import { type ChildProcess, spawn } from "node:child_process";
import { fileURLToPath } from "node:url";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ConsoleApi } from "../src/api.js";
import { ConsoleModel } from "../src/model.js";
import { renderApp, renderCard } from "../src/render.js";
import { streamViolations } from "../src/stream.js";

const PORT = 8931;
const BASE = `http://127.0.0.1:${PORT}`;
const REPO_ROOT = fileURLToPath(new URL("../..", import.meta.url));

const waitFor = async (pred: () => Promise<boolean> | boolean, ms: number, label: string): Promise<void> => {
  const deadline = Date.now() + ms;
  for (;;) {
    try {
      if (await pred()) return;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) throw new Error(`timed out waiting for ${label}`);
    await new Promise((resolve) => setTimeout(resolve, 100));
  }
};

describe("console against a live service", () => {
  let child: ChildProcess | null = null;
  let stderr = "";

  beforeAll(async () => {
    child = spawn(
      "interlock",
      [
        "serve",
        "--scenario",
        "fixtures/scenarios/rsr_speed_override.json",
        "--listen",
        `127.0.0.1:${PORT}`,
        "--speed",
        "0.45",
      ],
      { cwd: REPO_ROOT, stdio: ["ignore", "ignore", "pipe"] },
    );
    child.stderr?.on("data", (chunk: Buffer) => {
      stderr += chunk.toString();
    });
    await waitFor(async () => (await fetch(`${BASE}/status`)).ok, 15000, `service (${stderr.slice(0, 400)})`);
  });

  afterAll(() => {
    child?.kill();
  });

  it("lists planned nodes, applies a constrain ceiling live, and rejects a role-blocked edit inline", async () => {
    const api = new ConsoleApi(BASE);
    const model = new ConsoleModel(api, (handlers, afterIndex) =>
      streamViolations(BASE, handlers, { afterIndex, retryMs: 200 }),
    );

    await model.refresh();
    expect(model.state.cards.map((c) => c.model.cn_id)).toEqual([
      "fpm1",
      "grcn1",
      "grcn2",
      "msrcn1",
      "rsrcn1",
    ]);
    const dashboard = renderApp(model.state);
    for (const card of model.state.cards) {
      expect(dashboard).toContain(card.model.cn_id);
      expect(dashboard).toContain(card.model.description);
    }
    expect(dashboard).toContain("last trigger");

    model.start();
    expect(model.state.role).toBe("end_user");

    // The ceiling must land before the override attack starts at t=2.0.
    const before = await api.status();
    expect(before.clock).toBeLessThan(2.0);
    const applied = await model.submitPolicy("rsrcn1", "constrain", { max_vel_limit: "0.22" });
    expect(applied).toBe(true);
    const rsr = model.card("rsrcn1")!;
    expect(rsr.model.policy_params).toEqual({ policy: "constrain", max_vel_limit: 0.22 });
    expect(rsr.error).toBeNull();

    const refused = await model.submitPolicy("grcn1", "preemption", {
      activity_window: "0.4",
      priority: { f1: "0", f2: "1" },
    });
    expect(refused).toBe(false);
    const grcn = model.card("grcn1")!;
    expect(grcn.error).toContain("end_user may not set preemption");
    expect(grcn.model.policy_params).toEqual({ policy: "block" });
    expect(renderCard(grcn, model.state.role)).toContain("end_user may not set preemption");

    // Clamped deliveries surface on the live stream as constrain violations.
    await waitFor(() => model.state.feed.length > 0, 20000, "violations on the stream");
    expect(model.state.feed[0].rule).toBe("constrain");
    expect(model.state.feed[0].cause).toBe("max_vel exceeds limit");
    expect(rsr.violations.length).toBeGreaterThan(0);

    await waitFor(async () => (await api.status()).finished, 20000, "run end");
    await waitFor(() => model.state.connection === "ended", 10000, "stream end");

    const result = await api.result();
    expect((result.summary as { failed_checks: string[] }).failed_checks).toEqual([]);
    expect(result.checks.no_overspeed).toBe(true);
    expect(result.checks.bound_flowing).toBe(true);
    expect(model.state.feed.every((v) => v.rule === "constrain")).toBe(true);
  });
});
