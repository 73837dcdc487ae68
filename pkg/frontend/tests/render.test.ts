import { describe, expect, it } from "vitest";

import type { CnCard, ConsoleState } from "../src/model.js";
import { renderApp, renderBanner, renderCard } from "../src/render.js";
import { makeCn, makeStatus, makeViolation } from "./fake_service.js";

const card = (overrides: Partial<CnCard> = {}): CnCard => ({
  model: makeCn(),
  violations: [],
  formPolicy: null,
  error: null,
  acked: false,
  ...overrides,
});

const state = (overrides: Partial<ConsoleState> = {}): ConsoleState => ({
  role: "end_user",
  connection: "live",
  status: makeStatus(),
  cards: [],
  feed: [],
  loadError: null,
  ...overrides,
});

describe("renderCard", () => {
  it("shows identity, type, description and trigger time", () => {
    const html = renderCard(card(), "end_user");
    expect(html).toContain("rsrcn1");
    expect(html).toContain("type-rsrcn");
    expect(html).toContain("rsrcn covering rsr_max_vel:/control/max_vel");
    expect(html).toContain("never");
  });

  it("offers only policies valid for the node type", () => {
    const html = renderCard(card(), "developer");
    const options = [...html.matchAll(/<option value="([^"]+)"/g)].map((m) => m[1]);
    expect(options).toEqual(["block", "safe", "constrain"]);
  });

  it("marks developer-only policies in end-user mode", () => {
    const html = renderCard(card(), "end_user");
    expect(html).toContain("safe (developer)");
    expect(html).toContain(">constrain</option>");
    expect(renderCard(card(), "developer")).not.toContain("(developer)");
  });

  it("locks developer-only parameters in end-user mode", () => {
    const blockForm = card({ formPolicy: "block" });
    const endUser = renderCard(blockForm, "end_user");
    expect(endUser).toContain("disabled");
    expect(endUser).toContain("developer setting");
    const developer = renderCard(blockForm, "developer");
    expect(developer).not.toContain("developer setting");
  });

  it("prefills the form from the served configuration only", () => {
    const served = card({ model: makeCn({ policy_params: { policy: "constrain", max_vel_limit: 0.22 } }) });
    expect(renderCard(served, "end_user")).toContain('value="0.22"');
    const switched = card({
      model: makeCn({ policy_params: { policy: "constrain", max_vel_limit: 0.22 } }),
      formPolicy: "safe",
    });
    expect(renderCard(switched, "end_user")).not.toContain('value="0.22"');
  });

  it("renders monitors without a policy form", () => {
    const html = renderCard(card({ model: makeCn({ cn_id: "fpm1", cn_type: "fps_monitor" }) }), "developer");
    expect(html).not.toContain("<form");
    expect(html).toContain("monitor only");
  });

  it("renders inline errors, acks and the mandatory badge", () => {
    expect(renderCard(card({ error: "end_user may not set safe on rsrcn" }), "end_user")).toContain(
      "end_user may not set safe on rsrcn",
    );
    expect(renderCard(card({ acked: true }), "end_user")).toContain("stored");
    expect(renderCard(card({ model: makeCn({ mandatory: true }) }), "end_user")).toContain("mandatory");
  });

  it("escapes html in served text", () => {
    const html = renderCard(card({ model: makeCn({ description: "<img src=x>" }) }), "end_user");
    expect(html).not.toContain("<img src=x>");
    expect(html).toContain("&lt;img src=x&gt;");
  });
});

describe("renderApp", () => {
  it("shows an empty state when no nodes are planned", () => {
    expect(renderApp(state())).toContain("no coordination nodes planned");
  });

  it("shows a stale banner when the stream drops", () => {
    expect(renderBanner(state({ connection: "stale" }))).toContain("retrying");
    expect(renderApp(state({ connection: "stale" }))).toContain("data may be stale");
    expect(renderBanner(state({ connection: "live" }))).toBe("");
  });

  it("lists the violation feed newest first", () => {
    const s = state({
      feed: [
        makeViolation({ index: 1, cause: "second cause" }),
        makeViolation({ index: 0, cause: "first cause" }),
      ],
    });
    const html = renderApp(s);
    expect(html.indexOf("second cause")).toBeLessThan(html.indexOf("first cause"));
  });

  it("keeps the role toggle in sync with the state", () => {
    const html = renderApp(state({ role: "developer" }));
    expect(html).toMatch(/value="developer" checked/);
  });
});
