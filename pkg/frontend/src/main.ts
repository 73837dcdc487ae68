import { ConsoleApi } from "./api.js";
import { ConsoleModel } from "./model.js";
import { renderApp } from "./render.js";
import { streamViolations } from "./stream.js";
import type { Role } from "./types.js";

const params = new URLSearchParams(window.location.search);
const apiBase = params.get("api") ?? window.location.origin;

const api = new ConsoleApi(apiBase);
const model = new ConsoleModel(api, (handlers, afterIndex) =>
  streamViolations(apiBase, handlers, { afterIndex }),
);

const root = document.querySelector<HTMLDivElement>("#app")!;

type DirtySnapshot = { focusKey: string | null; dirty: Map<string, string> };

const fieldKey = (el: Element): string | null => {
  const form = el.closest("form");
  const name = el.getAttribute("name");
  if (!form || !name) return null;
  return `${form.getAttribute("data-cn") ?? ""}|${name}`;
};

// Re-rendering swaps the whole tree; carry unsubmitted edits and focus over.
const snapshotDirty = (): DirtySnapshot => {
  const dirty = new Map<string, string>();
  let focusKey: string | null = null;
  for (const el of root.querySelectorAll<HTMLInputElement | HTMLTextAreaElement>("input[name], textarea[name]")) {
    const key = fieldKey(el);
    if (!key) continue;
    if (el instanceof HTMLInputElement && el.type === "checkbox") {
      if (el.checked !== el.defaultChecked) dirty.set(`${key}|c`, el.checked ? "1" : "0");
    } else if (el.value !== el.defaultValue) {
      dirty.set(key, el.value);
    }
    if (el === document.activeElement) focusKey = key;
  }
  return { focusKey, dirty };
};

const restoreDirty = (snap: DirtySnapshot): void => {
  for (const el of root.querySelectorAll<HTMLInputElement | HTMLTextAreaElement>("input[name], textarea[name]")) {
    const key = fieldKey(el);
    if (!key) continue;
    if (el instanceof HTMLInputElement && el.type === "checkbox") {
      const checked = snap.dirty.get(`${key}|c`);
      if (checked !== undefined) el.checked = checked === "1";
    } else {
      const value = snap.dirty.get(key);
      if (value !== undefined) el.value = value;
    }
    if (key === snap.focusKey) el.focus();
  }
};

const renderNow = (): void => {
  const snap = snapshotDirty();
  root.innerHTML = renderApp(model.state);
  restoreDirty(snap);
};

model.subscribe(renderNow);

root.addEventListener("change", (event) => {
  const target = event.target as HTMLElement;
  if (target instanceof HTMLSelectElement && target.name === "policy") {
    model.setFormPolicy(target.dataset.cn ?? "", target.value);
  }
  if (target instanceof HTMLInputElement && target.name === "role") {
    model.setRole(target.value as Role);
  }
});

const collectValues = (form: HTMLFormElement): Record<string, unknown> => {
  const data = new FormData(form);
  const values: Record<string, unknown> = {};
  for (const [name, raw] of data.entries()) {
    if (name === "policy" || typeof raw !== "string") continue;
    const sep = name.indexOf(":");
    if (sep >= 0) {
      const field = name.slice(0, sep);
      const map = (values[field] ??= {}) as Record<string, unknown>;
      map[name.slice(sep + 1)] = raw;
    } else {
      values[name] = raw;
    }
  }
  return values;
};

root.addEventListener("submit", (event) => {
  const form = event.target as HTMLFormElement;
  event.preventDefault();
  const data = new FormData(form);
  const policy = String(data.get("policy") ?? "");
  void model.submitPolicy(form.dataset.cn ?? "", policy, collectValues(form));
});

renderNow();
void model.refresh();
model.start();

setInterval(() => {
  if (!model.state.status?.finished) void model.refreshStatus();
}, 2000);
