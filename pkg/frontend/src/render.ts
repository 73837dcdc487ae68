import type { CnCard, ConsoleState } from "./model.js";
import { POLICY_FIELDS, endUserMay, policyChoices } from "./policies.js";
import type { FieldSpec } from "./policies.js";
import type { CnModel, Role, ViolationRecord } from "./types.js";

const ESCAPES: Record<string, string> = {
  "&": "&amp;",
  "<": "&lt;",
  ">": "&gt;",
  '"': "&quot;",
  "'": "&#39;",
};

export const esc = (value: unknown): string =>
  String(value).replace(/[&<>"']/g, (c) => ESCAPES[c]);

const currentPolicyName = (model: CnModel): string =>
  typeof model.policy_params.policy === "string" ? model.policy_params.policy : "";

export const selectedPolicy = (card: CnCard): string =>
  card.formPolicy ?? currentPolicyName(card.model) ?? "";

const fieldValue = (card: CnCard, spec: FieldSpec): unknown =>
  selectedPolicy(card) === currentPolicyName(card.model) ? card.model.policy_params[spec.name] : undefined;

const numberInput = (spec: FieldSpec, value: unknown, readOnly: boolean): string => {
  const v = typeof value === "number" ? ` value="${esc(value)}"` : "";
  const ro = readOnly ? " readonly" : "";
  const req = spec.required && !readOnly ? " required" : "";
  return `<input type="number" step="any" name="${esc(spec.name)}"${v}${ro}${req}>`;
};

const jsonInput = (spec: FieldSpec, value: unknown, readOnly: boolean): string => {
  const v = value === undefined ? "" : esc(JSON.stringify(value));
  const ro = readOnly ? " readonly" : "";
  return `<textarea name="${esc(spec.name)}" rows="2" spellcheck="false"${ro}>${v}</textarea>`;
};

const flagInput = (spec: FieldSpec, value: unknown, readOnly: boolean): string => {
  const on = value === true;
  if (readOnly) {
    const mirror = on ? `<input type="hidden" name="${esc(spec.name)}" value="on">` : "";
    return `<input type="checkbox" disabled${on ? " checked" : ""}>${mirror}`;
  }
  return `<input type="checkbox" name="${esc(spec.name)}"${on ? " checked" : ""}>`;
};

const flowMapInputs = (card: CnCard, spec: FieldSpec, readOnly: boolean): string => {
  const current = (fieldValue(card, spec) ?? {}) as Record<string, unknown>;
  const rows = card.model.risk_info.flows
    .filter((flow) => flow.role !== "fps")
    .map((flow) => {
      const name = `${spec.name}:${flow.flow_id}`;
      const value = current[flow.flow_id];
      let input: string;
      if (spec.kind === "flow_bits") {
        const on = value === 1;
        if (readOnly) {
          const mirror = on ? `<input type="hidden" name="${esc(name)}" value="1">` : "";
          input = `<input type="checkbox" disabled${on ? " checked" : ""}>${mirror}`;
        } else {
          input = `<input type="checkbox" name="${esc(name)}" value="1"${on ? " checked" : ""}>`;
        }
      } else {
        const v = typeof value === "number" ? ` value="${esc(value)}"` : "";
        input = `<input type="number" step="1" name="${esc(name)}"${v}${readOnly ? " readonly" : ""}>`;
      }
      return `<label class="flow-row">${input}<span>${esc(flow.flow_id)} · ${esc(flow.topic)}</span></label>`;
    });
  return rows.join("");
};

const renderField = (card: CnCard, spec: FieldSpec, role: Role): string => {
  const readOnly = spec.developerOnly && role === "end_user";
  const value = fieldValue(card, spec);
  let control: string;
  switch (spec.kind) {
    case "number":
      control = numberInput(spec, value, readOnly);
      break;
    case "flag":
      control = flagInput(spec, value, readOnly);
      break;
    case "json":
      control = jsonInput(spec, value, readOnly);
      break;
    default:
      control = flowMapInputs(card, spec, readOnly);
  }
  const note = readOnly ? `<span class="ro-note">developer setting</span>` : "";
  return `<label class="field${readOnly ? " locked" : ""}"><span>${esc(spec.label)}${note}</span>${control}</label>`;
};

const policyOption = (card: CnCard, role: Role, policy: string): string => {
  const picked = selectedPolicy(card) === policy ? " selected" : "";
  const tag = role === "end_user" && !endUserMay(card.model.cn_type, policy) ? " (developer)" : "";
  return `<option value="${esc(policy)}"${picked}>${esc(policy)}${tag}</option>`;
};

const renderForm = (card: CnCard, role: Role): string => {
  const choices = policyChoices(card.model.cn_type);
  if (choices.length === 0) {
    return `<p class="monitor-note">monitor only, takes no policy</p>`;
  }
  const policy = selectedPolicy(card);
  const fields = (POLICY_FIELDS[policy] ?? []).map((spec) => renderField(card, spec, role)).join("");
  return `
    <form data-cn="${esc(card.model.cn_id)}">
      <label class="field"><span>Policy</span>
        <select name="policy" data-cn="${esc(card.model.cn_id)}">
          ${choices.map((p) => policyOption(card, role, p)).join("")}
        </select>
      </label>
      ${fields}
      <div class="form-foot">
        <button type="submit">Apply</button>
        ${card.acked ? `<span class="ack">stored</span>` : ""}
      </div>
    </form>`;
};

const renderCardViolation = (record: ViolationRecord): string =>
  `<li><code>t=${esc(record.time.toFixed(2))}s</code> ${esc(record.rule)}: ${esc(record.cause)}</li>`;

const flowsTable = (model: CnModel): string => {
  const rows = model.risk_info.flows
    .map(
      (flow) =>
        `<tr><td>${esc(flow.flow_id)}</td><td>${esc(flow.role)}</td><td>${esc(flow.topic)}</td><td>${esc(
          flow.source_node || "-",
        )}</td></tr>`,
    )
    .join("");
  return `<table class="flows"><thead><tr><th>flow</th><th>role</th><th>topic</th><th>source</th></tr></thead><tbody>${rows}</tbody></table>`;
};

export const renderCard = (card: CnCard, role: Role): string => {
  const model = card.model;
  const trigger = model.trigger_time === null ? "never" : model.trigger_time;
  const params = JSON.stringify(model.policy_params);
  return `
  <section class="card" id="card-${esc(model.cn_id)}">
    <header>
      <h2>${esc(model.cn_id)}</h2>
      <span class="badge type-${esc(model.cn_type)}">${esc(model.cn_type)}</span>
      ${model.mandatory ? `<span class="badge mandatory">mandatory</span>` : ""}
      <code>${esc(model.node_name)}</code>
    </header>
    <p class="desc">${esc(model.description)}</p>
    <dl class="meta">
      <dt>findings</dt><dd>${model.risk_info.findings.map((f) => `<code>${esc(f)}</code>`).join(" ") || "-"}</dd>
      <dt>suggested</dt><dd>${esc(model.risk_info.suggested_policy || "-")}</dd>
      <dt>outputs</dt><dd>${model.risk_info.output_topics.map((t) => `<code>${esc(t)}</code>`).join(" ") || "-"}</dd>
      <dt>last trigger</dt><dd class="trigger">${esc(trigger)}</dd>
      <dt>active policy</dt><dd><code class="params">${esc(params)}</code></dd>
    </dl>
    ${flowsTable(model)}
    ${card.violations.length > 0 ? `<ul class="card-feed">${card.violations.map(renderCardViolation).join("")}</ul>` : ""}
    ${renderForm(card, role)}
    ${card.error ? `<p class="error">${esc(card.error)}</p>` : ""}
  </section>`;
};

export const renderBanner = (state: ConsoleState): string => {
  switch (state.connection) {
    case "stale":
      return `<div class="banner stale">event stream lost, data may be stale, retrying</div>`;
    case "connecting":
      return `<div class="banner connecting">connecting to event stream</div>`;
    case "ended":
      return `<div class="banner ended">run finished</div>`;
    default:
      return "";
  }
};

const renderFeed = (feed: ViolationRecord[]): string => {
  if (feed.length === 0) {
    return `<p class="feed-empty">no violations recorded</p>`;
  }
  const items = feed
    .map(
      (record) =>
        `<li><code>#${esc(record.index)}</code> <code>t=${esc(record.time.toFixed(2))}s</code> ` +
        `<strong>${esc(record.cn_id)}</strong> ${esc(record.rule)}: ${esc(record.cause)}</li>`,
    )
    .join("");
  return `<ul class="feed">${items}</ul>`;
};

const renderStatus = (state: ConsoleState): string => {
  const status = state.status;
  if (!status) return "";
  return `<div class="status">
    <code>${esc(status.scenario)}</code>
    <span>t=${esc(status.clock.toFixed(1))}s / ${esc(status.duration.toFixed(1))}s</span>
    <span>${status.attack ? "attack on" : "attack off"}</span>
    <span>${status.enforce_roles ? "roles enforced" : "roles open"}</span>
    <span>${esc(status.violations)} violations</span>
    ${status.finished ? `<span class="done">finished</span>` : ""}
  </div>`;
};

const roleToggle = (role: Role): string => `
  <fieldset class="role-toggle">
    <label><input type="radio" name="role" value="end_user"${role === "end_user" ? " checked" : ""}>end user</label>
    <label><input type="radio" name="role" value="developer"${role === "developer" ? " checked" : ""}>developer</label>
  </fieldset>`;

export const renderApp = (state: ConsoleState): string => {
  const cards =
    state.cards.length === 0 && state.loadError === null
      ? `<p class="empty">no coordination nodes planned for this scenario</p>`
      : state.cards.map((card) => renderCard(card, state.role)).join("");
  return `
  <header class="top">
    <h1>interaction risk console</h1>
    ${roleToggle(state.role)}
    ${renderStatus(state)}
  </header>
  ${renderBanner(state)}
  ${state.loadError ? `<p class="error load-error">${esc(state.loadError)}</p>` : ""}
  <main class="cards">${cards}</main>
  <aside class="violations">
    <h2>violation feed</h2>
    ${renderFeed(state.feed)}
  </aside>`;
};
