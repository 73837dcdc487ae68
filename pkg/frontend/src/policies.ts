import type { CnTypeName, Role } from "./types.js";

// Mirror of the engine's policy tables. The shared wire-samples fixture pins
// both sides to the same contents.
export const VALID_POLICIES: Record<CnTypeName, string[]> = {
  grcn: ["block", "fifo_queue", "priority_queue", "preemption"],
  rsrcn: ["block", "safe", "constrain"],
  msrcn: ["msr_block"],
  fps_monitor: [],
};

export const END_USER_POLICIES: Record<CnTypeName, string[]> = {
  grcn: [],
  rsrcn: ["constrain"],
  msrcn: ["msr_block"],
  fps_monitor: [],
};

export type FieldKind = "number" | "flag" | "flow_numbers" | "flow_bits" | "json";

export type FieldSpec = {
  name: string;
  label: string;
  kind: FieldKind;
  developerOnly: boolean;
  required?: boolean;
};

export const POLICY_FIELDS: Record<string, FieldSpec[]> = {
  block: [
    { name: "block_bits", label: "Blocked flows", kind: "flow_bits", developerOnly: true },
  ],
  fifo_queue: [
    { name: "timeout", label: "Queue timeout (s)", kind: "number", developerOnly: false, required: true },
  ],
  priority_queue: [
    { name: "timeout", label: "Queue timeout (s)", kind: "number", developerOnly: false, required: true },
    { name: "priority", label: "Flow priorities", kind: "flow_numbers", developerOnly: true, required: true },
  ],
  preemption: [
    { name: "activity_window", label: "Activity window (s)", kind: "number", developerOnly: false },
    { name: "priority", label: "Flow priorities", kind: "flow_numbers", developerOnly: true, required: true },
  ],
  safe: [
    { name: "threshold", label: "Velocity per fps unit", kind: "number", developerOnly: false, required: true },
    { name: "freshness_window", label: "Freshness window (s)", kind: "number", developerOnly: false },
  ],
  constrain: [
    { name: "max_vel_limit", label: "Velocity ceiling", kind: "number", developerOnly: false, required: true },
  ],
  msr_block: [
    { name: "freshness_window", label: "Freshness window (s)", kind: "number", developerOnly: false },
    { name: "eflow_triggers", label: "Event triggers", kind: "json", developerOnly: true },
    { name: "derived_eflows", label: "Derived events", kind: "json", developerOnly: true },
    { name: "msr_rules", label: "Rules", kind: "json", developerOnly: true },
    { name: "strict_deny", label: "Deny unmatched actions", kind: "flag", developerOnly: true },
  ],
};

// Every policy the form may offer for a node type. Role does not shrink the
// list: the service owns role enforcement and the console renders its refusal.
export const policyChoices = (cnType: CnTypeName): string[] => VALID_POLICIES[cnType];

export const endUserMay = (cnType: CnTypeName, policy: string): boolean =>
  END_USER_POLICIES[cnType].includes(policy);

export const roleMay = (role: Role, cnType: CnTypeName, policy: string): boolean =>
  role === "developer" || endUserMay(cnType, policy);

export class PolicyFormError extends Error {}

const asNumber = (name: string, raw: unknown): number => {
  const n = typeof raw === "number" ? raw : Number(raw);
  if (!Number.isFinite(n)) throw new PolicyFormError(`${name} must be a number`);
  return n;
};

const asFlowMap = (spec: FieldSpec, raw: unknown): Record<string, number> => {
  if (typeof raw !== "object" || raw === null) {
    throw new PolicyFormError(`${spec.name} must map flows to numbers`);
  }
  const out: Record<string, number> = {};
  for (const [flow, value] of Object.entries(raw as Record<string, unknown>)) {
    if (value === "" || value === undefined || value === null) continue;
    const n = asNumber(`${spec.name}[${flow}]`, value);
    out[flow] = spec.kind === "flow_bits" ? (n === 0 ? 0 : 1) : n;
  }
  return out;
};

const coerce = (spec: FieldSpec, raw: unknown): unknown => {
  switch (spec.kind) {
    case "number":
      return asNumber(spec.name, raw);
    case "flag":
      return raw === true || raw === "true" || raw === "on";
    case "flow_bits":
    case "flow_numbers":
      return asFlowMap(spec, raw);
    case "json": {
      if (typeof raw !== "string") return raw;
      try {
        return JSON.parse(raw) as unknown;
      } catch {
        throw new PolicyFormError(`${spec.name} must be valid JSON`);
      }
    }
  }
};

const isEmpty = (value: unknown): boolean =>
  value === undefined ||
  value === null ||
  value === "" ||
  value === false ||
  (typeof value === "object" && value !== null && Object.keys(value as object).length === 0);

// The only gate between a form and the wire: refuses anything the node type
// cannot carry and anything outside the policy's field schema.
export const buildPolicyDoc = (
  cnType: CnTypeName,
  policy: string,
  values: Record<string, unknown>,
): Record<string, unknown> => {
  if (!VALID_POLICIES[cnType].includes(policy)) {
    throw new PolicyFormError(`${policy} is not a ${cnType} policy`);
  }
  const doc: Record<string, unknown> = { policy };
  for (const spec of POLICY_FIELDS[policy] ?? []) {
    const raw = values[spec.name];
    if (raw === undefined || raw === null || raw === "") {
      if (spec.required) throw new PolicyFormError(`${spec.name} is required for ${policy}`);
      continue;
    }
    const value = coerce(spec, raw);
    if (isEmpty(value)) {
      if (spec.required) throw new PolicyFormError(`${spec.name} is required for ${policy}`);
      continue;
    }
    doc[spec.name] = value;
  }
  return doc;
};
