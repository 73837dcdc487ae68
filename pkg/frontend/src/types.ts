export type Role = "developer" | "end_user";

export type CnTypeName = "grcn" | "rsrcn" | "msrcn" | "fps_monitor";

export type FlowInfo = {
  flow_id: string;
  role: string;
  source_node: string;
  topic: string;
  carried_topic: string;
  remapped: boolean;
};

export type RiskInfo = {
  findings: string[];
  flows: FlowInfo[];
  output_topics: string[];
  suggested_policy: string;
};

export type CnModel = {
  cn_id: string;
  cn_type: CnTypeName;
  node_name: string;
  description: string;
  risk_info: RiskInfo;
  policy_params: Record<string, unknown>;
  mandatory: boolean;
  trigger_time: string | null;
  updated_at: string;
};

export type ViolationRecord = {
  index: number;
  time: number;
  cn_id: string;
  rule: string;
  cause: string;
  details: Record<string, unknown>;
  recorded_at: string;
};

export type StatusInfo = {
  scenario: string;
  clock: number;
  duration: number;
  finished: boolean;
  instrumented: boolean;
  attack: boolean;
  enforce_roles: boolean;
  violations: number;
};

export type RunResult = {
  summary: Record<string, unknown>;
  checks: Record<string, boolean>;
};

const hasKeys = (value: unknown, keys: string[]): value is Record<string, unknown> =>
  typeof value === "object" && value !== null && keys.every((k) => k in (value as Record<string, unknown>));

export const CN_MODEL_KEYS = [
  "cn_id",
  "cn_type",
  "node_name",
  "description",
  "risk_info",
  "policy_params",
  "mandatory",
  "trigger_time",
  "updated_at",
];

export const VIOLATION_KEYS = ["index", "time", "cn_id", "rule", "cause", "details", "recorded_at"];

export const FLOW_KEYS = ["flow_id", "role", "source_node", "topic", "carried_topic", "remapped"];

export const isCnModel = (value: unknown): value is CnModel =>
  hasKeys(value, CN_MODEL_KEYS) &&
  hasKeys((value as CnModel).risk_info, ["findings", "flows", "output_topics", "suggested_policy"]) &&
  (value as CnModel).risk_info.flows.every((f) => hasKeys(f, FLOW_KEYS));

export const isViolation = (value: unknown): value is ViolationRecord => hasKeys(value, VIOLATION_KEYS);
