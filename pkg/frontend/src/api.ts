import type { CnModel, Role, RunResult, StatusInfo, ViolationRecord } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  status: number;
  detail: string;

  constructor(status: number, detail: string) {
    super(detail);
    this.status = status;
    this.detail = detail;
  }
}

export class ConsoleApi {
  private base: string;
  private fetchImpl: FetchLike;

  constructor(base: string, fetchImpl?: FetchLike) {
    this.base = base.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(`${this.base}${path}`, init);
    const body: unknown = await resp.json().catch(() => ({}));
    if (!resp.ok) {
      const detail = (body as { detail?: unknown }).detail;
      throw new ApiError(resp.status, typeof detail === "string" ? detail : `http ${resp.status}`);
    }
    return body as T;
  }

  status(): Promise<StatusInfo> {
    return this.request<StatusInfo>("/status");
  }

  listCns(): Promise<CnModel[]> {
    return this.request<CnModel[]>("/cns");
  }

  getCn(cnId: string): Promise<CnModel> {
    return this.request<CnModel>(`/cns/${encodeURIComponent(cnId)}`);
  }

  putPolicy(cnId: string, doc: Record<string, unknown>, role: Role): Promise<CnModel> {
    return this.request<CnModel>(`/cns/${encodeURIComponent(cnId)}/policy`, {
      method: "PUT",
      headers: { "content-type": "application/json", "x-role": role },
      body: JSON.stringify({ policy: doc }),
    });
  }

  violations(afterIndex = -1): Promise<ViolationRecord[]> {
    return this.request<ViolationRecord[]>(`/violations?after_index=${afterIndex}`);
  }

  result(): Promise<RunResult> {
    return this.request<RunResult>("/result");
  }
}
