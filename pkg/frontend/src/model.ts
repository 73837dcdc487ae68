import { ApiError, ConsoleApi } from "./api.js";
import { buildPolicyDoc } from "./policies.js";
import type { StreamHandle, StreamHandlers, StreamState } from "./stream.js";
import type { CnModel, Role, StatusInfo, ViolationRecord } from "./types.js";

const FEED_LIMIT = 200;
const CARD_FEED_LIMIT = 5;

export type CnCard = {
  model: CnModel;
  violations: ViolationRecord[];
  formPolicy: string | null;
  error: string | null;
  acked: boolean;
};

export type ConsoleState = {
  role: Role;
  connection: StreamState;
  status: StatusInfo | null;
  cards: CnCard[];
  feed: ViolationRecord[];
  loadError: string | null;
};

export type StreamFactory = (handlers: StreamHandlers, afterIndex: number) => StreamHandle;

// View model of the console. Every number and config it exposes comes from a
// service response: submits apply the server's echo, never the local form.
export class ConsoleModel {
  state: ConsoleState = {
    role: "end_user",
    connection: "connecting",
    status: null,
    cards: [],
    feed: [],
    loadError: null,
  };

  private api: ConsoleApi;
  private streamFactory: StreamFactory | null;
  private listeners: (() => void)[] = [];
  private handle: StreamHandle | null = null;
  private lastIndex = -1;

  constructor(api: ConsoleApi, streamFactory: StreamFactory | null = null) {
    this.api = api;
    this.streamFactory = streamFactory;
  }

  subscribe(listener: () => void): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  card(cnId: string): CnCard | undefined {
    return this.state.cards.find((c) => c.model.cn_id === cnId);
  }

  setRole(role: Role): void {
    this.state.role = role;
    this.emit();
  }

  setFormPolicy(cnId: string, policy: string): void {
    const card = this.card(cnId);
    if (!card) return;
    card.formPolicy = policy;
    card.error = null;
    card.acked = false;
    this.emit();
  }

  async refresh(): Promise<void> {
    try {
      const [status, models] = await Promise.all([this.api.status(), this.api.listCns()]);
      this.state.status = status;
      this.state.cards = models.map((m) => this.mergeCard(m));
      this.state.loadError = null;
    } catch (err) {
      this.state.loadError = err instanceof Error ? err.message : String(err);
    }
    this.emit();
  }

  async refreshStatus(): Promise<void> {
    try {
      this.state.status = await this.api.status();
      this.emit();
    } catch {
      // transient; the stream state carries connectivity
    }
  }

  private mergeCard(model: CnModel): CnCard {
    const prev = this.card(model.cn_id);
    if (prev) {
      prev.model = model;
      return prev;
    }
    return { model, violations: [], formPolicy: null, error: null, acked: false };
  }

  async submitPolicy(cnId: string, policy: string, values: Record<string, unknown>): Promise<boolean> {
    const card = this.card(cnId);
    if (!card) return false;
    card.acked = false;
    let doc: Record<string, unknown>;
    try {
      doc = buildPolicyDoc(card.model.cn_type, policy, values);
    } catch (err) {
      card.error = err instanceof Error ? err.message : String(err);
      this.emit();
      return false;
    }
    try {
      const echoed = await this.api.putPolicy(cnId, doc, this.state.role);
      card.model = echoed;
      card.error = null;
      card.acked = true;
      this.emit();
      return true;
    } catch (err) {
      card.error = err instanceof ApiError ? err.detail : err instanceof Error ? err.message : String(err);
      this.emit();
      return false;
    }
  }

  start(): void {
    if (!this.streamFactory) return;
    this.handle?.stop();
    this.handle = this.streamFactory(
      {
        onViolation: (record) => this.handleViolation(record),
        onState: (state) => this.handleStreamState(state),
      },
      this.lastIndex,
    );
  }

  stop(): void {
    this.handle?.stop();
    this.handle = null;
  }

  handleViolation(record: ViolationRecord): void {
    this.lastIndex = Math.max(this.lastIndex, record.index);
    this.state.feed = [record, ...this.state.feed].slice(0, FEED_LIMIT);
    const card = this.card(record.cn_id);
    if (card) {
      card.violations = [record, ...card.violations].slice(0, CARD_FEED_LIMIT);
    }
    this.emit();
    if (card) void this.refreshCard(record.cn_id);
  }

  private async refreshCard(cnId: string): Promise<void> {
    try {
      const model = await this.api.getCn(cnId);
      const card = this.card(cnId);
      if (card) {
        card.model = model;
        this.emit();
      }
    } catch {
      // transient; the next refresh will converge
    }
  }

  private handleStreamState(state: StreamState): void {
    if (state === "ended") {
      void this.afterStreamEnd();
      return;
    }
    this.state.connection = state;
    this.emit();
  }

  // The server closes the stream once the run is finished and drained, but a
  // dropped proxy looks identical, so ask before declaring the run over.
  private async afterStreamEnd(): Promise<void> {
    try {
      const status = await this.api.status();
      this.state.status = status;
      if (status.finished) {
        this.state.connection = "ended";
        this.emit();
        return;
      }
    } catch {
      // fall through to reconnect
    }
    this.start();
  }
}
