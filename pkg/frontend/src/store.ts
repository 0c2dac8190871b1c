// Application store. The server is the source of truth: committed
// interactions and pushed events both end in a fresh fetch of the affected
// document, never in a local-only mutation.

import type { ApiClient } from "./api.js";
import type { EventChannel } from "./events.js";
import type { EventDoc, GraphDoc, SessionDoc, WorkflowDoc } from "./types.js";

export type ViewMode = "overview" | "step-detail" | "summary";

const SESSION_EVENTS = new Set([
  "step-entered",
  "note-added",
  "capture-added",
  "capture-removed",
  "status-changed",
  "transfer-completed",
  "tool-state-changed",
]);

export class AppStore {
  workflow: WorkflowDoc | null = null;
  graph: GraphDoc | null = null;
  session: SessionDoc | null = null;
  mode: ViewMode = "overview";

  private listeners = new Set<() => void>();
  private refreshing: Promise<void> | null = null;

  constructor(
    readonly api: ApiClient,
    readonly events: EventChannel,
  ) {
    events.subscribe((event) => void this.onEvent(event));
  }

  onChange(listener: () => void): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  setMode(mode: ViewMode): void {
    this.mode = mode;
    this.notify();
  }

  async loadProject(): Promise<void> {
    this.workflow = await this.api.getWorkflow();
    this.graph = await this.api.getGraph();
    this.notify();
  }

  /** Adopt the graph document a mutation ack returned. */
  adoptGraph(graph: GraphDoc): void {
    this.graph = graph;
    this.notify();
  }

  async refreshSession(): Promise<void> {
    // collapse concurrent refreshes into one in-flight fetch
    if (this.refreshing) return this.refreshing;
    this.refreshing = this.api
      .getSession()
      .then((session) => {
        this.session = session;
        this.notify();
      })
      .finally(() => {
        this.refreshing = null;
      });
    return this.refreshing;
  }

  private async onEvent(event: EventDoc): Promise<void> {
    if (SESSION_EVENTS.has(event.kind)) {
      await this.refreshSession().catch(() => undefined);
    }
  }

  currentStepId(): string | null {
    if (!this.session || this.session.currentSeq === null) return null;
    const record = this.session.records.find((r) => r.seq === this.session!.currentSeq);
    return record ? record.step : null;
  }

  performedStepIds(): Set<string> {
    return new Set((this.session?.records ?? []).map((r) => r.step));
  }

  successorsOf(stepId: string): string[] {
    if (!this.workflow) return [];
    const ordered = this.workflow.steps.map((s) => s.id);
    const targets = new Set(
      this.workflow.transitions.filter(([from]) => from === stepId).map(([, to]) => to),
    );
    return ordered.filter((id) => targets.has(id));
  }

  predecessorsOf(stepId: string): string[] {
    if (!this.workflow) return [];
    const ordered = this.workflow.steps.map((s) => s.id);
    const sources = new Set(
      this.workflow.transitions.filter(([, to]) => to === stepId).map(([from]) => from),
    );
    return ordered.filter((id) => sources.has(id));
  }
}
