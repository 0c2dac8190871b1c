// Thin typed client over the orchestration service. The UI never trusts
// local state: every mutation returns the server's post-mutation document.

import type {
  ApiErrorBody,
  DataSourceDoc,
  GraphDoc,
  LayoutDoc,
  LinkDoc,
  RecordDoc,
  ResultGroupDoc,
  SessionDoc,
  StatusName,
  WorkflowDoc,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly code: string,
    message: string,
    public readonly status: number,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}/api/v1${path}`, {
      method,
      headers: body === undefined ? {} : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      let parsed: ApiErrorBody | null = null;
      try {
        parsed = (await response.json()) as ApiErrorBody;
      } catch {
        // non-JSON error body
      }
      throw new ApiError(
        parsed?.code ?? "HTTP_ERROR",
        parsed?.message ?? `${method} ${path} failed with ${response.status}`,
        response.status,
      );
    }
    return (await response.json()) as T;
  }

  // raw body text, for byte-exact round-trip comparison
  async getGraphRaw(): Promise<string> {
    const response = await this.fetchFn(`${this.baseUrl}/api/v1/graph`);
    if (!response.ok) throw new ApiError("HTTP_ERROR", "cannot fetch graph", response.status);
    return await response.text();
  }

  getWorkflow(): Promise<WorkflowDoc> {
    return this.request("GET", "/workflow");
  }

  getGraph(): Promise<GraphDoc> {
    return this.request("GET", "/graph");
  }

  addLink(link: LinkDoc): Promise<GraphDoc> {
    return this.request("POST", "/graph/links", link);
  }

  deleteLink(linkId: string): Promise<GraphDoc> {
    return this.request("DELETE", `/graph/links/${encodeURIComponent(linkId)}`);
  }

  addDataSource(binding: DataSourceDoc): Promise<GraphDoc> {
    return this.request("POST", "/graph/data-sources", binding);
  }

  putLayout(layout: LayoutDoc): Promise<GraphDoc> {
    return this.request("PUT", "/graph/layouts", layout);
  }

  startSession(): Promise<SessionDoc> {
    return this.request("POST", "/session");
  }

  getSession(): Promise<SessionDoc> {
    return this.request("GET", "/session");
  }

  enterStep(stepId: string): Promise<RecordDoc> {
    return this.request("POST", "/session/enter-step", { step: stepId });
  }

  setStatus(status: StatusName, seq?: number): Promise<RecordDoc> {
    return this.request("POST", "/session/status", { status, seq });
  }

  addNote(text: string): Promise<{ at: number; text: string }> {
    return this.request("POST", "/session/notes", { text });
  }

  addCapture(label: string, source: { tool?: string; imageBase64?: string }) {
    return this.request<Record<string, unknown>>("POST", "/session/captures", {
      label,
      ...source,
    });
  }

  removeCapture(captureId: string) {
    return this.request<Record<string, unknown>>(
      "DELETE",
      `/session/captures/${encodeURIComponent(captureId)}`,
    );
  }

  getResults(includeDead = false): Promise<ResultGroupDoc[]> {
    return this.request("GET", `/session/results?includeDead=${includeDead}`);
  }

  createComposition(canvas: [number, number], title: string): Promise<{ id: string }> {
    return this.request("POST", "/compositions", { canvas, title });
  }

  placeCapture(compositionId: string, captureId: string, region: number[]) {
    return this.request<Record<string, unknown>>(
      "POST",
      `/compositions/${encodeURIComponent(compositionId)}/placements`,
      { capture: captureId, region },
    );
  }

  exportComposition(compositionId: string): Promise<{ png: string; manifest: unknown }> {
    return this.request("POST", `/compositions/${encodeURIComponent(compositionId)}/export`);
  }
}
