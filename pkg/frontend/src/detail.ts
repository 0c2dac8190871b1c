// Step detail view: the current step enlarged with its description,
// predecessors above and successors below, plus status, notes, and
// capture controls. Clicking a neighbor issues enter-step; the view
// re-centers only when the pushed step-entered event lands and the fresh
// session state has been fetched.

import { ApiError } from "./api.js";
import type { AppStore } from "./store.js";
import { STAGE_COLORS, type StatusName } from "./types.js";

/** Pixel crop rectangle selected on a tool snapshot, normalized 0..1. */
export interface CropRegion {
  x: number;
  y: number;
  width: number;
  height: number;
}

/** Clamp a dragged selection to the unit square; empty selections stay empty. */
export function normalizeCrop(region: CropRegion): CropRegion {
  const x = Math.min(Math.max(region.x, 0), 1);
  const y = Math.min(Math.max(region.y, 0), 1);
  return {
    x,
    y,
    width: Math.min(Math.max(region.width, 0), 1 - x),
    height: Math.min(Math.max(region.height, 0), 1 - y),
  };
}

export class DetailView {
  lastError = "";

  constructor(
    private readonly root: HTMLElement,
    private readonly store: AppStore,
  ) {}

  render(): void {
    this.root.replaceChildren();
    const workflow = this.store.workflow;
    const current = this.store.currentStepId();
    if (!workflow) return;
    if (!current) {
      const hint = document.createElement("p");
      hint.className = "detail-hint";
      hint.textContent = "No active step. Start the session from a start step.";
      this.root.appendChild(hint);
      for (const stepId of workflow.start) {
        this.root.appendChild(this.stepButton(stepId, "successor"));
      }
      return;
    }

    const step = workflow.steps.find((s) => s.id === current)!;

    const above = document.createElement("div");
    above.className = "neighbors above";
    for (const stepId of this.store.predecessorsOf(current)) {
      above.appendChild(this.stepButton(stepId, "predecessor"));
    }

    const center = document.createElement("div");
    center.className = "current-step";
    center.dataset.step = step.id;
    center.style.borderColor = STAGE_COLORS[step.stage];
    const title = document.createElement("h2");
    title.className = "current-title";
    title.textContent = `${step.id} ${step.name}`;
    const description = document.createElement("p");
    description.className = "current-description";
    description.textContent = step.description;
    center.append(title, description, this.statusControls(), this.noteControls(), this.captureList());

    const below = document.createElement("div");
    below.className = "neighbors below";
    for (const stepId of this.store.successorsOf(current)) {
      below.appendChild(this.stepButton(stepId, "successor"));
    }

    const error = document.createElement("div");
    error.className = "detail-error";
    error.textContent = this.lastError;

    this.root.append(above, center, below, error);
  }

  private stepButton(stepId: string, role: "predecessor" | "successor"): HTMLElement {
    const workflow = this.store.workflow!;
    const step = workflow.steps.find((s) => s.id === stepId);
    const button = document.createElement("button");
    button.className = `neighbor ${role}`;
    button.dataset.step = stepId;
    button.textContent = step ? `${step.id} ${step.name}` : stepId;
    if (step) button.style.background = STAGE_COLORS[step.stage];
    button.addEventListener("click", () => void this.enter(stepId));
    return button;
  }

  /** Issue enter-step; the view updates via the pushed event, not locally. */
  async enter(stepId: string): Promise<void> {
    this.lastError = "";
    try {
      await this.store.api.enterStep(stepId);
    } catch (error) {
      this.lastError =
        error instanceof ApiError ? `${error.code}: ${error.message}` : String(error);
      this.render();
    }
  }

  private statusControls(): HTMLElement {
    const wrap = document.createElement("div");
    wrap.className = "status-controls";
    for (const status of ["pending", "done", "paused", "canceled"] as StatusName[]) {
      const button = document.createElement("button");
      button.className = `status-${status}`;
      button.textContent = status;
      button.addEventListener("click", () => void this.store.api.setStatus(status));
      wrap.appendChild(button);
    }
    return wrap;
  }

  private noteControls(): HTMLElement {
    const wrap = document.createElement("div");
    wrap.className = "note-controls";
    const record = this.store.session?.records.find(
      (r) => r.seq === this.store.session?.currentSeq,
    );
    const list = document.createElement("ul");
    list.className = "note-list";
    for (const note of record?.notes ?? []) {
      const item = document.createElement("li");
      item.textContent = note.text;
      list.appendChild(item);
    }
    const input = document.createElement("input");
    input.className = "note-input";
    input.placeholder = "Add a note about this step";
    const add = document.createElement("button");
    add.className = "note-add";
    add.textContent = "Add note";
    add.addEventListener("click", () => {
      if (input.value) void this.store.api.addNote(input.value);
      input.value = "";
    });
    wrap.append(list, input, add);
    return wrap;
  }

  private captureList(): HTMLElement {
    const wrap = document.createElement("div");
    wrap.className = "capture-controls";
    const record = this.store.session?.records.find(
      (r) => r.seq === this.store.session?.currentSeq,
    );
    const list = document.createElement("ul");
    list.className = "capture-list";
    for (const capture of record?.captures ?? []) {
      if (capture.removed || capture.supersededBy) continue;
      const item = document.createElement("li");
      item.dataset.capture = capture.id;
      item.textContent = `${capture.id} ${capture.label}`;
      const remove = document.createElement("button");
      remove.textContent = "remove";
      remove.addEventListener("click", () => void this.store.api.removeCapture(capture.id));
      item.appendChild(remove);
      list.appendChild(item);
    }
    wrap.appendChild(list);
    const graph = this.store.graph;
    const current = this.store.currentStepId();
    if (graph && current) {
      const binding = graph.bindings.find((b) => b.step === current);
      const toolset = graph.toolsets.find((ts) => ts.id === binding?.toolset);
      for (const toolId of toolset?.members ?? []) {
        const button = document.createElement("button");
        button.className = "capture-tool";
        button.dataset.tool = toolId;
        button.textContent = `capture ${toolId}`;
        button.addEventListener("click", () =>
          void this.store.api.addCapture(`${toolId} view`, { tool: toolId }),
        );
        wrap.appendChild(button);
      }
    }
    return wrap;
  }
}
