// Toolchain editor: three panels (tools, links, data sources) with
// pointer-drag link creation. A drag from tool to tool opens a draft
// dialog; committing issues the service mutation and the panels refresh
// from the acked server graph. Server errors render inline on the draft.

import { ApiError } from "./api.js";
import type { AppStore } from "./store.js";
import type { GraphDoc, LinkKind } from "./types.js";

export interface DragContext {
  kind: "tool" | "data-source";
  id: string;
}

export interface LinkDraft {
  source: string;
  target: string;
}

export class EditorView {
  dragContext: DragContext | null = null;
  private draft: LinkDraft | null = null;
  private draftError = "";
  private linkCounter = 0;

  constructor(
    private readonly root: HTMLElement,
    private readonly store: AppStore,
  ) {}

  render(): void {
    const graph = this.store.graph;
    this.root.replaceChildren();
    if (!graph) return;

    this.root.appendChild(this.toolsPanel(graph));
    this.root.appendChild(this.linksPanel(graph));
    this.root.appendChild(this.dataPanel(graph));
    if (this.draft) this.root.appendChild(this.draftDialog(graph));
  }

  private toolsPanel(graph: GraphDoc): HTMLElement {
    const panel = document.createElement("section");
    panel.className = "panel tools-panel";
    panel.appendChild(heading("Available tools"));
    for (const tool of graph.tools) {
      const row = document.createElement("div");
      row.className = "tool-row";
      row.dataset.tool = tool.id;
      row.textContent = `${tool.id} — ${tool.name}`;
      row.addEventListener("mousedown", () => {
        this.dragContext = { kind: "tool", id: tool.id };
      });
      row.addEventListener("mouseup", () => void this.dropOnTool(tool.id));
      panel.appendChild(row);
    }
    return panel;
  }

  private linksPanel(graph: GraphDoc): HTMLElement {
    const panel = document.createElement("section");
    panel.className = "panel links-panel";
    panel.appendChild(heading("Data connections"));
    for (const link of graph.links) {
      const row = document.createElement("div");
      row.className = "link-row";
      row.dataset.link = link.id;
      const label = document.createElement("span");
      label.textContent =
        link.kind === "dataflow" && link.data
          ? `${link.id}: ${link.source}.${link.data.sourceChannel} → ` +
            `${link.target}.${link.data.targetChannel} [${link.data.pipeline}]`
          : `${link.id}: ${link.source} → ${link.target} (activation)`;
      const remove = document.createElement("button");
      remove.className = "link-delete";
      remove.textContent = "✕";
      remove.addEventListener("click", () => void this.deleteLink(link.id));
      row.append(label, remove);
      panel.appendChild(row);
    }
    return panel;
  }

  private dataPanel(graph: GraphDoc): HTMLElement {
    const panel = document.createElement("section");
    panel.className = "panel data-panel";
    panel.appendChild(heading("Data sources"));
    for (const source of graph.dataSources) {
      const row = document.createElement("div");
      row.className = "data-row";
      row.dataset.source = source.id;
      row.textContent = `${source.id} → ${source.tool}.${source.channel}`;
      row.addEventListener("mousedown", () => {
        this.dragContext = { kind: "data-source", id: source.id };
      });
      panel.appendChild(row);
    }
    return panel;
  }

  /** Mouse-up over a tool row completes a drag. */
  async dropOnTool(toolId: string): Promise<void> {
    const context = this.dragContext;
    this.dragContext = null;
    if (!context) return;
    if (context.kind === "tool") {
      if (context.id === toolId) return;
      this.draft = { source: context.id, target: toolId };
      this.draftError = "";
      this.render();
      return;
    }
    // dragging a data source onto a tool binds it to the tool's first
    // matching input channel
    const graph = this.store.graph!;
    const tool = graph.tools.find((t) => t.id === toolId);
    const channel = tool?.inputChannels[0]?.name;
    if (!tool || !channel) return;
    try {
      const updated = await this.store.api.addDataSource({
        id: context.id,
        tool: toolId,
        channel,
      });
      this.store.adoptGraph(updated);
    } catch (error) {
      this.draftError = error instanceof ApiError ? `${error.code}: ${error.message}` : String(error);
    }
    this.render();
  }

  private draftDialog(graph: GraphDoc): HTMLElement {
    const draft = this.draft!;
    const dialog = document.createElement("div");
    dialog.className = "link-draft";
    dialog.appendChild(heading(`New link ${draft.source} → ${draft.target}`));

    const kind = select("draft-kind", ["activation", "dataflow"]);
    const source = graph.tools.find((t) => t.id === draft.source)!;
    const target = graph.tools.find((t) => t.id === draft.target)!;
    const sourceChannel = select(
      "draft-source-channel",
      source.outputChannels.map((c) => c.name),
    );
    const targetChannel = select(
      "draft-target-channel",
      target.inputChannels.map((c) => c.name),
    );
    const pipeline = select(
      "draft-pipeline",
      graph.pipelines.map((p) => p.id),
    );
    dialog.append(
      labeled("kind", kind),
      labeled("from channel", sourceChannel),
      labeled("to channel", targetChannel),
      labeled("pipeline", pipeline),
    );

    const error = document.createElement("div");
    error.className = "draft-error";
    error.textContent = this.draftError;
    dialog.appendChild(error);

    const commit = document.createElement("button");
    commit.className = "draft-commit";
    commit.textContent = "Add link";
    commit.addEventListener("click", () =>
      void this.commitDraft(
        kind.value as LinkKind,
        sourceChannel.value,
        targetChannel.value,
        pipeline.value,
      ),
    );
    const cancel = document.createElement("button");
    cancel.className = "draft-cancel";
    cancel.textContent = "Cancel";
    cancel.addEventListener("click", () => {
      this.draft = null;
      this.render();
    });
    dialog.append(commit, cancel);
    return dialog;
  }

  async commitDraft(
    kind: LinkKind,
    sourceChannel: string,
    targetChannel: string,
    pipeline: string,
  ): Promise<void> {
    const draft = this.draft;
    if (!draft) return;
    this.linkCounter += 1;
    const link = {
      id: `ui-${draft.source}-${draft.target}-${this.linkCounter}`,
      source: draft.source,
      target: draft.target,
      kind,
      ...(kind === "dataflow"
        ? { data: { sourceChannel, targetChannel, pipeline } }
        : {}),
    };
    try {
      const updated = await this.store.api.addLink(link);
      this.draft = null;
      this.draftError = "";
      this.store.adoptGraph(updated);
    } catch (error) {
      // keep the draft on screen with the server's verdict inline
      this.draftError =
        error instanceof ApiError ? `${error.code}: ${error.message}` : String(error);
    }
    this.render();
  }

  async deleteLink(linkId: string): Promise<void> {
    const updated = await this.store.api.deleteLink(linkId);
    this.store.adoptGraph(updated);
    this.render();
  }
}

function heading(text: string): HTMLElement {
  const h = document.createElement("h3");
  h.textContent = text;
  return h;
}

function select(className: string, options: string[]): HTMLSelectElement {
  const element = document.createElement("select");
  element.className = className;
  for (const option of options) {
    const o = document.createElement("option");
    o.value = option;
    o.textContent = option;
    element.appendChild(o);
  }
  return element;
}

function labeled(text: string, control: HTMLElement): HTMLElement {
  const label = document.createElement("label");
  label.textContent = `${text}: `;
  label.appendChild(control);
  return label;
}
