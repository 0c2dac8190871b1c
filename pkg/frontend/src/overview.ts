// Overview scene: the workflow flowchart colored by stage and the
// coordination graph as a node-link view, with performed steps and links
// highlighted from the journal.

import type { AppStore } from "./store.js";
import { STAGE_COLORS } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

/** Deterministic PRNG so the force layout is reproducible across renders. */
export function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export interface NodePosition {
  id: string;
  x: number;
  y: number;
}

/** Small seeded force simulation: repulsion + spring edges, fixed rounds. */
export function forceLayout(
  nodeIds: string[],
  edges: [string, string][],
  width: number,
  height: number,
  seed = 42,
): NodePosition[] {
  const rand = mulberry32(seed);
  const pos = new Map(
    nodeIds.map((id) => [id, { x: rand() * width, y: rand() * height }]),
  );
  const spring = 0.02;
  const repel = 2500;
  for (let round = 0; round < 150; round++) {
    const force = new Map(nodeIds.map((id) => [id, { x: 0, y: 0 }]));
    for (let i = 0; i < nodeIds.length; i++) {
      for (let j = i + 1; j < nodeIds.length; j++) {
        const a = pos.get(nodeIds[i])!;
        const b = pos.get(nodeIds[j])!;
        const dx = a.x - b.x;
        const dy = a.y - b.y;
        const d2 = Math.max(dx * dx + dy * dy, 1);
        const push = repel / d2;
        const d = Math.sqrt(d2);
        force.get(nodeIds[i])!.x += (dx / d) * push;
        force.get(nodeIds[i])!.y += (dy / d) * push;
        force.get(nodeIds[j])!.x -= (dx / d) * push;
        force.get(nodeIds[j])!.y -= (dy / d) * push;
      }
    }
    for (const [from, to] of edges) {
      const a = pos.get(from);
      const b = pos.get(to);
      if (!a || !b) continue;
      const dx = b.x - a.x;
      const dy = b.y - a.y;
      force.get(from)!.x += dx * spring;
      force.get(from)!.y += dy * spring;
      force.get(to)!.x -= dx * spring;
      force.get(to)!.y -= dy * spring;
    }
    for (const id of nodeIds) {
      const p = pos.get(id)!;
      const f = force.get(id)!;
      p.x = Math.min(Math.max(p.x + f.x * 0.5, 30), width - 30);
      p.y = Math.min(Math.max(p.y + f.y * 0.5, 30), height - 30);
    }
  }
  return nodeIds.map((id) => ({ id, ...pos.get(id)! }));
}

export class OverviewView {
  constructor(
    private readonly root: HTMLElement,
    private readonly store: AppStore,
  ) {}

  render(): void {
    const { workflow, graph } = this.store;
    this.root.replaceChildren();
    if (!workflow || !graph) return;

    const performed = this.store.performedStepIds();
    const flow = document.createElement("div");
    flow.className = "workflow-flow";
    for (const step of workflow.steps) {
      const box = document.createElement("button");
      box.className = "step-box";
      box.dataset.step = step.id;
      box.style.background = STAGE_COLORS[step.stage];
      box.classList.toggle("performed", performed.has(step.id));
      box.classList.toggle("dimmed", !performed.has(step.id));
      box.textContent = `${step.id} ${step.name}`;
      box.title = step.description;
      flow.appendChild(box);
    }
    this.root.appendChild(flow);

    this.root.appendChild(this.renderNetwork());
  }

  private renderNetwork(): SVGSVGElement {
    const graph = this.store.graph!;
    const width = 520;
    const height = 300;
    const svg = document.createElementNS(SVG_NS, "svg");
    svg.setAttribute("class", "graph-network");
    svg.setAttribute("viewBox", `0 0 ${width} ${height}`);

    const nodeIds = graph.tools.map((t) => t.id);
    const edges = graph.links.map((l) => [l.source, l.target] as [string, string]);
    const positions = new Map(
      forceLayout(nodeIds, edges, width, height).map((p) => [p.id, p]),
    );

    const performedLinks = this.performedLinkIds();
    for (const link of graph.links) {
      const a = positions.get(link.source);
      const b = positions.get(link.target);
      if (!a || !b) continue;
      const line = document.createElementNS(SVG_NS, "line");
      line.setAttribute("x1", String(a.x));
      line.setAttribute("y1", String(a.y));
      line.setAttribute("x2", String(b.x));
      line.setAttribute("y2", String(b.y));
      line.setAttribute("class", link.kind === "dataflow" ? "link-data" : "link-activation");
      if (performedLinks.has(link.id)) line.classList.add("performed");
      line.dataset.link = link.id;
      svg.appendChild(line);
    }

    for (const tool of graph.tools) {
      const p = positions.get(tool.id)!;
      const group = document.createElementNS(SVG_NS, "g");
      group.dataset.tool = tool.id;
      const circle = document.createElementNS(SVG_NS, "circle");
      circle.setAttribute("cx", String(p.x));
      circle.setAttribute("cy", String(p.y));
      circle.setAttribute("r", "14");
      circle.setAttribute("class", "tool-node");
      const label = document.createElementNS(SVG_NS, "text");
      label.setAttribute("x", String(p.x));
      label.setAttribute("y", String(p.y - 18));
      label.setAttribute("text-anchor", "middle");
      label.textContent = tool.id;
      group.append(circle, label);
      group.addEventListener("mouseenter", () => this.showTooltip(tool.id, p.x, p.y));
      group.addEventListener("mouseleave", () => this.hideTooltip());
      svg.appendChild(group);
    }
    return svg;
  }

  private performedLinkIds(): Set<string> {
    const out = new Set<string>();
    for (const record of this.store.session?.records ?? []) {
      for (const transfer of record.transfers) out.add(transfer.link);
    }
    return out;
  }

  /** Toolset membership and usage steps for the hovered tool node. */
  tooltipText(toolId: string): string {
    const graph = this.store.graph!;
    const memberOf = graph.toolsets.filter((ts) => ts.members.includes(toolId));
    const lines: string[] = [];
    for (const toolset of memberOf) {
      const steps = graph.bindings
        .filter((b) => b.toolset === toolset.id)
        .map((b) => b.step);
      lines.push(
        `${toolset.id}: ${toolset.members.join(", ")} (steps ${steps.join(", ") || "-"})`,
      );
    }
    return lines.join("\n") || "not part of any toolset";
  }

  private showTooltip(toolId: string, x: number, y: number): void {
    this.hideTooltip();
    const tip = document.createElement("div");
    tip.className = "tooltip";
    tip.id = "graph-tooltip";
    tip.textContent = this.tooltipText(toolId);
    tip.style.left = `${x}px`;
    tip.style.top = `${y}px`;
    this.root.appendChild(tip);
  }

  private hideTooltip(): void {
    this.root.querySelector("#graph-tooltip")?.remove();
  }
}
