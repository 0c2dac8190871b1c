// Wire shapes of the orchestration service (/api/v1).

export type StageName = "preparation" | "analysis" | "summarization";

export interface WorkflowStepDoc {
  id: string;
  name: string;
  stage: StageName;
  description: string;
  expectedToolset?: string;
}

export interface WorkflowDoc {
  steps: WorkflowStepDoc[];
  transitions: [string, string][];
  start: string[];
}

export interface ChannelDecl {
  name: string;
  format: string;
}

export interface ToolDoc {
  id: string;
  name: string;
  launch: { command: string[] };
  inputChannels: ChannelDecl[];
  outputChannels: ChannelDecl[];
}

export interface ToolsetDoc {
  id: string;
  members: string[];
}

export interface LinkDataDoc {
  sourceChannel: string;
  targetChannel: string;
  pipeline: string;
}

export type LinkKind = "activation" | "dataflow";

export interface LinkDoc {
  id: string;
  source: string;
  target: string;
  kind: LinkKind;
  data?: LinkDataDoc;
}

export interface BindingDoc {
  step: string;
  toolset: string;
  layout: string | null;
}

export interface DataSourceDoc {
  id: string;
  tool: string;
  channel: string;
}

export interface PipelineDoc {
  id: string;
  steps: Record<string, unknown>[];
}

export interface LayoutDoc {
  id: string;
  step: string;
  toolset: string;
  template: string;
  regions?: number[][];
  slots: string[];
}

export interface GraphDoc {
  tools: ToolDoc[];
  toolsets: ToolsetDoc[];
  links: LinkDoc[];
  bindings: BindingDoc[];
  dataSources: DataSourceDoc[];
  pipelines: PipelineDoc[];
  layouts: LayoutDoc[];
}

export interface NoteDoc {
  at: number;
  text: string;
}

export interface CaptureDoc {
  id: string;
  label: string;
  image: string;
  tool: string | null;
  at: number;
  supersededBy: string | null;
  removed: boolean;
}

export interface TransferDoc {
  link: string;
  in: string;
  out: string;
  at: number;
  seq: number;
  inHash: string;
  outHash: string;
}

export type StatusName = "pending" | "done" | "paused" | "canceled";

export interface RecordDoc {
  seq: number;
  step: string;
  enteredAt: number;
  status: StatusName;
  notes: NoteDoc[];
  captures: CaptureDoc[];
  transfers: TransferDoc[];
}

export interface SessionDoc {
  currentSeq: number | null;
  records: RecordDoc[];
}

export interface ResultGroupDoc {
  seq: number;
  step: string;
  captures: CaptureDoc[];
}

export interface EventDoc {
  seq: number;
  kind: string;
  payload: Record<string, unknown>;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  findings?: { code: string; subject: string; message: string }[];
}

export const STAGE_COLORS: Record<StageName, string> = {
  preparation: "#4c9fd6",
  analysis: "#d6874c",
  summarization: "#6fbf6f",
};
