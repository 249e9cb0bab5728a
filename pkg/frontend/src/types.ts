/** Wire types shared with the engine's HTTP API. */

export interface BBox {
  x: number;
  y: number;
  w: number;
  h: number;
}

export type NodeFlag =
  | "visible"
  | "clickable_handler"
  | "pointer_cursor"
  | "focusable"
  | "disabled";

export interface SnapshotNode {
  id: number;
  tag: string;
  text: string;
  attrs: Record<string, string>;
  children: number[];
  bbox: BBox | null;
  flags: NodeFlag[];
}

export interface SnapshotDoc {
  url: string;
  title: string;
  captured_at: string;
  nodes: SnapshotNode[];
}

/** Result of a live-page capture: the wire document plus the mapping back to
 * the DOM elements each node id came from, and notices for skipped frames. */
export interface CapturedSnapshot {
  doc: SnapshotDoc;
  liveNodes: Map<number, Element>;
  notices: string[];
}

export interface NodeSpecWire {
  tag: string;
  text?: string;
  attrs?: Record<string, string>;
  style?: Record<string, string>;
  children?: NodeSpecWire[];
  placement?: string;
  offset?: { dx: number; dy: number } | null;
}

export interface PlanOp {
  kind: string;
  target: number | null;
  payload: Record<string, any>;
  seq: number;
}

export interface GroundedTargetWire {
  ui_description: string;
  element_index: number;
  node_id: number;
  similarity: number;
}

export interface PlanWire {
  plan_id: string;
  case_id: string;
  subtype: string;
  ops: PlanOp[];
  grounded: GroundedTargetWire[];
}

export interface CandidateWire {
  case: {
    case_id: string;
    assistance: string;
    rationale: string;
    subtype: string;
    targets: Array<{ ui_description: string }>;
    configuration: Record<string, unknown>;
    category: string;
    feedback: number;
    origin: string;
  };
  score: number | null;
  plan: PlanWire;
}

export interface AssistResponse {
  session_id: string;
  path: "retrieved" | "generated";
  candidates: CandidateWire[];
  timings: Record<string, number>;
}

export const ASSIST_TAG_ATTR = "data-insitu-plan";

/** Attribute marking the overlay's own chrome so capture never includes it. */
export const UI_ATTR = "data-insitu-ui";
