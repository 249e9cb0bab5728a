/** Floating assistant panel.
 *
 * Rendered inside a shadow root on a host element marked with the UI
 * attribute, so page styles cannot leak in, panel styles cannot leak out,
 * and capture() never snapshots the panel itself.
 */

import { capture } from "./capture";
import { EngineClient } from "./client";
import { AppliedPlan, applyPlan } from "./interpreter";
import {
  AssistResponse,
  CandidateWire,
  CapturedSnapshot,
  UI_ATTR,
} from "./types";

const PANEL_CSS = `
:host { all: initial; }
.panel {
  position: fixed; top: 16px; right: 16px; width: 320px; z-index: 2147483647;
  background: #fff; color: #1a1a2e; border: 1px solid #c5c9d4;
  border-radius: 8px; box-shadow: 0 4px 18px rgba(20, 24, 40, 0.25);
  font: 13px/1.45 system-ui, sans-serif; padding: 10px;
}
.panel h2 { margin: 0 0 6px; font-size: 14px; }
.row { display: flex; gap: 6px; margin-bottom: 6px; }
textarea {
  width: 100%; box-sizing: border-box; min-height: 44px; resize: vertical;
  font: inherit; border: 1px solid #c5c9d4; border-radius: 4px; padding: 4px;
}
button {
  font: inherit; border: 1px solid #8892aa; border-radius: 4px;
  background: #f2f4f9; padding: 3px 8px; cursor: pointer;
}
button.primary { background: #32406b; color: #fff; border-color: #32406b; }
button[disabled] { opacity: 0.5; cursor: default; }
.picks { font-size: 12px; color: #444; margin-bottom: 4px; }
.error { color: #a4262c; margin: 4px 0; }
.candidate {
  border: 1px solid #dde; border-radius: 6px; padding: 6px; margin-top: 6px;
}
.badge {
  display: inline-block; font-size: 11px; padding: 1px 6px;
  border-radius: 9px; background: #e3e8f5; color: #32406b; margin-right: 6px;
}
.score { font-size: 11px; color: #667; }
.assist-text { margin: 4px 0; }
.picking { outline: 2px dashed #32406b; outline-offset: 1px; }
`;

const PREVIEW_OUTLINE = "2px dashed #c2571a";

interface CandidateRow {
  candidate: CandidateWire;
  applied: AppliedPlan | null;
  preview: boolean;
}

export class Panel {
  readonly host: HTMLElement;
  private root: ShadowRoot;
  private doc: Document;
  private client: EngineClient;
  private snapshot: CapturedSnapshot | null = null;
  private interfaceId: string | null = null;
  private sessionId: string | undefined;
  private picks: number[] = [];
  private picking = false;
  private rows: CandidateRow[] = [];
  private ratedCases = new Set<string>();
  private pendingFeedback: Array<{ caseId: string; rating: 1 | -1 }> = [];
  private lastRequest: (() => Promise<void>) | null = null;

  constructor(doc: Document, client: EngineClient) {
    this.doc = doc;
    this.client = client;
    this.host = doc.createElement("div");
    this.host.setAttribute(UI_ATTR, "panel");
    this.root = this.host.attachShadow({ mode: "open" });
    doc.body.appendChild(this.host);
    doc.addEventListener("click", this.onPageClick, true);
    this.render();
  }

  async connect(): Promise<void> {
    this.snapshot = capture(this.doc);
    const { interface_id } = await this.client.initInterface(
      this.snapshot.doc.url,
      this.snapshot.doc.title,
      this.snapshot.doc,
    );
    await this.client.waitReady(interface_id);
    this.interfaceId = interface_id;
    this.render();
  }

  /** Describe a picked element the way the engine will list it. */
  private pickLabel(index: number): string {
    const node = this.snapshot?.doc.nodes.find((n) => n.id === index);
    if (!node) {
      return `#${index}`;
    }
    const label =
      node.attrs["aria-label"] || node.text || node.attrs["title"] || node.tag;
    return `[${node.tag === "a" ? "link" : node.tag}] ${label}`;
  }

  private onPageClick = (ev: MouseEvent): void => {
    if (!this.picking || !this.snapshot) {
      return;
    }
    const target = ev.target as Element | null;
    if (!target || this.host.contains(target)) {
      return;
    }
    ev.preventDefault();
    ev.stopPropagation();
    for (const [id, el] of this.snapshot.liveNodes) {
      if (el === target) {
        if (!this.picks.includes(id)) {
          this.picks.push(id);
        }
        break;
      }
    }
    this.picking = false;
    this.doc.documentElement.classList.remove("picking");
    this.render();
  };

  private async requestAssistance(challenge: string): Promise<void> {
    if (!challenge.trim()) {
      this.renderError("Describe your challenge first.");
      return;
    }
    const attempt = async () => {
      this.snapshot = capture(this.doc);
      if (!this.interfaceId) {
        await this.connect();
      }
      const resp: AssistResponse = await this.client.assist({
        interface_id: this.interfaceId!,
        challenge,
        snapshot: this.snapshot.doc,
        selected_elements: this.picks.length ? this.picks : undefined,
        session_id: this.sessionId,
      });
      this.sessionId = resp.session_id;
      this.undoAll();
      this.rows = resp.candidates.map((candidate) => ({
        candidate,
        applied: null,
        preview: false,
      }));
      this.render();
    };
    this.lastRequest = attempt;
    try {
      await attempt();
    } catch (err) {
      this.renderError(`Engine unreachable: ${(err as Error).message}`, true);
    }
  }

  private applyRow(row: CandidateRow, preview: boolean): void {
    if (row.applied && row.applied.status !== "reverted") {
      return;
    }
    if (!this.snapshot) {
      return;
    }
    row.applied = applyPlan(this.doc, row.candidate.plan, this.snapshot.liveNodes);
    row.preview = preview;
    if (preview) {
      row.applied.status = "previewed";
      for (const el of row.applied.touched) {
        (el as HTMLElement).style.outline = PREVIEW_OUTLINE;
      }
    }
    this.render();
  }

  private undoRow(row: CandidateRow): void {
    if (!row.applied || row.applied.status === "reverted") {
      return;
    }
    if (row.preview) {
      for (const el of row.applied.touched) {
        (el as HTMLElement).style.outline = "";
      }
    }
    row.applied.undo();
    row.preview = false;
    this.render();
  }

  undoAll(): void {
    for (const row of this.rows) {
      this.undoRow(row);
    }
  }

  private async sendFeedback(caseId: string, rating: 1 | -1): Promise<void> {
    if (this.ratedCases.has(caseId)) {
      return; // one rating per case per session
    }
    this.ratedCases.add(caseId);
    try {
      await this.client.feedback(caseId, rating);
      await this.flushFeedbackQueue();
    } catch {
      this.pendingFeedback.push({ caseId, rating });
    }
    this.render();
  }

  async flushFeedbackQueue(): Promise<void> {
    while (this.pendingFeedback.length > 0) {
      const item = this.pendingFeedback[0];
      await this.client.feedback(item.caseId, item.rating);
      this.pendingFeedback.shift();
    }
  }

  private renderError(message: string, retry = false): void {
    this.render();
    const box = this.doc.createElement("div");
    box.className = "error";
    box.textContent = message;
    if (retry && this.lastRequest) {
      const btn = this.doc.createElement("button");
      btn.textContent = "Retry";
      btn.addEventListener("click", () => {
        void this.lastRequest?.().catch((err) =>
          this.renderError(`Engine unreachable: ${err.message}`, true),
        );
      });
      box.appendChild(this.doc.createTextNode(" "));
      box.appendChild(btn);
    }
    this.root.querySelector(".panel")?.appendChild(box);
  }

  private render(): void {
    const doc = this.doc;
    this.root.innerHTML = "";
    const style = doc.createElement("style");
    style.textContent = PANEL_CSS;
    this.root.appendChild(style);

    const panel = doc.createElement("div");
    panel.className = "panel";
    const title = doc.createElement("h2");
    title.textContent = "In-situ assistant";
    panel.appendChild(title);

    const input = doc.createElement("textarea");
    input.placeholder = "What are you trying to do?";
    panel.appendChild(input);

    const row = doc.createElement("div");
    row.className = "row";
    const ask = doc.createElement("button");
    ask.className = "primary";
    ask.textContent = "Get assistance";
    ask.addEventListener("click", () => {
      void this.requestAssistance(input.value);
    });
    const pick = doc.createElement("button");
    pick.textContent = this.picking ? "Picking…" : "Pick element";
    pick.addEventListener("click", () => {
      this.picking = !this.picking;
      this.render();
    });
    row.appendChild(ask);
    row.appendChild(pick);
    panel.appendChild(row);

    if (this.picks.length > 0) {
      const picks = doc.createElement("div");
      picks.className = "picks";
      picks.textContent =
        "About: " + this.picks.map((p) => this.pickLabel(p)).join(", ");
      panel.appendChild(picks);
    }

    for (const rowState of this.rows) {
      panel.appendChild(this.renderCandidate(rowState));
    }

    this.root.appendChild(panel);
  }

  private renderCandidate(row: CandidateRow): HTMLElement {
    const doc = this.doc;
    const box = doc.createElement("div");
    box.className = "candidate";

    const badge = doc.createElement("span");
    badge.className = "badge";
    badge.textContent = row.candidate.case.subtype;
    box.appendChild(badge);

    const score = doc.createElement("span");
    score.className = "score";
    score.textContent =
      row.candidate.score === null
        ? "generated"
        : `score ${row.candidate.score.toFixed(2)}`;
    box.appendChild(score);

    const text = doc.createElement("div");
    text.className = "assist-text";
    text.textContent = row.candidate.case.assistance;
    box.appendChild(text);

    const controls = doc.createElement("div");
    controls.className = "row";
    const active = row.applied !== null && row.applied.status !== "reverted";

    const previewBtn = doc.createElement("button");
    previewBtn.textContent =
      active && row.preview ? "End preview" : "Preview";
    previewBtn.disabled = active && !row.preview;
    previewBtn.addEventListener("click", () => {
      if (active && row.preview) {
        this.undoRow(row);
      } else {
        this.applyRow(row, true);
      }
    });

    const applyBtn = doc.createElement("button");
    applyBtn.textContent = "Apply";
    applyBtn.disabled = active && !row.preview;
    applyBtn.addEventListener("click", () => {
      if (row.preview) {
        this.undoRow(row);
      }
      this.applyRow(row, false);
    });

    const undoBtn = doc.createElement("button");
    undoBtn.textContent = "Undo";
    undoBtn.disabled = !active;
    undoBtn.addEventListener("click", () => this.undoRow(row));

    const up = doc.createElement("button");
    up.textContent = "\u{1F44D}";
    up.disabled = this.ratedCases.has(row.candidate.case.case_id);
    up.addEventListener("click", () =>
      void this.sendFeedback(row.candidate.case.case_id, 1),
    );
    const down = doc.createElement("button");
    down.textContent = "\u{1F44E}";
    down.disabled = this.ratedCases.has(row.candidate.case.case_id);
    down.addEventListener("click", () =>
      void this.sendFeedback(row.candidate.case.case_id, -1),
    );

    for (const btn of [previewBtn, applyBtn, undoBtn, up, down]) {
      controls.appendChild(btn);
    }
    box.appendChild(controls);
    return box;
  }
}

export function mountPanel(doc: Document, engineUrl: string): Panel {
  return new Panel(doc, new EngineClient(engineUrl));
}
