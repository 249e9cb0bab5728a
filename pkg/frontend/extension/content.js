"use strict";
(() => {
  // src/types.ts
  var ASSIST_TAG_ATTR = "data-insitu-plan";
  var UI_ATTR = "data-insitu-ui";

  // src/capture.ts
  var FOCUSABLE_TAGS = /* @__PURE__ */ new Set(["button", "input", "select", "textarea"]);
  function directText(el) {
    let out = "";
    for (const child of Array.from(el.childNodes)) {
      if (child.nodeType === 3) {
        out += child.textContent ?? "";
      }
    }
    return out.replace(/\s+/g, " ").trim();
  }
  function bboxOf(el) {
    const r = el.getBoundingClientRect();
    if (r.width === 0 && r.height === 0 && r.x === 0 && r.y === 0) {
      return null;
    }
    return { x: r.x, y: r.y, w: r.width, h: r.height };
  }
  function isDisabled(el) {
    return el.disabled === true || el.getAttribute("aria-disabled") === "true";
  }
  function flagsOf(el, view) {
    const flags = [];
    const style = view.getComputedStyle(el);
    const rect = el.getBoundingClientRect();
    if (style.display !== "none" && style.visibility !== "hidden" && rect.width > 0 && rect.height > 0) {
      flags.push("visible");
    }
    if (el.onclick != null || el.hasAttribute("onclick")) {
      flags.push("clickable_handler");
    }
    if (style.cursor === "pointer") {
      flags.push("pointer_cursor");
    }
    const tag = el.tagName.toLowerCase();
    const tabindex = el.getAttribute("tabindex");
    const focusable = FOCUSABLE_TAGS.has(tag) || tag === "a" && el.hasAttribute("href") || tabindex !== null && Number(tabindex) >= 0;
    if (focusable && !isDisabled(el)) {
      flags.push("focusable");
    }
    if (isDisabled(el)) {
      flags.push("disabled");
    }
    return flags;
  }
  function attrsOf(el) {
    const attrs = {};
    for (const name of el.getAttributeNames()) {
      attrs[name] = el.getAttribute(name) ?? "";
    }
    return attrs;
  }
  function capture(doc) {
    const view = doc.defaultView;
    if (!view) {
      throw new Error("document has no window; capture must run in a page");
    }
    const nodes = [];
    const liveNodes = /* @__PURE__ */ new Map();
    const notices = [];
    const walk = (el) => {
      const id = nodes.length;
      const node = {
        id,
        tag: el.tagName.toLowerCase(),
        text: directText(el),
        attrs: attrsOf(el),
        children: [],
        bbox: bboxOf(el),
        flags: flagsOf(el, view)
      };
      nodes.push(node);
      liveNodes.set(id, el);
      for (const child of Array.from(el.children)) {
        if (child.hasAttribute(UI_ATTR)) {
          continue;
        }
        if (child.tagName.toLowerCase() === "iframe") {
          let reachable = false;
          try {
            reachable = child.contentDocument != null;
          } catch {
            reachable = false;
          }
          if (!reachable) {
            notices.push("skipped cross-origin frame");
            continue;
          }
        }
        node.children.push(walk(child));
      }
      return id;
    };
    walk(doc.documentElement);
    return {
      doc: {
        url: view.location.href,
        title: doc.title,
        captured_at: (/* @__PURE__ */ new Date()).toISOString(),
        nodes
      },
      liveNodes,
      notices
    };
  }

  // src/client.ts
  var EngineError = class extends Error {
    constructor(status, message) {
      super(message);
      this.status = status;
    }
  };
  var EngineClient = class {
    constructor(baseUrl, fetchImpl = fetch) {
      this.baseUrl = baseUrl;
      this.fetchImpl = fetchImpl;
      this.baseUrl = baseUrl.replace(/\/$/, "");
    }
    async call(method, path, body) {
      const resp = await this.fetchImpl(`${this.baseUrl}${path}`, {
        method,
        headers: body === void 0 ? {} : { "content-type": "application/json" },
        body: body === void 0 ? void 0 : JSON.stringify(body)
      });
      const text = await resp.text();
      if (!resp.ok) {
        let detail = text;
        try {
          detail = JSON.parse(text).error ?? text;
        } catch {
        }
        throw new EngineError(resp.status, `${resp.status}: ${detail}`);
      }
      return JSON.parse(text);
    }
    initInterface(url, title, snapshot) {
      return this.call("POST", "/v1/interfaces", { url, title, snapshot });
    }
    interfaceStatus(interfaceId) {
      return this.call("GET", `/v1/interfaces/${interfaceId}`);
    }
    assist(req) {
      return this.call("POST", "/v1/assist", req);
    }
    feedback(caseId, rating) {
      return this.call("POST", "/v1/feedback", { case_id: caseId, rating });
    }
    exportHandbook(interfaceId) {
      return this.call("GET", `/v1/interfaces/${interfaceId}/handbook`);
    }
    /** Poll until the interface build leaves the "building" state. */
    async waitReady(interfaceId, timeoutMs = 3e4) {
      const deadline = Date.now() + timeoutMs;
      for (; ; ) {
        const status = await this.interfaceStatus(interfaceId);
        if (status.status !== "building" && status.status !== "pending") {
          return status;
        }
        if (Date.now() > deadline) {
          throw new EngineError(0, "interface build timed out");
        }
        await new Promise((r) => setTimeout(r, 200));
      }
    }
  };

  // src/interpreter.ts
  var StaleTargetError = class extends Error {
  };
  function parseStyle(style) {
    const out = /* @__PURE__ */ new Map();
    for (const part of style.split(";")) {
      const i = part.indexOf(":");
      if (i >= 0) {
        out.set(part.slice(0, i).trim(), part.slice(i + 1).trim());
      }
    }
    return out;
  }
  function formatStyle(styles) {
    return Array.from(styles, ([k, v]) => `${k}:${v}`).join(";");
  }
  function materialize(doc, spec, tagValue) {
    const el = doc.createElement(spec.tag);
    for (const [name, value] of Object.entries(spec.attrs ?? {})) {
      el.setAttribute(name, value);
    }
    const style = spec.style ?? {};
    if (Object.keys(style).length > 0) {
      el.setAttribute(
        "style",
        formatStyle(new Map(Object.entries(style)))
      );
    }
    if (spec.offset) {
      const styles = parseStyle(el.getAttribute("style") ?? "");
      styles.set("left", `${spec.offset.dx}px`);
      styles.set("top", `${spec.offset.dy}px`);
      el.setAttribute("style", formatStyle(styles));
    }
    if (spec.text) {
      el.textContent = spec.text;
    }
    el.setAttribute(ASSIST_TAG_ATTR, tagValue);
    for (const child of spec.children ?? []) {
      el.appendChild(materialize(doc, child, tagValue));
    }
    return el;
  }
  function elementIndex(parent, el) {
    return Array.prototype.indexOf.call(parent.children, el);
  }
  function liveTarget(liveNodes, id) {
    const el = id === null ? void 0 : liveNodes.get(id);
    if (!el || !el.isConnected) {
      throw new StaleTargetError(
        `node ${id} is no longer present on the page; refresh the snapshot`
      );
    }
    return el;
  }
  function insertAt(parent, el, position) {
    parent.insertBefore(el, parent.children[position] ?? null);
  }
  function placementOf(doc, spec, anchor) {
    const placement = spec.placement ?? "append_child";
    if (placement === "floating_anchor" || anchor === null) {
      return { parent: doc.body, position: doc.body.children.length };
    }
    if (placement === "append_child") {
      return { parent: anchor, position: anchor.children.length };
    }
    const parent = anchor.parentElement;
    if (!parent) {
      throw new StaleTargetError("anchor has no parent");
    }
    let position = elementIndex(parent, anchor);
    if (placement === "adjacent_after") {
      position += 1;
    }
    return { parent, position };
  }
  function setTag(el, tagValue) {
    const old = el.getAttribute(ASSIST_TAG_ATTR);
    el.setAttribute(ASSIST_TAG_ATTR, tagValue);
    return old;
  }
  function restoreTag(el, old) {
    if (old === null) {
      el.removeAttribute(ASSIST_TAG_ATTR);
    } else {
      el.setAttribute(ASSIST_TAG_ATTR, old);
    }
  }
  function restoreAttr(el, name, value) {
    if (value === null || value === void 0) {
      el.removeAttribute(name);
    } else {
      el.setAttribute(name, value);
    }
  }
  function applyPlan(doc, plan, liveNodes) {
    const undoStack = [];
    const touched = [];
    const createdBySeq = /* @__PURE__ */ new Map();
    const resolveParent = (ref) => {
      if (typeof ref === "string" && ref.startsWith("created:")) {
        const el = createdBySeq.get(Number(ref.slice("created:".length)));
        if (!el) {
          throw new StaleTargetError(`unresolved container reference ${ref}`);
        }
        return el;
      }
      return liveTarget(liveNodes, ref);
    };
    const run = (op) => {
      const tagValue = `${plan.plan_id}:${op.seq}`;
      switch (op.kind) {
        case "create_node":
        case "anchor_overlay":
        case "mount_widget": {
          const spec = op.payload.spec;
          const anchor = op.target === null ? null : liveTarget(liveNodes, op.target);
          const { parent, position } = placementOf(doc, spec, anchor);
          const el = materialize(doc, spec, tagValue);
          insertAt(parent, el, position);
          createdBySeq.set(op.seq, el);
          touched.push(el);
          undoStack.push(() => el.remove());
          break;
        }
        case "set_text": {
          const el = liveTarget(liveNodes, op.target);
          const tagOld = setTag(el, tagValue);
          const oldChildren = Array.from(el.childNodes);
          el.textContent = String(op.payload.new);
          touched.push(el);
          undoStack.push(() => {
            el.textContent = "";
            for (const child of oldChildren) {
              el.appendChild(child);
            }
            restoreTag(el, tagOld);
          });
          break;
        }
        case "set_style": {
          const el = liveTarget(liveNodes, op.target);
          const tagOld = setTag(el, tagValue);
          const rawOld = el.getAttribute("style");
          const styles = parseStyle(rawOld ?? "");
          for (const [prop, change] of Object.entries(
            op.payload.properties
          )) {
            styles.set(prop, change.new);
          }
          el.setAttribute("style", formatStyle(styles));
          touched.push(el);
          undoStack.push(() => {
            restoreAttr(el, "style", rawOld);
            restoreTag(el, tagOld);
          });
          break;
        }
        case "set_attribute": {
          const el = liveTarget(liveNodes, op.target);
          const tagOld = setTag(el, tagValue);
          const name = op.payload.name;
          const old = el.getAttribute(name);
          restoreAttr(el, name, op.payload.new ?? null);
          touched.push(el);
          undoStack.push(() => {
            restoreAttr(el, name, old);
            restoreTag(el, tagOld);
          });
          break;
        }
        case "move_node": {
          const el = liveTarget(liveNodes, op.target);
          const tagOld = setTag(el, tagValue);
          const oldParent = el.parentElement;
          if (!oldParent) {
            throw new StaleTargetError(`node ${op.target} has no parent`);
          }
          const oldPosition = elementIndex(oldParent, el);
          const newParent = resolveParent(op.payload.new_parent);
          el.remove();
          insertAt(newParent, el, op.payload.new_position);
          touched.push(el);
          undoStack.push(() => {
            el.remove();
            insertAt(oldParent, el, oldPosition);
            restoreTag(el, tagOld);
          });
          break;
        }
        default:
          throw new Error(`unknown op kind ${op.kind}`);
      }
    };
    for (const op of plan.ops) {
      run(op);
    }
    const applied = {
      planId: plan.plan_id,
      status: "applied",
      touched,
      undo: () => {
        if (applied.status === "reverted") {
          return;
        }
        for (let i = undoStack.length - 1; i >= 0; i--) {
          undoStack[i]();
        }
        applied.status = "reverted";
      }
    };
    return applied;
  }
  function serializeSubtree(el) {
    const attrs = [];
    for (const name of el.getAttributeNames().sort()) {
      if (name === ASSIST_TAG_ATTR) {
        continue;
      }
      attrs.push([name, el.getAttribute(name) ?? ""]);
    }
    let text = "";
    for (const child of Array.from(el.childNodes)) {
      if (child.nodeType === 3) {
        text += child.textContent ?? "";
      }
    }
    const children = Array.from(el.children).map(serializeSubtree);
    return JSON.stringify([
      el.tagName.toLowerCase(),
      text.replace(/\s+/g, " ").trim(),
      attrs,
      children
    ]);
  }

  // src/panel.ts
  var PANEL_CSS = `
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
  var PREVIEW_OUTLINE = "2px dashed #c2571a";
  var Panel = class {
    constructor(doc, client) {
      this.snapshot = null;
      this.interfaceId = null;
      this.picks = [];
      this.picking = false;
      this.rows = [];
      this.ratedCases = /* @__PURE__ */ new Set();
      this.pendingFeedback = [];
      this.lastRequest = null;
      this.onPageClick = (ev) => {
        if (!this.picking || !this.snapshot) {
          return;
        }
        const target = ev.target;
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
      this.doc = doc;
      this.client = client;
      this.host = doc.createElement("div");
      this.host.setAttribute(UI_ATTR, "panel");
      this.root = this.host.attachShadow({ mode: "open" });
      doc.body.appendChild(this.host);
      doc.addEventListener("click", this.onPageClick, true);
      this.render();
    }
    async connect() {
      this.snapshot = capture(this.doc);
      const { interface_id } = await this.client.initInterface(
        this.snapshot.doc.url,
        this.snapshot.doc.title,
        this.snapshot.doc
      );
      await this.client.waitReady(interface_id);
      this.interfaceId = interface_id;
      this.render();
    }
    /** Describe a picked element the way the engine will list it. */
    pickLabel(index) {
      const node = this.snapshot?.doc.nodes.find((n) => n.id === index);
      if (!node) {
        return `#${index}`;
      }
      const label = node.attrs["aria-label"] || node.text || node.attrs["title"] || node.tag;
      return `[${node.tag === "a" ? "link" : node.tag}] ${label}`;
    }
    async requestAssistance(challenge) {
      if (!challenge.trim()) {
        this.renderError("Describe your challenge first.");
        return;
      }
      const attempt = async () => {
        this.snapshot = capture(this.doc);
        if (!this.interfaceId) {
          await this.connect();
        }
        const resp = await this.client.assist({
          interface_id: this.interfaceId,
          challenge,
          snapshot: this.snapshot.doc,
          selected_elements: this.picks.length ? this.picks : void 0,
          session_id: this.sessionId
        });
        this.sessionId = resp.session_id;
        this.undoAll();
        this.rows = resp.candidates.map((candidate) => ({
          candidate,
          applied: null,
          preview: false
        }));
        this.render();
      };
      this.lastRequest = attempt;
      try {
        await attempt();
      } catch (err) {
        this.renderError(`Engine unreachable: ${err.message}`, true);
      }
    }
    applyRow(row, preview) {
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
          el.style.outline = PREVIEW_OUTLINE;
        }
      }
      this.render();
    }
    undoRow(row) {
      if (!row.applied || row.applied.status === "reverted") {
        return;
      }
      if (row.preview) {
        for (const el of row.applied.touched) {
          el.style.outline = "";
        }
      }
      row.applied.undo();
      row.preview = false;
      this.render();
    }
    undoAll() {
      for (const row of this.rows) {
        this.undoRow(row);
      }
    }
    async sendFeedback(caseId, rating) {
      if (this.ratedCases.has(caseId)) {
        return;
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
    async flushFeedbackQueue() {
      while (this.pendingFeedback.length > 0) {
        const item = this.pendingFeedback[0];
        await this.client.feedback(item.caseId, item.rating);
        this.pendingFeedback.shift();
      }
    }
    renderError(message, retry = false) {
      this.render();
      const box = this.doc.createElement("div");
      box.className = "error";
      box.textContent = message;
      if (retry && this.lastRequest) {
        const btn = this.doc.createElement("button");
        btn.textContent = "Retry";
        btn.addEventListener("click", () => {
          void this.lastRequest?.().catch(
            (err) => this.renderError(`Engine unreachable: ${err.message}`, true)
          );
        });
        box.appendChild(this.doc.createTextNode(" "));
        box.appendChild(btn);
      }
      this.root.querySelector(".panel")?.appendChild(box);
    }
    render() {
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
      pick.textContent = this.picking ? "Picking\u2026" : "Pick element";
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
        picks.textContent = "About: " + this.picks.map((p) => this.pickLabel(p)).join(", ");
        panel.appendChild(picks);
      }
      for (const rowState of this.rows) {
        panel.appendChild(this.renderCandidate(rowState));
      }
      this.root.appendChild(panel);
    }
    renderCandidate(row) {
      const doc = this.doc;
      const box = doc.createElement("div");
      box.className = "candidate";
      const badge = doc.createElement("span");
      badge.className = "badge";
      badge.textContent = row.candidate.case.subtype;
      box.appendChild(badge);
      const score = doc.createElement("span");
      score.className = "score";
      score.textContent = row.candidate.score === null ? "generated" : `score ${row.candidate.score.toFixed(2)}`;
      box.appendChild(score);
      const text = doc.createElement("div");
      text.className = "assist-text";
      text.textContent = row.candidate.case.assistance;
      box.appendChild(text);
      const controls = doc.createElement("div");
      controls.className = "row";
      const active = row.applied !== null && row.applied.status !== "reverted";
      const previewBtn = doc.createElement("button");
      previewBtn.textContent = active && row.preview ? "End preview" : "Preview";
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
      up.addEventListener(
        "click",
        () => void this.sendFeedback(row.candidate.case.case_id, 1)
      );
      const down = doc.createElement("button");
      down.textContent = "\u{1F44E}";
      down.disabled = this.ratedCases.has(row.candidate.case.case_id);
      down.addEventListener(
        "click",
        () => void this.sendFeedback(row.candidate.case.case_id, -1)
      );
      for (const btn of [previewBtn, applyBtn, undoBtn, up, down]) {
        controls.appendChild(btn);
      }
      box.appendChild(controls);
      return box;
    }
  };
  function mountPanel(doc, engineUrl) {
    return new Panel(doc, new EngineClient(engineUrl));
  }

  // src/index.ts
  function bootstrap(win) {
    if (win.__insituPanel) {
      return win.__insituPanel;
    }
    const url = win.INSITU_ENGINE_URL ?? "http://127.0.0.1:8321";
    const panel = mountPanel(win.document, url);
    win.__insituPanel = panel;
    void panel.connect().catch(() => {
    });
    return panel;
  }
  if (typeof window !== "undefined" && typeof process === "undefined") {
    bootstrap(window);
  }
})();
