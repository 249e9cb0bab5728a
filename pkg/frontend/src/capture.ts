/** Live-DOM snapshot capture in the engine's wire schema.
 *
 * Walks the element tree in document order, assigning contiguous preorder
 * ids. Flags are computed from live computed styles and handler attributes,
 * which only page-context code can see; the engine derives everything else
 * (roles, labels, sections) from the captured fields.
 */

import {
  BBox,
  CapturedSnapshot,
  NodeFlag,
  SnapshotNode,
  UI_ATTR,
} from "./types";

const FOCUSABLE_TAGS = new Set(["button", "input", "select", "textarea"]);

function directText(el: Element): string {
  let out = "";
  for (const child of Array.from(el.childNodes)) {
    if (child.nodeType === 3 /* TEXT_NODE */) {
      out += child.textContent ?? "";
    }
  }
  return out.replace(/\s+/g, " ").trim();
}

function bboxOf(el: Element): BBox | null {
  const r = el.getBoundingClientRect();
  if (r.width === 0 && r.height === 0 && r.x === 0 && r.y === 0) {
    return null;
  }
  return { x: r.x, y: r.y, w: r.width, h: r.height };
}

function isDisabled(el: Element): boolean {
  return (
    (el as HTMLButtonElement).disabled === true ||
    el.getAttribute("aria-disabled") === "true"
  );
}

function flagsOf(el: Element, view: Window): NodeFlag[] {
  const flags: NodeFlag[] = [];
  const style = view.getComputedStyle(el);
  const rect = el.getBoundingClientRect();
  if (
    style.display !== "none" &&
    style.visibility !== "hidden" &&
    rect.width > 0 &&
    rect.height > 0
  ) {
    flags.push("visible");
  }
  if ((el as HTMLElement).onclick != null || el.hasAttribute("onclick")) {
    flags.push("clickable_handler");
  }
  if (style.cursor === "pointer") {
    flags.push("pointer_cursor");
  }
  const tag = el.tagName.toLowerCase();
  const tabindex = el.getAttribute("tabindex");
  const focusable =
    FOCUSABLE_TAGS.has(tag) ||
    (tag === "a" && el.hasAttribute("href")) ||
    (tabindex !== null && Number(tabindex) >= 0);
  if (focusable && !isDisabled(el)) {
    flags.push("focusable");
  }
  if (isDisabled(el)) {
    flags.push("disabled");
  }
  return flags;
}

function attrsOf(el: Element): Record<string, string> {
  const attrs: Record<string, string> = {};
  for (const name of el.getAttributeNames()) {
    attrs[name] = el.getAttribute(name) ?? "";
  }
  return attrs;
}

export function capture(doc: Document): CapturedSnapshot {
  const view = doc.defaultView;
  if (!view) {
    throw new Error("document has no window; capture must run in a page");
  }
  const nodes: SnapshotNode[] = [];
  const liveNodes = new Map<number, Element>();
  const notices: string[] = [];

  const walk = (el: Element): number => {
    const id = nodes.length;
    const node: SnapshotNode = {
      id,
      tag: el.tagName.toLowerCase(),
      text: directText(el),
      attrs: attrsOf(el),
      children: [],
      bbox: bboxOf(el),
      flags: flagsOf(el, view),
    };
    nodes.push(node);
    liveNodes.set(id, el);
    for (const child of Array.from(el.children)) {
      if (child.hasAttribute(UI_ATTR)) {
        continue; // never snapshot our own chrome
      }
      if (child.tagName.toLowerCase() === "iframe") {
        let reachable = false;
        try {
          reachable = (child as HTMLIFrameElement).contentDocument != null;
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
      captured_at: new Date().toISOString(),
      nodes,
    },
    liveNodes,
    notices,
  };
}
