/** Delivery-plan interpreter for the live page.
 *
 * Mirrors the engine's snapshot simulator: operations only ever create,
 * mutate, or move nodes; every touched node is stamped with the assistance
 * tag (data-insitu-plan = "<plan_id>:<seq>") and undo walks a recorded
 * inverse stack, so apply + undo restores the page subtree exactly
 * (ignoring the tag attribute itself, which undo removes anyway).
 */

import { ASSIST_TAG_ATTR, NodeSpecWire, PlanOp, PlanWire } from "./types";

export class StaleTargetError extends Error {}

export type PlanStatus = "previewed" | "applied" | "reverted";

export interface AppliedPlan {
  planId: string;
  status: PlanStatus;
  /** Elements this plan created or mutated, for preview highlighting. */
  touched: Element[];
  undo: () => void;
}

function parseStyle(style: string): Map<string, string> {
  const out = new Map<string, string>();
  for (const part of style.split(";")) {
    const i = part.indexOf(":");
    if (i >= 0) {
      out.set(part.slice(0, i).trim(), part.slice(i + 1).trim());
    }
  }
  return out;
}

function formatStyle(styles: Map<string, string>): string {
  return Array.from(styles, ([k, v]) => `${k}:${v}`).join(";");
}

function materialize(
  doc: Document,
  spec: NodeSpecWire,
  tagValue: string,
): Element {
  const el = doc.createElement(spec.tag);
  for (const [name, value] of Object.entries(spec.attrs ?? {})) {
    el.setAttribute(name, value);
  }
  const style = spec.style ?? {};
  if (Object.keys(style).length > 0) {
    el.setAttribute(
      "style",
      formatStyle(new Map(Object.entries(style))),
    );
  }
  if (spec.offset) {
    // Overlay positioning carries the engine-computed page coordinates.
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

function elementIndex(parent: Element, el: Element): number {
  return Array.prototype.indexOf.call(parent.children, el);
}

function liveTarget(
  liveNodes: Map<number, Element>,
  id: number | null,
): Element {
  const el = id === null ? undefined : liveNodes.get(id);
  if (!el || !el.isConnected) {
    throw new StaleTargetError(
      `node ${id} is no longer present on the page; refresh the snapshot`,
    );
  }
  return el;
}

function insertAt(parent: Element, el: Element, position: number): void {
  parent.insertBefore(el, parent.children[position] ?? null);
}

/** Resolve where a created node goes, mirroring the engine's placement
 * semantics: floating overlays and widgets mount on <body>. */
function placementOf(
  doc: Document,
  spec: NodeSpecWire,
  anchor: Element | null,
): { parent: Element; position: number } {
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

function setTag(el: Element, tagValue: string): string | null {
  const old = el.getAttribute(ASSIST_TAG_ATTR);
  el.setAttribute(ASSIST_TAG_ATTR, tagValue);
  return old;
}

function restoreTag(el: Element, old: string | null): void {
  if (old === null) {
    el.removeAttribute(ASSIST_TAG_ATTR);
  } else {
    el.setAttribute(ASSIST_TAG_ATTR, old);
  }
}

function restoreAttr(el: Element, name: string, value: string | null): void {
  if (value === null || value === undefined) {
    el.removeAttribute(name);
  } else {
    el.setAttribute(name, value);
  }
}

export function applyPlan(
  doc: Document,
  plan: PlanWire,
  liveNodes: Map<number, Element>,
): AppliedPlan {
  const undoStack: Array<() => void> = [];
  const touched: Element[] = [];
  const createdBySeq = new Map<number, Element>();

  const resolveParent = (ref: number | string): Element => {
    if (typeof ref === "string" && ref.startsWith("created:")) {
      const el = createdBySeq.get(Number(ref.slice("created:".length)));
      if (!el) {
        throw new StaleTargetError(`unresolved container reference ${ref}`);
      }
      return el;
    }
    return liveTarget(liveNodes, ref as number);
  };

  const run = (op: PlanOp): void => {
    const tagValue = `${plan.plan_id}:${op.seq}`;
    switch (op.kind) {
      case "create_node":
      case "anchor_overlay":
      case "mount_widget": {
        const spec = op.payload.spec as NodeSpecWire;
        const anchor =
          op.target === null ? null : liveTarget(liveNodes, op.target);
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
        // Keep the original child nodes so undo restores structure, not just
        // a flattened text rendering of it.
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
          op.payload.properties as Record<string, { old: unknown; new: string }>,
        )) {
          styles.set(prop, change.new);
        }
        el.setAttribute("style", formatStyle(styles));
        touched.push(el);
        undoStack.push(() => {
          // Restore the raw attribute verbatim so serialization round-trips.
          restoreAttr(el, "style", rawOld);
          restoreTag(el, tagOld);
        });
        break;
      }
      case "set_attribute": {
        const el = liveTarget(liveNodes, op.target);
        const tagOld = setTag(el, tagValue);
        const name = op.payload.name as string;
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
        insertAt(newParent, el, op.payload.new_position as number);
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

  const applied: AppliedPlan = {
    planId: plan.plan_id,
    status: "applied",
    touched,
    undo: () => {
      if (applied.status === "reverted") {
        return; // idempotent
      }
      for (let i = undoStack.length - 1; i >= 0; i--) {
        undoStack[i]();
      }
      applied.status = "reverted";
    },
  };
  return applied;
}

/** Canonical serialization of an element subtree, with the assistance tag
 * attribute excluded so pre/post comparisons ignore bookkeeping. */
export function serializeSubtree(el: Element): string {
  const attrs: Array<[string, string]> = [];
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
    children,
  ]);
}
