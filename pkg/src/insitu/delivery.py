"""Declarative, invertible DOM delivery plans for all nine assistance subtypes.

A plan is a list of operations that only ever create, mutate, or move nodes;
nothing is deleted, so the original interface stays fully functional. Every
node a plan touches is stamped with the assistance tag attribute
(data-insitu-plan = "<plan_id>:<seq>"), which is what makes clean reversal
possible on both the snapshot simulator here and the live-page overlay.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from .dom_model import ASSIST_TAG_ATTR, DomNode, DomSnapshot
from .errors import CompileError, StaleTarget, UngroundedTarget

SUBTYPES = (
    "insert.overlay_tip",
    "insert.widget",
    "insert.inline_control",
    "mutate.style",
    "mutate.representation",
    "mutate.reframe",
    "recompose.reorder",
    "recompose.group",
    "recompose.layout",
)

OP_KINDS = (
    "create_node",
    "set_text",
    "set_style",
    "set_attribute",
    "move_node",
    "anchor_overlay",
    "mount_widget",
)
# Only ever appears in reversal records, undoing a create-like op.
REMOVE_KIND = "remove_node"

ALLOWED_STYLE_PROPERTIES = frozenset(
    {"color", "background", "border", "opacity", "outline", "font-size", "animation-pulse"}
)
MODALITY_SWITCHES = {
    ("text", "slider"): [("type", "range")],
    ("text", "color-picker"): [("type", "color")],
    ("number", "stepper"): [("type", "number"), ("step", "1")],
}
CONTROL_TYPES = frozenset({"search-input", "button", "toggle", "slider"})
WIDGET_ACTIONS = frozenset({"save_snapshot", "dismiss", "emit_event"})

OVERLAY_OFFSET_PX = 8.0  # default: tip sits just below the target bbox


@dataclass
class NodeSpec:
    tag: str
    text: str = ""
    attributes: dict[str, str] = field(default_factory=dict)
    style: dict[str, str] = field(default_factory=dict)
    children: list["NodeSpec"] = field(default_factory=list)
    placement: str = "append_child"
    offset: tuple[float, float] | None = None

    def to_dict(self) -> dict:
        doc: dict = {
            "tag": self.tag,
            "text": self.text,
            "attrs": dict(self.attributes),
            "style": dict(self.style),
            "children": [c.to_dict() for c in self.children],
            "placement": self.placement,
        }
        if self.offset is not None:
            doc["offset"] = {"dx": self.offset[0], "dy": self.offset[1]}
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "NodeSpec":
        offset = None
        if "offset" in doc and doc["offset"] is not None:
            offset = (float(doc["offset"]["dx"]), float(doc["offset"]["dy"]))
        return cls(
            tag=doc["tag"],
            text=doc.get("text", ""),
            attributes=dict(doc.get("attrs", {})),
            style=dict(doc.get("style", {})),
            children=[cls.from_dict(c) for c in doc.get("children", [])],
            placement=doc.get("placement", "append_child"),
            offset=offset,
        )


@dataclass
class DomOperation:
    op_kind: str
    target_node: int | None
    payload: dict
    seq: int


@dataclass
class DeliveryPlan:
    plan_id: str
    case_id: str
    subtype: str
    ops: list[DomOperation]
    grounded: list  # list of grounding.GroundedTarget


@dataclass
class ReversalRecord:
    plan_id: str
    inverse_ops: list[DomOperation]


@dataclass
class RevertResult:
    snapshot: DomSnapshot
    tampered: bool
    notes: list[str]


# ---------------------------------------------------------------------------
# Configuration validation


def _control_detail(configuration: dict) -> dict:
    # Generators emit either flat fields or a nested "detail" object.
    detail = configuration.get("detail")
    return detail if isinstance(detail, dict) else configuration


def _action_name(action: object) -> str:
    if isinstance(action, str):
        return action
    if isinstance(action, dict):
        return str(action.get("type", ""))
    return ""


def _style_properties(configuration: dict) -> dict:
    props = configuration.get("properties")
    if isinstance(props, dict):
        return props
    return {k: v for k, v in configuration.items() if k != "properties"}


def validate_config(
    subtype: str,
    configuration: object,
    *,
    n_targets: int | None = None,
    grounded=None,
    snapshot: DomSnapshot | None = None,
) -> list[str]:
    """Check a subtype's configuration; returns a list of violations (empty = ok).

    Target-count and cross-parent checks only run when the caller supplies
    n_targets / grounded context.
    """
    violations: list[str] = []
    if subtype not in SUBTYPES:
        return [f"UnknownSubtype:{subtype}"]
    if not isinstance(configuration, dict):
        return ["BadConfiguration:not-an-object"]

    if subtype == "insert.overlay_tip":
        tip = configuration.get("tip_text") or configuration.get("tipText")
        if not isinstance(tip, str) or not tip.strip():
            violations.append("MissingField:tip_text")
        placement = configuration.get("placement", "below")
        if placement not in ("below", "above", "left", "right", "adjacent"):
            violations.append(f"BadPlacement:{placement}")
    elif subtype == "insert.inline_control":
        detail = _control_detail(configuration)
        ctype = detail.get("controlType", "")
        if ctype not in CONTROL_TYPES:
            violations.append(f"UnknownControlType:{ctype}")
        if not str(detail.get("label", "")).strip():
            violations.append("MissingField:label")
        if not _action_name(detail.get("action")):
            violations.append("MissingField:action")
    elif subtype == "insert.widget":
        if not str(configuration.get("title", "")).strip():
            violations.append("MissingField:title")
        controls = configuration.get("controls")
        if not isinstance(controls, list) or not controls:
            violations.append("EmptyControls")
        else:
            for ctl in controls:
                if not isinstance(ctl, dict) or not str(ctl.get("label", "")).strip():
                    violations.append("MissingField:control.label")
                    continue
                name = _action_name(ctl.get("action"))
                if name not in WIDGET_ACTIONS:
                    violations.append(f"UnknownAction:{name}")
                elif name == "emit_event":
                    action = ctl.get("action")
                    if not (isinstance(action, dict) and str(action.get("name", "")).strip()):
                        violations.append("MissingField:emit_event.name")
    elif subtype == "mutate.style":
        props = _style_properties(configuration)
        if not props:
            violations.append("MissingField:properties")
        for prop in props:
            if prop not in ALLOWED_STYLE_PROPERTIES:
                violations.append(f"DisallowedProperty:{prop}")
    elif subtype == "mutate.representation":
        pair = (configuration.get("from_modality"), configuration.get("to_modality"))
        if pair not in MODALITY_SWITCHES:
            violations.append(f"BadModalitySwitch:{pair[0]}->{pair[1]}")
    elif subtype == "mutate.reframe":
        new_text = configuration.get("new_text")
        if isinstance(new_text, str):
            if not new_text.strip():
                violations.append("MissingField:new_text")
        elif isinstance(new_text, list):
            if not new_text or not all(isinstance(t, str) and t.strip() for t in new_text):
                violations.append("MissingField:new_text")
            elif n_targets is not None and len(new_text) != n_targets:
                violations.append("BadOrder:new_text-length")
        else:
            violations.append("MissingField:new_text")
    elif subtype == "recompose.reorder":
        if n_targets is not None and n_targets < 2:
            violations.append("TooFewTargets")
        violations.extend(_check_order_field(configuration, n_targets))
        if grounded is not None and snapshot is not None:
            parents = snapshot.parent_map()
            parent_ids = {parents.get(g.node_id) for g in grounded}
            if len(parent_ids) > 1:
                violations.append("CrossParentReorder")
    elif subtype == "recompose.group":
        if not str(configuration.get("group_label", "")).strip():
            violations.append("MissingField:group_label")
        if n_targets is not None and n_targets < 2:
            violations.append("GroupTooSmall")
    elif subtype == "recompose.layout":
        if n_targets is not None and n_targets < 2:
            violations.append("TooFewTargets")
        violations.extend(_check_order_field(configuration, n_targets))
    return violations


def _check_order_field(configuration: dict, n_targets: int | None) -> list[str]:
    order = configuration.get("order")
    if order is None:
        return []  # targets-as-listed is the order
    if not isinstance(order, list) or (
        n_targets is not None and sorted(order) != list(range(n_targets))
    ):
        return ["BadOrder:order"]
    return []


# ---------------------------------------------------------------------------
# Plan compilation


def _tip_offset(bbox, placement: str) -> tuple[float, float]:
    if bbox is None:
        return (0.0, OVERLAY_OFFSET_PX)
    if placement == "above":
        return (bbox.x, max(0.0, bbox.y - OVERLAY_OFFSET_PX))
    if placement == "left":
        return (max(0.0, bbox.x - OVERLAY_OFFSET_PX), bbox.y)
    if placement == "right":
        return (bbox.x + bbox.width + OVERLAY_OFFSET_PX, bbox.y)
    return (bbox.x, bbox.y + bbox.height + OVERLAY_OFFSET_PX)


def _control_spec(detail: dict) -> NodeSpec:
    ctype = detail["controlType"]
    label = str(detail.get("label", ""))
    if ctype == "search-input":
        return NodeSpec(
            tag="input",
            attributes={
                "type": "search",
                "aria-label": label,
                "placeholder": str(detail.get("placeholder", "")),
            },
            placement="adjacent_after",
        )
    if ctype == "toggle":
        return NodeSpec(
            tag="input",
            attributes={"type": "checkbox", "aria-label": label},
            placement="adjacent_after",
        )
    if ctype == "slider":
        return NodeSpec(
            tag="input",
            attributes={"type": "range", "aria-label": label},
            placement="adjacent_after",
        )
    return NodeSpec(tag="button", text=label, placement="adjacent_after")


def _widget_spec(configuration: dict) -> NodeSpec:
    children = [NodeSpec(tag="strong", text=str(configuration.get("title", "")))]
    body = str(configuration.get("body", ""))
    if body:
        children.append(NodeSpec(tag="div", text=body))
    for ctl in configuration.get("controls", []):
        action = _action_name(ctl.get("action"))
        children.append(
            NodeSpec(
                tag="button",
                text=str(ctl.get("label", "")),
                attributes={"data-insitu-action": action},
            )
        )
    return NodeSpec(
        tag="div",
        attributes={"class": "insitu-widget"},
        style={"position": "fixed"},
        children=children,
        placement="floating_anchor",
    )


def _plan_id_for(case_id: str, subtype: str, node_ids: list[int]) -> str:
    seed = f"{case_id}|{subtype}|{','.join(map(str, node_ids))}"
    return "p" + hashlib.sha256(seed.encode("utf-8")).hexdigest()[:10]


def _is_ancestor(snapshot: DomSnapshot, a: int, b: int) -> bool:
    """True when node a is a (strict) ancestor of node b."""
    parents = snapshot.parent_map()
    cur = parents.get(b)
    while cur is not None:
        if cur == a:
            return True
        cur = parents.get(cur)
    return False


def compile_plan(case, grounded: list, snapshot: DomSnapshot) -> DeliveryPlan:
    """Instantiate the subtype's operation template against grounded targets.

    `case` needs .case_id, .subtype, .configuration, and len(.targets) equal to
    len(grounded); raises UngroundedTarget / CompileError otherwise.
    """
    subtype = case.subtype
    configuration = case.configuration
    if subtype != "insert.widget" and not grounded:
        raise UngroundedTarget(f"case {case.case_id} has no grounded targets")
    violations = validate_config(
        subtype, configuration, n_targets=len(grounded) or None,
        grounded=grounded or None, snapshot=snapshot,
    )
    if violations:
        raise CompileError(f"configuration invalid for {subtype}: {violations}")

    by_id = snapshot.nodes_by_id
    for g in grounded:
        if g.node_id not in by_id:
            raise UngroundedTarget(f"grounded node {g.node_id} not in snapshot")

    plan_id = _plan_id_for(case.case_id, subtype, [g.node_id for g in grounded])
    ops: list[DomOperation] = []

    def add(op_kind: str, target_node: int | None, payload: dict):
        ops.append(DomOperation(op_kind, target_node, payload, seq=len(ops)))

    if subtype == "insert.overlay_tip":
        tip = configuration.get("tip_text") or configuration.get("tipText")
        placement = configuration.get("placement", "below")
        for g in grounded:
            offset = _tip_offset(by_id[g.node_id].bbox, placement)
            spec = NodeSpec(
                tag="div",
                text=str(tip),
                attributes={"class": "insitu-tip", "role": "tooltip"},
                style={"position": "absolute"},
                placement="floating_anchor",
                offset=offset,
            )
            add("anchor_overlay", g.node_id, {"spec": spec.to_dict()})
    elif subtype == "insert.inline_control":
        detail = _control_detail(configuration)
        for g in grounded:
            add("create_node", g.node_id, {"spec": _control_spec(detail).to_dict()})
    elif subtype == "insert.widget":
        anchor = grounded[0].node_id if grounded else None
        add("mount_widget", anchor, {"spec": _widget_spec(configuration).to_dict()})
    elif subtype == "mutate.reframe":
        new_text = configuration["new_text"]
        texts = new_text if isinstance(new_text, list) else [new_text] * len(grounded)
        for g, text in zip(grounded, texts):
            add("set_text", g.node_id, {"old": by_id[g.node_id].text, "new": text})
    elif subtype == "mutate.style":
        props = _style_properties(configuration)
        for g in grounded:
            old_styles = _parse_style(by_id[g.node_id].attributes.get("style", ""))
            changes = {
                prop: {"old": old_styles.get(prop), "new": str(value)}
                for prop, value in props.items()
            }
            add("set_style", g.node_id, {"properties": changes})
    elif subtype == "mutate.representation":
        switches = MODALITY_SWITCHES[
            (configuration["from_modality"], configuration["to_modality"])
        ]
        for g in grounded:
            node = by_id[g.node_id]
            for name, new in switches:
                add(
                    "set_attribute",
                    g.node_id,
                    {"name": name, "old": node.attributes.get(name), "new": new},
                )
    elif subtype == "recompose.reorder":
        ops.extend(_compile_reorder(snapshot, grounded, configuration, start_seq=0))
    elif subtype == "recompose.group":
        ops.extend(_compile_group(snapshot, grounded, configuration))
    elif subtype == "recompose.layout":
        ops.extend(_compile_layout(snapshot, grounded, configuration))

    if not ops:
        raise CompileError(f"subtype {subtype} produced no operations")
    return DeliveryPlan(plan_id=plan_id, case_id=case.case_id, subtype=subtype,
                        ops=ops, grounded=list(grounded))


def _ordered_members(grounded: list, configuration: dict) -> list:
    order = configuration.get("order")
    if order is None:
        return list(grounded)
    return [grounded[i] for i in order]


def _compile_reorder(snapshot: DomSnapshot, grounded, configuration, start_seq: int):
    parents = snapshot.parent_map()
    parent_ids = {parents.get(g.node_id) for g in grounded}
    if len(parent_ids) != 1 or None in parent_ids:
        raise CompileError("reorder targets must share a parent")
    parent_id = parent_ids.pop()
    members = [g.node_id for g in _ordered_members(grounded, configuration)]
    # Place members in desired order into the slots they currently occupy.
    children = list(snapshot.node(parent_id).children)
    slots = sorted(children.index(m) for m in members)
    ops = []
    sim = list(children)
    for slot, member in zip(slots, members):
        old_pos = sim.index(member)
        if old_pos == slot:
            continue
        sim.pop(old_pos)
        sim.insert(slot, member)
        ops.append(
            DomOperation(
                "move_node",
                member,
                {
                    "old_parent": parent_id,
                    "old_position": old_pos,
                    "new_parent": parent_id,
                    "new_position": slot,
                },
                seq=start_seq + len(ops),
            )
        )
    if not ops:
        # Already in the desired order: emit one no-effect move so the plan is
        # non-empty and still reversible.
        member = members[0]
        pos = sim.index(member)
        ops.append(
            DomOperation(
                "move_node",
                member,
                {
                    "old_parent": parent_id,
                    "old_position": pos,
                    "new_parent": parent_id,
                    "new_position": pos,
                },
                seq=start_seq,
            )
        )
    return ops


def _compile_group(snapshot: DomSnapshot, grounded, configuration):
    members = [g.node_id for g in grounded]
    for a in members:
        for b in members:
            if a != b and _is_ancestor(snapshot, a, b):
                raise CompileError(f"group member {a} is an ancestor of member {b}")
    label = str(configuration["group_label"])
    container = NodeSpec(
        tag="div",
        attributes={"class": "insitu-group", "aria-label": label},
        children=[NodeSpec(tag="div", text=label, attributes={"class": "insitu-group-label"})],
        placement="adjacent_before",
    )
    ops = [DomOperation("create_node", members[0], {"spec": container.to_dict()}, seq=0)]
    parents = snapshot.parent_map()
    for i, member in enumerate(members):
        ops.append(
            DomOperation(
                "move_node",
                member,
                {
                    "old_parent": parents[member],
                    "old_position": None,  # resolved at apply time
                    "new_parent": "created:0",  # container from op seq 0
                    "new_position": i + 1,  # after the label child
                },
                seq=len(ops),
            )
        )
    return ops


def _compile_layout(snapshot: DomSnapshot, grounded, configuration):
    regions = [g.node_id for g in _ordered_members(grounded, configuration)]
    parents = snapshot.parent_map()
    if any(r not in parents for r in regions):
        raise CompileError("layout regions must not include the root")
    anchor_parent = parents[regions[0]]
    for r in regions:
        if _is_ancestor(snapshot, r, anchor_parent) or r == anchor_parent:
            raise CompileError(f"layout region {r} contains the destination parent")
    start = snapshot.node(anchor_parent).children.index(regions[0])
    ops = []
    for i, region in enumerate(regions):
        ops.append(
            DomOperation(
                "move_node",
                region,
                {
                    "old_parent": parents[region],
                    "old_position": None,
                    "new_parent": anchor_parent,
                    "new_position": start + i,
                },
                seq=len(ops),
            )
        )
    return ops


def _parse_style(style: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for part in style.split(";"):
        if ":" in part:
            k, v = part.split(":", 1)
            out[k.strip()] = v.strip()
    return out


def _format_style(styles: dict[str, str]) -> str:
    return ";".join(f"{k}:{v}" for k, v in styles.items())


# ---------------------------------------------------------------------------
# Snapshot simulator


class _Sim:
    def __init__(self, snapshot: DomSnapshot):
        self.snapshot = snapshot.copy()
        self.by_id = {n.node_id: n for n in self.snapshot.nodes}
        self.next_id = max(self.by_id) + 1
        self.created_by_seq: dict[int, int] = {}  # op seq -> created root node id

    def node(self, node_id: int) -> DomNode:
        if node_id not in self.by_id:
            raise StaleTarget(f"node {node_id} is not present in the snapshot")
        return self.by_id[node_id]

    def parent_of(self, node_id: int) -> int | None:
        for n in self.snapshot.nodes:
            if node_id in n.children:
                return n.node_id
        return None

    def materialize(self, spec: dict, tag_value: str) -> int:
        node = DomNode(
            node_id=self.next_id,
            tag=spec["tag"],
            text=spec.get("text", ""),
            attributes={**spec.get("attrs", {}), ASSIST_TAG_ATTR: tag_value},
            children=[],
            bbox=None,
            flags=frozenset({"visible"}),
        )
        if spec.get("style"):
            node.attributes["style"] = _format_style(spec["style"])
        self.next_id += 1
        self.snapshot.nodes.append(node)
        self.by_id[node.node_id] = node
        for child_spec in spec.get("children", []):
            child_id = self.materialize(child_spec, tag_value)
            node.children.append(child_id)
        return node.node_id

    def subtree_ids(self, node_id: int) -> list[int]:
        out = []
        stack = [node_id]
        while stack:
            nid = stack.pop()
            out.append(nid)
            stack.extend(self.by_id[nid].children)
        return out

    def detach(self, node_id: int) -> tuple[int, int]:
        parent_id = self.parent_of(node_id)
        if parent_id is None:
            raise StaleTarget(f"node {node_id} has no parent to detach from")
        parent = self.by_id[parent_id]
        pos = parent.children.index(node_id)
        parent.children.pop(pos)
        return parent_id, pos

    def delete_subtree(self, node_id: int) -> None:
        for nid in self.subtree_ids(node_id):
            self.by_id.pop(nid, None)
        self.snapshot.nodes = [n for n in self.snapshot.nodes if n.node_id in self.by_id]


def _tag(sim: _Sim, node_id: int, tag_value: str) -> str | None:
    node = sim.node(node_id)
    old = node.attributes.get(ASSIST_TAG_ATTR)
    node.attributes[ASSIST_TAG_ATTR] = tag_value
    return old


def _untag(node: DomNode, old: str | None) -> None:
    if old is None:
        node.attributes.pop(ASSIST_TAG_ATTR, None)
    else:
        node.attributes[ASSIST_TAG_ATTR] = old


def apply_sim(snapshot: DomSnapshot, plan: DeliveryPlan) -> tuple[DomSnapshot, ReversalRecord]:
    """Apply a plan to a copy of the snapshot; never removes a pre-existing node."""
    sim = _Sim(snapshot)
    inverse_ops: list[DomOperation] = []

    def placement_of(spec: dict, anchor: int | None) -> tuple[int, int]:
        """Resolve where a created node goes: (parent_id, position)."""
        placement = spec.get("placement", "append_child")
        if placement == "floating_anchor" or anchor is None:
            root = sim.node(0)
            return 0, len(root.children)
        if placement == "append_child":
            parent = sim.node(anchor)
            return anchor, len(parent.children)
        parent_id = sim.parent_of(anchor)
        if parent_id is None:
            raise StaleTarget(f"anchor {anchor} has no parent")
        pos = sim.by_id[parent_id].children.index(anchor)
        if placement == "adjacent_after":
            pos += 1
        return parent_id, pos

    for op in plan.ops:
        tag_value = f"{plan.plan_id}:{op.seq}"
        if op.op_kind in ("create_node", "anchor_overlay", "mount_widget"):
            spec = op.payload["spec"]
            parent_id, pos = placement_of(spec, op.target_node)
            created = sim.materialize(spec, tag_value)
            sim.by_id[parent_id].children.insert(pos, created)
            sim.created_by_seq[op.seq] = created
            inverse_ops.append(
                DomOperation(
                    REMOVE_KIND,
                    created,
                    {"parent": parent_id, "position": pos, "tag": tag_value},
                    seq=op.seq,
                )
            )
        elif op.op_kind == "set_text":
            node = sim.node(op.target_node)
            tag_old = _tag(sim, op.target_node, tag_value)
            old = node.text
            node.text = op.payload["new"]
            inverse_ops.append(
                DomOperation(
                    "set_text",
                    op.target_node,
                    {"old": node.text, "new": old, "tag": tag_value, "tag_old": tag_old},
                    seq=op.seq,
                )
            )
        elif op.op_kind == "set_style":
            node = sim.node(op.target_node)
            tag_old = _tag(sim, op.target_node, tag_value)
            raw_old = node.attributes.get("style")
            styles = _parse_style(raw_old or "")
            restore = {}
            for prop, change in op.payload["properties"].items():
                restore[prop] = {"old": change["new"], "new": styles.get(prop)}
                styles[prop] = change["new"]
            node.attributes["style"] = _format_style(styles)
            inverse_ops.append(
                DomOperation(
                    "set_style",
                    op.target_node,
                    {"properties": restore, "style_raw_old": raw_old,
                     "tag": tag_value, "tag_old": tag_old},
                    seq=op.seq,
                )
            )
        elif op.op_kind == "set_attribute":
            node = sim.node(op.target_node)
            tag_old = _tag(sim, op.target_node, tag_value)
            name = op.payload["name"]
            old = node.attributes.get(name)
            new = op.payload["new"]
            if new is None:
                node.attributes.pop(name, None)
            else:
                node.attributes[name] = new
            inverse_ops.append(
                DomOperation(
                    "set_attribute",
                    op.target_node,
                    {"name": name, "old": new, "new": old,
                     "tag": tag_value, "tag_old": tag_old},
                    seq=op.seq,
                )
            )
        elif op.op_kind == "move_node":
            node = sim.node(op.target_node)
            tag_old = _tag(sim, op.target_node, tag_value)
            new_parent = op.payload["new_parent"]
            if isinstance(new_parent, str) and new_parent.startswith("created:"):
                new_parent = sim.created_by_seq[int(new_parent.split(":", 1)[1])]
            old_parent, old_pos = sim.detach(op.target_node)
            sim.node(new_parent).children.insert(op.payload["new_position"], op.target_node)
            inverse_ops.append(
                DomOperation(
                    "move_node",
                    op.target_node,
                    {"old_parent": new_parent, "old_position": op.payload["new_position"],
                     "new_parent": old_parent, "new_position": old_pos,
                     "tag": tag_value, "tag_old": tag_old},
                    seq=op.seq,
                )
            )
        else:
            raise CompileError(f"unknown op kind {op.op_kind}")

    inverse_ops.reverse()  # LIFO
    return sim.snapshot, ReversalRecord(plan_id=plan.plan_id, inverse_ops=inverse_ops)


def revert_sim(snapshot: DomSnapshot, record: ReversalRecord) -> RevertResult:
    """Undo a previously applied plan on a copy of the snapshot.

    Best-effort: a tagged node that was externally modified is flagged but
    still restored; a second revert is a no-op.
    """
    sim = _Sim(snapshot)
    tampered = False
    notes: list[str] = []

    for op in record.inverse_ops:
        if op.op_kind == REMOVE_KIND:
            if op.target_node not in sim.by_id:
                continue  # already reverted
            node = sim.by_id[op.target_node]
            if node.attributes.get(ASSIST_TAG_ATTR) != op.payload["tag"]:
                tampered = True
                notes.append(f"created node {op.target_node} lost its tag before revert")
            sim.detach(op.target_node)
            sim.delete_subtree(op.target_node)
            continue

        if op.target_node not in sim.by_id:
            tampered = True
            notes.append(f"node {op.target_node} disappeared before revert")
            continue
        node = sim.by_id[op.target_node]
        current_tag = node.attributes.get(ASSIST_TAG_ATTR)
        if current_tag is None or not current_tag.startswith(record.plan_id + ":"):
            continue  # already reverted
        if current_tag != op.payload["tag"]:
            tampered = True
            notes.append(f"node {op.target_node} tag changed: {current_tag}")

        if op.op_kind == "set_text":
            if node.text != op.payload["old"]:
                tampered = True
                notes.append(f"node {op.target_node} text externally modified")
            node.text = op.payload["new"]
        elif op.op_kind == "set_style":
            styles = _parse_style(node.attributes.get("style", ""))
            for prop, change in op.payload["properties"].items():
                if styles.get(prop) != change["old"]:
                    tampered = True
                    notes.append(f"node {op.target_node} style {prop} externally modified")
            # Restore the raw attribute verbatim so the byte form round-trips.
            raw_old = op.payload.get("style_raw_old")
            if raw_old is None:
                node.attributes.pop("style", None)
            else:
                node.attributes["style"] = raw_old
        elif op.op_kind == "set_attribute":
            name = op.payload["name"]
            if node.attributes.get(name) != op.payload["old"]:
                tampered = True
                notes.append(f"node {op.target_node} attribute {name} externally modified")
            if op.payload["new"] is None:
                node.attributes.pop(name, None)
            else:
                node.attributes[name] = op.payload["new"]
        elif op.op_kind == "move_node":
            sim.detach(op.target_node)
            sim.node(op.payload["new_parent"]).children.insert(
                op.payload["new_position"], op.target_node
            )
        _untag(node, op.payload.get("tag_old"))

    return RevertResult(snapshot=sim.snapshot, tampered=tampered, notes=notes)


# ---------------------------------------------------------------------------
# Wire schema


def plan_to_dict(plan: DeliveryPlan) -> dict:
    return {
        "plan_id": plan.plan_id,
        "case_id": plan.case_id,
        "subtype": plan.subtype,
        "ops": [
            {"kind": op.op_kind, "target": op.target_node, "payload": op.payload,
             "seq": op.seq}
            for op in plan.ops
        ],
        "grounded": [
            {
                "ui_description": g.ui_description,
                "element_index": g.element_index,
                "node_id": g.node_id,
                "similarity": g.similarity,
            }
            for g in plan.grounded
        ],
    }


def plan_from_dict(doc: dict) -> DeliveryPlan:
    from .grounding import GroundedTarget

    return DeliveryPlan(
        plan_id=doc["plan_id"],
        case_id=doc["case_id"],
        subtype=doc["subtype"],
        ops=[
            DomOperation(op["kind"], op["target"], op["payload"], op["seq"])
            for op in doc["ops"]
        ],
        grounded=[
            GroundedTarget(
                ui_description=g["ui_description"],
                element_index=g["element_index"],
                node_id=g["node_id"],
                similarity=g["similarity"],
            )
            for g in doc["grounded"]
        ],
    )
