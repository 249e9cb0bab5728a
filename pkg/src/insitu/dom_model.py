"""Serialized DOM snapshots, interactable-element extraction, and semantic descriptors.

The snapshot wire schema is the contract between the browser-side capturer and
the engine; parsing is strict (unknown fields rejected) so that drift between
the two sides surfaces immediately.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import GraphError, SchemaError

# Attribute stamped on every node a delivery plan creates or mutates.
ASSIST_TAG_ATTR = "data-insitu-plan"

NODE_FLAGS = frozenset(
    {"visible", "clickable_handler", "pointer_cursor", "focusable", "disabled"}
)

INTERACTABLE_TAGS = frozenset(
    {"a", "button", "input", "select", "textarea", "option", "summary", "label"}
)
INTERACTABLE_ROLES = frozenset(
    {"button", "link", "checkbox", "radio", "slider", "tab", "menuitem", "combobox"}
)
HEADING_TAGS = frozenset({"h1", "h2", "h3", "h4", "h5", "h6"})

ROLES = (
    "button",
    "link",
    "link button",
    "control",
    "text",
    "select-data",
    "input",
    "canvas-region",
)


@dataclass(frozen=True)
class BoundingBox:
    x: float
    y: float
    width: float
    height: float

    @property
    def area(self) -> float:
        return self.width * self.height


@dataclass
class DomNode:
    node_id: int
    tag: str
    text: str
    attributes: dict[str, str]
    children: list[int]
    bbox: BoundingBox | None
    flags: frozenset[str]

    def copy(self) -> "DomNode":
        return DomNode(
            node_id=self.node_id,
            tag=self.tag,
            text=self.text,
            attributes=dict(self.attributes),
            children=list(self.children),
            bbox=self.bbox,
            flags=self.flags,
        )


@dataclass
class DomSnapshot:
    url: str
    title: str
    captured_at: str
    nodes: list[DomNode]
    section_labels: dict[int, str] = field(default_factory=dict)

    def node(self, node_id: int) -> DomNode:
        return self.nodes_by_id[node_id]

    @property
    def nodes_by_id(self) -> dict[int, DomNode]:
        return {n.node_id: n for n in self.nodes}

    @property
    def root(self) -> DomNode:
        return self.node(0)

    def parent_map(self) -> dict[int, int]:
        parents: dict[int, int] = {}
        for n in self.nodes:
            for c in n.children:
                parents[c] = n.node_id
        return parents

    def document_order(self) -> list[int]:
        """Preorder DFS node ids from the root, children in listed order."""
        by_id = self.nodes_by_id
        order: list[int] = []
        stack = [0]
        while stack:
            nid = stack.pop()
            order.append(nid)
            stack.extend(reversed(by_id[nid].children))
        return order

    def copy(self) -> "DomSnapshot":
        return DomSnapshot(
            url=self.url,
            title=self.title,
            captured_at=self.captured_at,
            nodes=[n.copy() for n in self.nodes],
            section_labels=dict(self.section_labels),
        )


@dataclass(frozen=True)
class UiElement:
    index: int
    node_id: int
    role: str
    label: str
    section: str
    descriptor: str

    @property
    def target_descriptor(self) -> str:
        """The form targets are matched against: "[<role>] <label>"."""
        return f"[{self.role}] {self.label}"


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise SchemaError(msg)


def _parse_node(obj: object) -> DomNode:
    _require(isinstance(obj, dict), "node must be an object")
    assert isinstance(obj, dict)
    expected = {"id", "tag", "text", "attrs", "children", "bbox", "flags"}
    unknown = set(obj) - expected
    _require(not unknown, f"unknown node fields: {sorted(unknown)}")
    missing = expected - set(obj)
    _require(not missing, f"missing node fields: {sorted(missing)}")
    _require(isinstance(obj["id"], int) and not isinstance(obj["id"], bool), "id must be an integer")
    _require(obj["id"] >= 0, "id must be non-negative")
    _require(isinstance(obj["tag"], str), "tag must be a string")
    _require(isinstance(obj["text"], str), "text must be a string")
    _require(isinstance(obj["attrs"], dict), "attrs must be an object")
    for k, v in obj["attrs"].items():
        _require(isinstance(k, str) and isinstance(v, str), "attrs entries must be strings")
    _require(isinstance(obj["children"], list), "children must be a list")
    for c in obj["children"]:
        _require(isinstance(c, int) and not isinstance(c, bool), "child ids must be integers")
    bbox_obj = obj["bbox"]
    bbox: BoundingBox | None = None
    if bbox_obj is not None:
        _require(isinstance(bbox_obj, dict), "bbox must be an object or null")
        _require(set(bbox_obj) == {"x", "y", "w", "h"}, "bbox fields must be x, y, w, h")
        for k in ("x", "y", "w", "h"):
            _require(isinstance(bbox_obj[k], (int, float)) and not isinstance(bbox_obj[k], bool),
                     f"bbox.{k} must be a number")
        _require(bbox_obj["w"] >= 0 and bbox_obj["h"] >= 0, "bbox width/height must be >= 0")
        bbox = BoundingBox(float(bbox_obj["x"]), float(bbox_obj["y"]),
                           float(bbox_obj["w"]), float(bbox_obj["h"]))
    _require(isinstance(obj["flags"], list), "flags must be a list")
    flags = set()
    for f in obj["flags"]:
        _require(isinstance(f, str) and f in NODE_FLAGS, f"unknown flag: {f!r}")
        flags.add(f)
    return DomNode(
        node_id=obj["id"],
        tag=obj["tag"].lower(),
        text=obj["text"],
        attributes=dict(obj["attrs"]),
        children=list(obj["children"]),
        bbox=bbox,
        flags=frozenset(flags),
    )


def validate_tree(snapshot: DomSnapshot) -> None:
    """Check the node-graph invariants: contiguous ids, single parents, rooted tree."""
    n = len(snapshot.nodes)
    if n == 0:
        raise GraphError("snapshot has no nodes")
    ids = [node.node_id for node in snapshot.nodes]
    if sorted(ids) != list(range(n)):
        raise GraphError("node ids must form a contiguous range starting at 0")
    by_id = snapshot.nodes_by_id
    parents: dict[int, int] = {}
    for node in snapshot.nodes:
        for c in node.children:
            if c not in by_id:
                raise GraphError(f"node {node.node_id} lists missing child {c}")
            if c in parents:
                raise GraphError(f"node {c} has multiple parents")
            parents[c] = node.node_id
    if 0 in parents:
        raise GraphError("root node 0 must not have a parent")
    order = snapshot.document_order()
    if len(order) != n:
        raise GraphError("nodes unreachable from root (cycle or forest)")
    if order != list(range(n)):
        raise GraphError("node ids must follow document order")


def parse_snapshot(raw: str | bytes | dict) -> DomSnapshot:
    """Parse and validate a snapshot wire document.

    Raises SchemaError for shape problems and GraphError for tree problems.
    """
    if isinstance(raw, (str, bytes)):
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as e:
            raise SchemaError(f"invalid JSON: {e}") from e
    else:
        doc = raw
    _require(isinstance(doc, dict), "snapshot must be an object")
    expected = {"url", "title", "captured_at", "nodes"}
    unknown = set(doc) - expected
    _require(not unknown, f"unknown snapshot fields: {sorted(unknown)}")
    missing = expected - set(doc)
    _require(not missing, f"missing snapshot fields: {sorted(missing)}")
    for k in ("url", "title", "captured_at"):
        _require(isinstance(doc[k], str), f"{k} must be a string")
    _require(isinstance(doc["nodes"], list), "nodes must be a list")
    nodes = [_parse_node(n) for n in doc["nodes"]]
    snapshot = DomSnapshot(
        url=doc["url"], title=doc["title"], captured_at=doc["captured_at"], nodes=nodes
    )
    validate_tree(snapshot)
    snapshot.section_labels = _compute_sections(snapshot)
    return snapshot


def serialize_snapshot(snapshot: DomSnapshot) -> str:
    """Canonical wire form: UTF-8 JSON, sorted keys, children in listed order."""
    doc = {
        "url": snapshot.url,
        "title": snapshot.title,
        "captured_at": snapshot.captured_at,
        "nodes": [
            {
                "id": n.node_id,
                "tag": n.tag,
                "text": n.text,
                "attrs": dict(sorted(n.attributes.items())),
                "children": list(n.children),
                "bbox": None if n.bbox is None else {
                    "x": n.bbox.x, "y": n.bbox.y, "w": n.bbox.width, "h": n.bbox.height
                },
                "flags": sorted(n.flags),
            }
            for n in snapshot.nodes
        ],
    }
    return json.dumps(doc, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def _is_heading(node: DomNode) -> bool:
    return node.tag in HEADING_TAGS or node.attributes.get("role") == "heading"


def _compute_sections(snapshot: DomSnapshot) -> dict[int, str]:
    """Nearest heading for each node: ancestor headings plus preceding siblings
    at each ancestor level, closest level first."""
    parents = snapshot.parent_map()
    by_id = snapshot.nodes_by_id
    labels: dict[int, str] = {}
    for node in snapshot.nodes:
        current = node.node_id
        found = ""
        while current in parents and not found:
            parent = by_id[parents[current]]
            pos = parent.children.index(current)
            for sib_id in reversed(parent.children[:pos]):
                sib = by_id[sib_id]
                if _is_heading(sib):
                    found = _label_for(sib)
                    break
            if not found and _is_heading(parent):
                found = _label_for(parent)
            current = parent.node_id
        if found:
            labels[node.node_id] = found
    return labels


def _label_for(node: DomNode) -> str:
    """Label fallback chain: aria-label, visible text, title, id, tag name."""
    aria = node.attributes.get("aria-label", "").strip()
    if aria:
        return aria
    text = " ".join(node.text.split())
    if text:
        return text[:80]
    title = node.attributes.get("title", "").strip()
    if title:
        return title
    ident = node.attributes.get("id", "").strip()
    if ident:
        return ident
    return node.tag


def _is_interactable(node: DomNode) -> bool:
    if "visible" not in node.flags or "disabled" in node.flags:
        return False
    if node.bbox is None or node.bbox.area <= 0:
        return False
    return (
        node.tag in INTERACTABLE_TAGS
        or node.attributes.get("role") in INTERACTABLE_ROLES
        or "clickable_handler" in node.flags
        or "pointer_cursor" in node.flags
    )


def _is_text_target(node: DomNode) -> bool:
    # Visible text nodes are referenceable targets even though not clickable.
    if "visible" not in node.flags or "disabled" in node.flags:
        return False
    if node.bbox is None or node.bbox.area <= 0:
        return False
    return bool(node.text.strip())


def _role_for(node: DomNode, is_interactable: bool) -> str:
    attr_role = node.attributes.get("role", "")
    if node.tag == "a":
        classes = node.attributes.get("class", "").split()
        if attr_role == "button" or "button" in classes:
            return "link button"
        return "link"
    if node.tag == "button" or attr_role == "button":
        return "button"
    if node.tag in ("input", "textarea"):
        return "input"
    if node.tag in ("select", "option"):
        return "select-data"
    if node.tag == "canvas":
        return "canvas-region"
    if attr_role == "link":
        return "link"
    if not is_interactable:
        return "text"
    return "control"


def extract_interactables(snapshot: DomSnapshot) -> list[UiElement]:
    """Index the referenceable elements of a snapshot in document order.

    Pure function of node tags, attributes, flags, and bounding boxes; indices
    are dense 0..M-1.
    """
    elements: list[UiElement] = []
    by_id = snapshot.nodes_by_id
    for nid in snapshot.document_order():
        node = by_id[nid]
        interactable = _is_interactable(node)
        if not interactable and not _is_text_target(node):
            continue
        role = _role_for(node, interactable)
        label = _label_for(node)
        section = snapshot.section_labels.get(nid, "")
        index = len(elements)
        elements.append(
            UiElement(
                index=index,
                node_id=nid,
                role=role,
                label=label,
                section=section,
                descriptor=f"#{index} [{role}] {label}",
            )
        )
    return elements


def describe_element(element: UiElement) -> str:
    return element.descriptor


def format_element_listing(elements: list[UiElement]) -> str:
    """The grouped listing fed to generation prompts, with [Section] marker lines."""
    lines: list[str] = []
    current_section: str | None = None
    for e in elements:
        if e.section != current_section:
            if e.section:
                lines.append(f"[Section] {e.section}")
            current_section = e.section
        lines.append(e.descriptor)
    return "\n".join(lines)


def _node_key(node: DomNode, ignore_assist_tags: bool):
    if ignore_assist_tags:
        attrs = {k: v for k, v in sorted(node.attributes.items()) if k != ASSIST_TAG_ATTR}
        attr_view = tuple(sorted(attrs.items()))
    else:
        attr_view = tuple(node.attributes.items())
    return (node.tag, node.text, attr_view, node.bbox, node.flags)


def snapshot_equal(a: DomSnapshot, b: DomSnapshot, ignore_assist_tags: bool = False) -> bool:
    """Structural tree equality from the root, independent of node-id numbering."""
    a_by_id = a.nodes_by_id
    b_by_id = b.nodes_by_id
    if len(a.nodes) != len(b.nodes):
        return False

    def eq(na: DomNode, nb: DomNode) -> bool:
        if _node_key(na, ignore_assist_tags) != _node_key(nb, ignore_assist_tags):
            return False
        if len(na.children) != len(nb.children):
            return False
        return all(eq(a_by_id[ca], b_by_id[cb]) for ca, cb in zip(na.children, nb.children))

    return eq(a.root, b.root)
