#!/usr/bin/env python3
"""Author and freeze the test fixtures.

Everything under fixtures/ is generated here so it can be rebuilt and audited.
The grounding oracle values are computed with a local re-implementation of the
trigram embedder (not imported from the package) so the frozen expectations are
independent of the code under test. The script cross-checks every fixture
end-to-end before writing and fails loudly if any frozen expectation would not
hold.
"""

from __future__ import annotations

import json
import sys
import tempfile
import zlib
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"

sys.path.insert(0, str(ROOT / "src"))

from insitu.dom_model import extract_interactables, parse_snapshot  # noqa: E402
from insitu.knowledge import interface_id_for  # noqa: E402


# ---------------------------------------------------------------------------
# Independent oracle embedder (deliberately not imported from the package)


def oracle_embedding(text: str, dim: int = 256) -> np.ndarray:
    s = "^" + text.strip().casefold() + "$"
    v = np.zeros(dim)
    for i in range(len(s) - 2):
        v[zlib.crc32(s[i:i + 3].encode("utf-8")) % dim] += 1.0
    return v / np.linalg.norm(v)


def oracle_cosine(a: str, b: str) -> float:
    return float(oracle_embedding(a) @ oracle_embedding(b))


# ---------------------------------------------------------------------------
# Snapshot authoring


def N(tag, text="", attrs=None, bbox=None, flags=(), children=()):
    return {
        "tag": tag, "text": text, "attrs": dict(attrs or {}),
        "bbox": bbox, "children": list(children), "flags": list(flags),
    }


def bb(x, y, w, h):
    return {"x": float(x), "y": float(y), "w": float(w), "h": float(h)}


def flatten(tree: dict) -> list[dict]:
    """Assign contiguous preorder ids and emit the wire node list."""
    nodes: list[dict] = []

    def walk(spec: dict) -> int:
        nid = len(nodes)
        node = {
            "id": nid, "tag": spec["tag"], "text": spec["text"],
            "attrs": spec["attrs"], "children": [], "bbox": spec["bbox"],
            "flags": spec["flags"],
        }
        nodes.append(node)
        for child in spec["children"]:
            node["children"].append(walk(child))
        return nid

    walk(tree)
    return nodes


VIS = ("visible",)
BTN = ("visible", "focusable", "pointer_cursor")


def voyager_tree() -> dict:
    y = [40]

    def row(h=28):
        y[0] += h + 8
        return y[0]

    fields = ["Cylinders", "Displacement", "Horsepower", "Miles per Gallon",
              "Acceleration", "Weight", "Model Year", "Origin", "Name"]
    marks = ["Auto", "Area", "Bar", "Line", "Point", "Tick"]
    encodings = ["X axis field", "Y axis field", "Color encoding",
                 "Size encoding", "Shape encoding"]
    return N("html", children=[
        N("body", children=[
            N("header", children=[
                N("h1", "Data Voyager", bbox=bb(20, 10, 220, 32), flags=VIS),
                N("nav", children=[
                    N("a", "Docs", {"href": "/docs"}, bb(300, 14, 48, 24), BTN),
                    N("a", "Gallery", {"href": "/gallery"}, bb(360, 14, 64, 24), BTN),
                    N("a", "Sign in", {"href": "/login", "class": "button"},
                      bb(436, 14, 64, 24), BTN),
                ]),
            ]),
            N("main", children=[
                N("section", attrs={"id": "data-pane"}, children=[
                    N("h2", "Data", bbox=bb(20, row(), 60, 24), flags=VIS),
                    N("select", attrs={"aria-label": "Dataset"},
                      bbox=bb(20, row(), 180, 28), flags=BTN, children=[
                        N("option", "cars.json", bbox=bb(20, 0, 180, 20), flags=VIS),
                        N("option", "movies.json", bbox=bb(20, 0, 180, 20), flags=VIS),
                        N("option", "barley.json", bbox=bb(20, 0, 180, 20), flags=VIS),
                        N("option", "jobs.json", bbox=bb(20, 0, 180, 20), flags=VIS),
                    ]),
                    N("button", "Load custom data", bbox=bb(20, row(), 140, 28), flags=BTN),
                ]),
                N("section", attrs={"id": "field-pane"}, children=[
                    N("h2", "Fields", bbox=bb(20, row(), 80, 24), flags=VIS),
                    N("input", attrs={"type": "search", "aria-label": "Search fields"},
                      bbox=bb(20, row(), 180, 28), flags=("visible", "focusable")),
                ] + [
                    N("button", f, {"class": "field-pill", "draggable": "true"},
                      bb(20, row(), 160, 26), BTN)
                    for f in fields
                ]),
                N("section", attrs={"id": "encoding-pane"}, children=[
                    N("h2", "Encoding", bbox=bb(240, 60, 100, 24), flags=VIS),
                    N("label", "X axis", {"for": "enc-x"}, bb(240, 96, 60, 20), VIS),
                    N("label", "Y axis", {"for": "enc-y"}, bb(240, 132, 60, 20), VIS),
                ] + [
                    N("select", attrs={"aria-label": e},
                      bbox=bb(310, 90 + 36 * i, 160, 28), flags=BTN)
                    for i, e in enumerate(encodings)
                ]),
                N("section", attrs={"id": "mark-pane"}, children=[
                    N("h2", "Marks", bbox=bb(240, 290, 80, 24), flags=VIS),
                ] + [
                    N("button", m, {"class": "mark-toggle"},
                      bb(240 + 56 * i, 324, 52, 26), BTN)
                    for i, m in enumerate(marks)
                ]),
                N("section", attrs={"id": "filter-pane"}, children=[
                    N("h2", "Filters", bbox=bb(240, 370, 80, 24), flags=VIS),
                    N("button", "Add filter", bbox=bb(240, 404, 90, 26), flags=BTN),
                    N("input", attrs={"type": "text", "aria-label": "Minimum horsepower"},
                      bbox=bb(240, 440, 120, 26), flags=("visible", "focusable")),
                    N("input", attrs={"type": "text", "aria-label": "Maximum horsepower"},
                      bbox=bb(380, 440, 120, 26), flags=("visible", "focusable")),
                ]),
                N("section", attrs={"id": "chart-pane"}, children=[
                    N("h2", "Chart", bbox=bb(560, 60, 80, 24), flags=VIS),
                    N("canvas", attrs={"aria-label": "Main chart canvas"},
                      bbox=bb(560, 94, 520, 380), flags=("visible", "pointer_cursor")),
                    N("button", "Bookmark this view", bbox=bb(560, 490, 150, 28), flags=BTN),
                    N("button", "Undo", bbox=bb(724, 490, 60, 28), flags=BTN),
                    N("button", "Redo", bbox=bb(794, 490, 60, 28), flags=BTN),
                    N("a", "Export specification", {"href": "/export"},
                      bb(868, 490, 150, 28), BTN),
                ]),
            ]),
            N("footer", children=[
                N("span", "Powered by draggable shelves",
                  bbox=bb(20, 540, 220, 18), flags=VIS),
                N("a", "About", {"href": "/about"}, bb(260, 540, 48, 18), BTN),
                N("a", "Help", {"href": "/help"}, bb(320, 540, 48, 18), BTN),
            ]),
        ]),
    ])


def playground_tree() -> dict:
    feats = ["X1", "X2", "X1 squared", "X2 squared", "X1 times X2", "sin X1", "sin X2"]
    return N("html", children=[
        N("body", children=[
            N("header", children=[
                N("h1", "Neural Playground", bbox=bb(20, 10, 240, 32), flags=VIS),
                N("button", "Run training", {"aria-label": "Run training"},
                  bb(300, 12, 110, 28), BTN),
                N("button", "Pause training", bbox=bb(420, 12, 110, 28), flags=BTN),
                N("button", "Reset the network", bbox=bb(540, 12, 130, 28), flags=BTN),
            ]),
            N("main", children=[
                N("section", attrs={"id": "hyper-pane"}, children=[
                    N("h2", "Hyperparameters", bbox=bb(20, 60, 180, 24), flags=VIS),
                    N("select", attrs={"aria-label": "Learning rate"},
                      bbox=bb(20, 94, 120, 26), flags=BTN),
                    N("select", attrs={"aria-label": "Activation function"},
                      bbox=bb(150, 94, 120, 26), flags=BTN),
                    N("select", attrs={"aria-label": "Regularization"},
                      bbox=bb(280, 94, 120, 26), flags=BTN),
                    N("input", attrs={"type": "text", "aria-label": "Noise level"},
                      bbox=bb(410, 94, 80, 26), flags=("visible", "focusable")),
                ]),
                N("section", attrs={"id": "feature-pane"}, children=[
                    N("h2", "Features", bbox=bb(20, 140, 120, 24), flags=VIS),
                ] + [
                    N("div", f, {"role": "checkbox", "class": "feature"},
                      bb(20, 174 + 30 * i, 110, 26), BTN)
                    for i, f in enumerate(feats)
                ]),
                N("section", attrs={"id": "network-pane"}, children=[
                    N("h2", "Hidden layers", bbox=bb(160, 140, 140, 24), flags=VIS),
                    N("button", "Add hidden layer", bbox=bb(160, 174, 130, 26), flags=BTN),
                    N("button", "Remove hidden layer", bbox=bb(300, 174, 150, 26), flags=BTN),
                    N("canvas", attrs={"aria-label": "Network diagram"},
                      bbox=bb(160, 210, 320, 240), flags=("visible", "pointer_cursor")),
                ]),
                N("section", attrs={"id": "output-pane"}, children=[
                    N("h2", "Output", bbox=bb(520, 140, 100, 24), flags=VIS),
                    N("canvas", attrs={"aria-label": "Decision boundary plot"},
                      bbox=bb(520, 174, 300, 300), flags=("visible", "pointer_cursor")),
                    N("span", "Test loss 0.512", bbox=bb(520, 486, 120, 18), flags=VIS),
                    N("span", "Training loss 0.490", bbox=bb(660, 486, 140, 18), flags=VIS),
                    N("button", "Regenerate data", bbox=bb(520, 512, 130, 26), flags=BTN),
                ]),
            ]),
        ]),
    ])


VOYAGER_URL = "https://demo.local/voyager"
PLAYGROUND_URL = "https://demo.local/playground"


def build_snapshot(url: str, title: str, tree: dict) -> dict:
    return {
        "url": url,
        "title": title,
        "captured_at": "2026-08-20T12:00:00Z",
        "nodes": flatten(tree),
    }


# ---------------------------------------------------------------------------
# Hand labels: which node ids should be extracted (authored from the tree
# definitions above, not from the extractor)


def hand_label(nodes: list[dict]) -> list[int]:
    labeled = []
    for n in nodes:
        flags = set(n["flags"])
        visible = "visible" in flags and "disabled" not in flags
        has_area = n["bbox"] is not None and n["bbox"]["w"] > 0 and n["bbox"]["h"] > 0
        if not (visible and has_area):
            continue
        interactable = (
            n["tag"] in {"a", "button", "input", "select", "textarea", "option",
                         "summary", "label"}
            or n["attrs"].get("role") in {"button", "link", "checkbox", "radio",
                                          "slider", "tab", "menuitem", "combobox"}
            or "clickable_handler" in flags
            or "pointer_cursor" in flags
        )
        if interactable or n["text"].strip():
            labeled.append(n["id"])
    return labeled


# ---------------------------------------------------------------------------
# Case helpers


def case(assistance, why, subtype, config, targets, category=None):
    doc = {
        "assistance": assistance,
        "whyItHelps": why,
        "domSubtype": subtype,
        "configuration": config,
        "targets": [{"uiDescription": t} for t in targets],
    }
    if category:
        doc["category"] = category
    return doc


def golden_cases() -> list[dict]:
    """One case per subtype, all against the voyager snapshot."""
    return [
        case("Show a tip on the Cylinders field to explain engine cylinder counts",
             "Users unsure what the Cylinders field encodes read its meaning in place.",
             "insert.overlay_tip",
             {"tip_text": "Number of engine cylinders; drag to a shelf to encode it.",
              "placement": "below"},
             ["[button] Cylinders"]),
        case("Insert a Configuration Snapshots widget to save chart states",
             "Users who iterate on encodings can save and restore whole configurations.",
             "insert.widget",
             {"title": "Configuration Snapshots",
              "body": "Save the current encoding state and return to it later.",
              "controls": [
                  {"label": "Save current state", "action": "save_snapshot"},
                  {"label": "Notify listeners",
                   "action": {"type": "emit_event", "name": "insitu-snapshot"}},
                  {"label": "Close", "action": "dismiss"},
              ]},
             []),
        case("Add a quick search box next to the X axis selector",
             "Users with many fields can filter encoding choices by typing.",
             "insert.inline_control",
             {"controlType": "search-input", "label": "Quick encoding search",
              "placeholder": "type a field name",
              "action": {"type": "emit_event", "name": "insitu-filter"}},
             ["[select-data] X axis field"]),
        case("Highlight the Bookmark button so saved views are discoverable",
             "Users who lose chart states notice the bookmark affordance.",
             "mutate.style",
             {"properties": {"outline": "2px solid #f90", "animation-pulse": "1.5s"}},
             ["[button] Bookmark this view"]),
        case("Turn the minimum horsepower filter into a slider",
             "Users exploring ranges drag instead of typing exact numbers.",
             "mutate.representation",
             {"from_modality": "text", "to_modality": "slider"},
             ["[input] Minimum horsepower"]),
        case("Rename the Marks heading to plain language",
             "Users unfamiliar with grammar-of-graphics jargon see what marks are.",
             "mutate.reframe",
             {"new_text": "Chart shape (marks)"},
             ["[text] Marks"]),
        case("Reorder mark buttons so Bar comes first",
             "Users looking for the common bar chart find it at the front.",
             "recompose.reorder",
             {"order": [2, 0, 1]},
             ["[button] Auto", "[button] Area", "[button] Bar"]),
        case("Group the horsepower filter bounds under one label",
             "Users see the two inputs as one range control.",
             "recompose.group",
             {"group_label": "Horsepower range"},
             ["[input] Minimum horsepower", "[input] Maximum horsepower"]),
        case("Move the bookmark control into the filter pane",
             "Users adjusting filters save views without crossing the layout.",
             "recompose.layout",
             {},
             ["[button] Add filter", "[button] Bookmark this view"]),
    ]


# ---------------------------------------------------------------------------
# Handbook fixtures: cases whose rationales the eval challenges paraphrase


def voyager_handbook_cases() -> list[dict]:
    tip = lambda text: {"tip_text": text, "placement": "below"}  # noqa: E731
    return [
        # WHAT
        case("Show a tip explaining what the Cylinders field means",
             "What does the Cylinders field mean here?",
             "insert.overlay_tip", tip("Engine cylinder count per car."),
             ["[button] Cylinders"], "WHAT"),
        case("Explain the Marks heading in plain words",
             "What are marks in this chart builder?",
             "mutate.reframe", {"new_text": "Chart shape (marks)"},
             ["[text] Marks"], "WHAT"),
        # WHERE
        case("Highlight the dataset selector",
             "Where is the dataset selector on this page?",
             "mutate.style", {"properties": {"outline": "2px solid #09f"}},
             ["[select-data] Dataset"], "WHERE"),
        case("Highlight the export link",
             "Where can I export the chart specification?",
             "mutate.style", {"properties": {"background": "#ffef99"}},
             ["[link] Export specification"], "WHERE"),
        # HOW
        case("Show a tip on the X axis selector describing encoding steps",
             "How do I put a field on the x axis?",
             "insert.overlay_tip", tip("Pick a field here to encode it on x."),
             ["[select-data] X axis field"], "HOW"),
        case("Show a tip on Add filter describing how filters work",
             "How do I add a filter to the chart?",
             "insert.overlay_tip", tip("Click, then choose a field and a range."),
             ["[button] Add filter"], "HOW"),
        # WHY
        case("Show a tip on the chart canvas explaining automatic mark choice",
             "Why did the chart pick a point mark by itself?",
             "insert.overlay_tip", tip("Auto mark picks a shape from field types."),
             ["[canvas-region] Main chart canvas"], "WHY"),
        case("Show a tip explaining why the y axis looks truncated",
             "Why does the y axis not start at zero?",
             "insert.overlay_tip", tip("Scales default to the data extent."),
             ["[select-data] Y axis field"], "WHY"),
        # NEXT
        case("Suggest bookmarking after a chart is configured",
             "I built my chart, what should I do next?",
             "mutate.style", {"properties": {"animation-pulse": "1.2s"}},
             ["[button] Bookmark this view"], "NEXT"),
        case("Point to the gallery for follow-up examples",
             "What next after loading the cars dataset?",
             "mutate.style", {"properties": {"outline": "2px dashed #0a0"}},
             ["[link] Gallery"], "NEXT"),
        # CAN
        case("Group the horsepower bounds into one range control",
             "Can I filter horsepower as a single range?",
             "recompose.group", {"group_label": "Horsepower range"},
             ["[input] Minimum horsepower", "[input] Maximum horsepower"], "CAN"),
        case("Turn the minimum horsepower box into a slider",
             "Can I drag a slider instead of typing horsepower?",
             "mutate.representation",
             {"from_modality": "text", "to_modality": "slider"},
             ["[input] Minimum horsepower"], "CAN"),
    ]


def playground_handbook_cases() -> list[dict]:
    tip = lambda text: {"tip_text": text, "placement": "below"}  # noqa: E731
    return [
        # WHAT
        case("Show a tip defining the activation function",
             "What is an activation function?",
             "insert.overlay_tip", tip("Nonlinearity applied at each neuron."),
             ["[select-data] Activation function"], "WHAT"),
        case("Show a tip defining regularization",
             "What does regularization do to the model?",
             "insert.overlay_tip", tip("Penalizes large weights to reduce overfit."),
             ["[select-data] Regularization"], "WHAT"),
        # WHERE
        case("Highlight the noise level input",
             "Where do I set the noise level of the data?",
             "mutate.style", {"properties": {"outline": "2px solid #09f"}},
             ["[input] Noise level"], "WHERE"),
        case("Highlight the regenerate data button",
             "Where is the button to regenerate the data?",
             "mutate.style", {"properties": {"background": "#ffef99"}},
             ["[button] Regenerate data"], "WHERE"),
        # HOW
        case("Show a tip on Add hidden layer describing network edits",
             "How do I add a hidden layer to the network?",
             "insert.overlay_tip", tip("Click to append a layer; edit neurons inside."),
             ["[button] Add hidden layer"], "HOW"),
        case("Show a tip on Run training describing the training loop",
             "How do I start training the network?",
             "insert.overlay_tip", tip("Press to run; loss curves update live."),
             ["[button] Run training"], "HOW"),
        # WHY
        case("Show a tip on the loss readout explaining divergence",
             "Why is my test loss going up while training?",
             "insert.overlay_tip", tip("Rising test loss with falling training loss "
                                       "means overfitting; add regularization."),
             ["[text] Test loss 0.512"], "WHY"),
        case("Show a tip on the boundary plot explaining its colors",
             "Why is the decision boundary plot orange and blue?",
             "insert.overlay_tip", tip("Colors show the predicted class regions."),
             ["[canvas-region] Decision boundary plot"], "WHY"),
        # NEXT
        case("Suggest lowering the learning rate after divergence",
             "Training diverged, what should I try next?",
             "mutate.style", {"properties": {"animation-pulse": "1.2s"}},
             ["[select-data] Learning rate"], "NEXT"),
        case("Point to feature selection as the next experiment",
             "The model trained fine, what next should I explore?",
             "mutate.style", {"properties": {"outline": "2px dashed #0a0"}},
             ["[control] X1 squared"], "NEXT"),
        # CAN
        case("Group the three hyperparameter selectors under one label",
             "Can I see all the hyperparameters in one place?",
             "recompose.group", {"group_label": "Hyperparameters in one place"},
             ["[select-data] Learning rate", "[select-data] Activation function",
              "[select-data] Regularization"], "CAN"),
        case("Turn the noise level box into a slider",
             "Can I drag a slider to set the noise level?",
             "mutate.representation",
             {"from_modality": "text", "to_modality": "slider"},
             ["[input] Noise level"], "CAN"),
    ]


def paraphrase(challenge: str, i: int) -> str:
    """Light in-distribution rewordings used by the eval datasets."""
    variants = [
        challenge,
        challenge.rstrip("?") + ", please?",
        "Help me: " + challenge[0].lower() + challenge[1:],
        challenge.rstrip("?") + " exactly?",
    ]
    return variants[i % len(variants)]


# ---------------------------------------------------------------------------
# 120-candidate handbook generation fixture (3 seeded-invalid)


def candidates_120(elements) -> list[dict]:
    descriptors = [e.target_descriptor for e in elements]
    out: list[dict] = []
    verbs = ["explain", "describe", "clarify", "annotate", "document"]
    i = 0
    while len(out) < 117:
        desc = descriptors[i % len(descriptors)]
        verb = verbs[i % len(verbs)]
        out.append(case(
            f"Show a tip to {verb} {desc} (variant {i})",
            f"Users who need to {verb} the element {desc} read note {i} in place.",
            "insert.overlay_tip",
            {"tip_text": f"Note {i} about {desc}.", "placement": "below"},
            [desc],
        ))
        i += 1
    # Three seeded-invalid candidates, spread through the list.
    out.insert(17, case(
        "Pop up a modal over the chart",
        "Users see a modal; but this subtype does not exist.",
        "insert.popup", {"tip_text": "nope"}, ["[button] Undo"],
    ))
    out.insert(55, case(
        "Show a tip on a control that is not on this page",
        "Users would need a warp drive control for this one.",
        "insert.overlay_tip", {"tip_text": "engage"}, ["[button] Warp Drive"],
    ))
    out.insert(93, case(
        "Hide the footer by styling it away",
        "Users do not need the footer; but display is not an allowed property.",
        "mutate.style", {"properties": {"display": "none"}}, ["[link] About"],
    ))
    assert len(out) == 120
    return out


# ---------------------------------------------------------------------------
# main


def main() -> None:
    FIXTURES.mkdir(exist_ok=True)
    (FIXTURES / "eval").mkdir(exist_ok=True)
    (FIXTURES / "eval" / "handbooks").mkdir(exist_ok=True)

    voyager = build_snapshot(VOYAGER_URL, "Data Voyager", voyager_tree())
    playground = build_snapshot(PLAYGROUND_URL, "Neural Playground", playground_tree())

    snapshots = {
        "voyager_fields.snapshot.json": voyager,
        "playground.snapshot.json": playground,
    }
    parsed = {}
    for name, doc in snapshots.items():
        path = FIXTURES / name
        path.write_text(json.dumps(doc, indent=1, ensure_ascii=False), encoding="utf-8")
        parsed[name] = parse_snapshot(path.read_text(encoding="utf-8"))

    v_elements = extract_interactables(parsed["voyager_fields.snapshot.json"])
    p_elements = extract_interactables(parsed["playground.snapshot.json"])
    assert len(v_elements) == 50, f"voyager must have exactly 50 elements, got {len(v_elements)}"
    print(f"voyager elements: {len(v_elements)}; playground elements: {len(p_elements)}")

    # Hand labels authored from the tree definitions
    labels = {
        name: hand_label(doc["nodes"]) for name, doc in snapshots.items()
    }
    for name, snap in parsed.items():
        extracted = [e.node_id for e in extract_interactables(snap)]
        assert extracted == labels[name], (
            f"{name}: extractor {extracted} != hand labels {labels[name]}"
        )
    (FIXTURES / "interactable_labels.json").write_text(
        json.dumps(labels, indent=1), encoding="utf-8"
    )

    # Golden subtype cases: verify each grounds to the intended element,
    # compiles, applies, and reverts before freezing.
    from insitu.delivery import apply_sim, compile_plan, revert_sim
    from insitu.dom_model import snapshot_equal
    from insitu.grounding import GroundingConfig, ground_case
    from insitu.handbook import validate_case
    from insitu.providers import MockEmbeddingClient

    embedder = MockEmbeddingClient()
    snap = parsed["voyager_fields.snapshot.json"]
    goldens = golden_cases()
    for raw in goldens:
        validated = validate_case(raw, v_elements)
        assert not hasattr(validated, "reason"), f"golden rejected: {vars(validated)}"
        grounded = ground_case(validated, v_elements, GroundingConfig(), embedder)
        for g, t in zip(grounded, validated.targets):
            wanted = next(e for e in v_elements
                          if e.target_descriptor == t.ui_description)
            assert g.node_id == wanted.node_id, (
                f"golden target {t.ui_description} grounded to node {g.node_id}, "
                f"wanted {wanted.node_id}"
            )
        plan = compile_plan(validated, grounded, snap)
        mutated, record = apply_sim(snap, plan)
        reverted = revert_sim(mutated, record)
        assert not reverted.tampered
        assert snapshot_equal(snap, reverted.snapshot), raw["domSubtype"]
    (FIXTURES / "golden_subtypes.json").write_text(
        json.dumps({"snapshot": "voyager_fields.snapshot.json", "cases": goldens},
                   indent=1, ensure_ascii=False),
        encoding="utf-8",
    )
    print(f"golden cases: {len(goldens)} verified")

    # Grounding queries: 20 exact descriptors + 10 paraphrases, oracle-frozen.
    exact = [e.target_descriptor for e in v_elements[:25]
             if e.role != "text"][:20]
    assert len(exact) == 20
    paraphrases = [
        "the button labelled Cylinders",
        "search box for fields",
        "the dataset chooser dropdown",
        "selector for the x axis field",
        "link to export the specification",
        "the undo button",
        "button for bookmarking this view",
        "minimum horsepower filter input",
        "the main chart drawing canvas",
        "link to the example gallery",
    ]

    def element_text(e):
        return f"{e.target_descriptor} - {e.section}" if e.section else e.target_descriptor

    element_texts = [element_text(e) for e in v_elements]
    queries = []
    for q in exact + paraphrases:
        sims = [oracle_cosine(q, t) for t in element_texts]
        best = int(np.argmax(sims))
        queries.append({
            "query": q,
            "kind": "exact" if q in exact else "paraphrase",
            "expected_index": best,
            "expected_node_id": v_elements[best].node_id,
            "oracle_similarity": round(float(sims[best]), 6),
        })
        assert sims[best] >= 0.15, f"query below sigma_min: {q} ({sims[best]:.3f})"
    for q in queries:
        if q["kind"] == "exact":
            # An exact descriptor must resolve to the element it names.
            named = next(e for e in v_elements if e.target_descriptor == q["query"])
            assert q["expected_index"] == named.index, (
                f"exact query {q['query']!r} oracle picked #{q['expected_index']}, "
                f"element itself is #{named.index}"
            )
    (FIXTURES / "grounding_queries.json").write_text(
        json.dumps({"snapshot": "voyager_fields.snapshot.json", "queries": queries},
                   indent=1, ensure_ascii=False),
        encoding="utf-8",
    )
    print(f"grounding queries: {len(queries)} frozen")

    # Handbook fixtures + eval datasets
    handbooks = {
        interface_id_for(VOYAGER_URL): {
            "url": VOYAGER_URL, "title": "Data Voyager",
            "snapshot": "voyager_fields.snapshot.json",
            "cases": voyager_handbook_cases(),
        },
        interface_id_for(PLAYGROUND_URL): {
            "url": PLAYGROUND_URL, "title": "Neural Playground",
            "snapshot": "playground.snapshot.json",
            "cases": playground_handbook_cases(),
        },
    }
    elements_by_iface = {
        interface_id_for(VOYAGER_URL): v_elements,
        interface_id_for(PLAYGROUND_URL): p_elements,
    }
    for iface, doc in handbooks.items():
        for raw in doc["cases"]:
            validated = validate_case(raw, elements_by_iface[iface])
            assert not hasattr(validated, "reason"), (iface, vars(validated))
        (FIXTURES / "eval" / "handbooks" / f"{iface}.json").write_text(
            json.dumps(doc, indent=1, ensure_ascii=False), encoding="utf-8"
        )

    records = []
    for iface, doc in handbooks.items():
        for j, raw in enumerate(doc["cases"]):
            challenge = paraphrase(raw["whyItHelps"], j)
            records.append({
                "record_id": f"r{len(records):03d}",
                "interface_id": iface,
                "category": raw["category"],
                "challenge": challenge,
                "snapshot_path": f"../{doc['snapshot']}",
                "reference_assistance": raw["assistance"],
            })
    assert len(records) == 24
    dataset_path = FIXTURES / "eval" / "eval_dataset.jsonl"
    dataset_path.write_text(
        "\n".join(json.dumps(r, ensure_ascii=False) for r in records) + "\n",
        encoding="utf-8",
    )

    # 50-query in-distribution latency dataset (voyager only)
    v_iface = interface_id_for(VOYAGER_URL)
    v_cases = handbooks[v_iface]["cases"]
    p5_records = []
    for i in range(50):
        raw = v_cases[i % len(v_cases)]
        p5_records.append({
            "record_id": f"q{i:03d}",
            "interface_id": v_iface,
            "category": raw["category"],
            "challenge": paraphrase(raw["whyItHelps"], i // len(v_cases)),
            "snapshot_path": "../voyager_fields.snapshot.json",
            "reference_assistance": raw["assistance"],
        })
    p5_path = FIXTURES / "eval" / "latency_dataset.jsonl"
    p5_path.write_text(
        "\n".join(json.dumps(r, ensure_ascii=False) for r in p5_records) + "\n",
        encoding="utf-8",
    )

    # Verify the datasets end-to-end: retrieval routes above tau and every
    # record succeeds through the engine with zero injected latency.
    from insitu.evalkit import load_dataset, prepare_engine, run_eval

    for path, min_ok in ((dataset_path, 24), (p5_path, 49)):
        loaded = load_dataset(path)
        with tempfile.TemporaryDirectory() as td:
            engine = prepare_engine(loaded, FIXTURES / "eval" / "handbooks", td)
            report = run_eval(loaded, "hybrid", engine)
        retrieved = sum(1 for r in report.per_record if r["path"] == "retrieved")
        assert report.success_rate == 1.0, (path.name, report.per_record)
        assert retrieved >= min_ok, (
            f"{path.name}: only {retrieved}/{report.n_records} routed via retrieval"
        )
        print(f"{path.name}: success {report.success_rate:.2f}, "
              f"{retrieved}/{report.n_records} retrieved")

    # 120-candidate generation fixture with exactly 3 invalid entries
    cands = candidates_120(v_elements)
    invalid = sum(
        1 for c in cands
        if hasattr(validate_case(c, v_elements), "reason")
    )
    assert invalid == 3, f"expected exactly 3 invalid candidates, got {invalid}"
    (FIXTURES / "handbook_candidates_120.json").write_text(
        json.dumps(cands, indent=1, ensure_ascii=False), encoding="utf-8"
    )
    print("handbook_candidates_120.json: 120 candidates, 3 invalid")
    print("all fixtures written")


if __name__ == "__main__":
    main()
