import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from insitu.dom_model import (
    extract_interactables,
    format_element_listing,
    parse_snapshot,
    serialize_snapshot,
    snapshot_equal,
)
from insitu.errors import GraphError, SchemaError

from genutil import random_snapshot_doc
from oracles import walk_node_count


def doc(nodes):
    return {"url": "u", "title": "t", "captured_at": "2026-01-01T00:00:00Z",
            "nodes": nodes}


def node(nid, tag="div", text="", attrs=None, children=(), bbox=None, flags=()):
    return {"id": nid, "tag": tag, "text": text, "attrs": attrs or {},
            "children": list(children), "bbox": bbox, "flags": list(flags)}


BOX = {"x": 0.0, "y": 0.0, "w": 10.0, "h": 10.0}


class TestParsing:
    def test_minimal_roundtrip(self):
        snap = parse_snapshot(doc([node(0, "html")]))
        assert snap.root.tag == "html"
        assert parse_snapshot(serialize_snapshot(snap)).nodes[0].tag == "html"

    def test_unknown_snapshot_field_rejected(self):
        bad = doc([node(0)])
        bad["extra"] = 1
        with pytest.raises(SchemaError):
            parse_snapshot(bad)

    def test_unknown_node_field_rejected(self):
        n = node(0)
        n["zindex"] = 3
        with pytest.raises(SchemaError):
            parse_snapshot(doc([n]))

    def test_missing_field_rejected(self):
        n = node(0)
        del n["flags"]
        with pytest.raises(SchemaError):
            parse_snapshot(doc([n]))

    def test_unknown_flag_rejected(self):
        with pytest.raises(SchemaError):
            parse_snapshot(doc([node(0, flags=["shiny"])]))

    def test_bad_bbox_rejected(self):
        with pytest.raises(SchemaError):
            parse_snapshot(doc([node(0, bbox={"x": 0, "y": 0, "w": -1, "h": 5})]))

    def test_invalid_json(self):
        with pytest.raises(SchemaError):
            parse_snapshot("{nope")

    def test_noncontiguous_ids(self):
        with pytest.raises(GraphError):
            parse_snapshot(doc([node(0, children=[2]), node(2)]))

    def test_multiple_parents(self):
        with pytest.raises(GraphError):
            parse_snapshot(doc([node(0, children=[1, 2]),
                                node(1, children=[2]), node(2)]))

    def test_cycle_detected(self):
        with pytest.raises(GraphError):
            parse_snapshot(doc([node(0, children=[1]), node(1, children=[1])]))

    def test_ids_must_follow_document_order(self):
        # id 2 appears before id 1 in preorder
        with pytest.raises(GraphError):
            parse_snapshot(doc([node(0, children=[2, 1]), node(1), node(2)]))

    def test_root_with_parent_rejected(self):
        with pytest.raises(GraphError):
            parse_snapshot(doc([node(0, children=[1]), node(1, children=[0])]))


class TestFixtureContracts:
    def test_node_count_matches_independent_walk(self, voyager_doc, voyager_snapshot):
        assert len(voyager_snapshot.nodes) == len(voyager_doc["nodes"])
        assert walk_node_count(voyager_doc) == len(voyager_doc["nodes"])

    def test_hand_labeled_interactables(self, fixtures_dir, voyager_snapshot,
                                        playground_snapshot):
        labels = json.loads((fixtures_dir / "interactable_labels.json").read_text())
        for name, snap in [("voyager_fields.snapshot.json", voyager_snapshot),
                           ("playground.snapshot.json", playground_snapshot)]:
            extracted = [e.node_id for e in extract_interactables(snap)]
            assert extracted == labels[name]

    def test_exactly_fifty_elements(self, voyager_elements):
        assert len(voyager_elements) == 50

    def test_dense_document_order_indices(self, voyager_elements):
        assert [e.index for e in voyager_elements] == list(range(50))
        assert [e.node_id for e in voyager_elements] == sorted(
            e.node_id for e in voyager_elements
        )


class TestRolesAndLabels:
    def test_roles(self):
        snap = parse_snapshot(doc([
            node(0, "html", children=[1, 2, 3, 4, 5, 6, 7, 8]),
            node(1, "button", "Go", bbox=BOX, flags=["visible"]),
            node(2, "a", "Home", {"href": "/"}, bbox=BOX, flags=["visible"]),
            node(3, "a", "Act", {"role": "button"}, bbox=BOX, flags=["visible"]),
            node(4, "input", "", {"aria-label": "Name"}, bbox=BOX,
                 flags=["visible"]),
            node(5, "select", "", {"aria-label": "Pick"}, bbox=BOX,
                 flags=["visible"]),
            node(6, "canvas", "", {"id": "plot"}, bbox=BOX,
                 flags=["visible", "pointer_cursor"]),
            node(7, "span", "Plain words", bbox=BOX, flags=["visible"]),
            node(8, "label", "Field", bbox=BOX, flags=["visible"]),
        ]))
        roles = {e.node_id: e.role for e in extract_interactables(snap)}
        assert roles == {1: "button", 2: "link", 3: "link button", 4: "input",
                         5: "select-data", 6: "canvas-region", 7: "text",
                         8: "control"}

    def test_link_button_via_class(self):
        snap = parse_snapshot(doc([
            node(0, "html", children=[1]),
            node(1, "a", "Sign in", {"class": "primary button"}, bbox=BOX,
                 flags=["visible"]),
        ]))
        [e] = extract_interactables(snap)
        assert e.role == "link button"

    def test_label_fallback_chain(self):
        snap = parse_snapshot(doc([
            node(0, "html", children=[1, 2, 3, 4]),
            node(1, "button", "ignored", {"aria-label": "Aria wins"},
                 bbox=BOX, flags=["visible"]),
            node(2, "button", "  Text   wins  ", bbox=BOX, flags=["visible"]),
            node(3, "button", "", {"title": "Title wins"}, bbox=BOX,
                 flags=["visible"]),
            node(4, "button", "", {"id": "id-wins"}, bbox=BOX, flags=["visible"]),
        ]))
        labels = [e.label for e in extract_interactables(snap)]
        assert labels == ["Aria wins", "Text wins", "Title wins", "id-wins"]

    def test_visible_text_truncated_to_80(self):
        snap = parse_snapshot(doc([
            node(0, "html", children=[1]),
            node(1, "p", "x" * 200, bbox=BOX, flags=["visible"]),
        ]))
        [e] = extract_interactables(snap)
        assert len(e.label) == 80

    def test_disabled_and_invisible_excluded(self):
        snap = parse_snapshot(doc([
            node(0, "html", children=[1, 2, 3]),
            node(1, "button", "On", bbox=BOX, flags=["visible"]),
            node(2, "button", "Off", bbox=BOX, flags=["visible", "disabled"]),
            node(3, "button", "Hidden", bbox=BOX, flags=[]),
        ]))
        assert [e.label for e in extract_interactables(snap)] == ["On"]

    def test_zero_area_excluded(self):
        snap = parse_snapshot(doc([
            node(0, "html", children=[1]),
            node(1, "button", "Flat",
                 bbox={"x": 0, "y": 0, "w": 10, "h": 0}, flags=["visible"]),
        ]))
        assert extract_interactables(snap) == []


class TestSectionsAndListing:
    def test_section_from_preceding_heading(self, voyager_elements):
        by_label = {e.label: e for e in voyager_elements}
        assert by_label["Cylinders"].section == "Fields"
        assert by_label["Auto"].section == "Marks"
        assert by_label["Main chart canvas"].section == "Chart"

    def test_listing_groups_by_section(self, voyager_elements):
        listing = format_element_listing(voyager_elements)
        lines = in_lines = listing.splitlines()
        assert "[Section] Fields" in lines
        i = in_lines.index("[Section] Fields")
        assert any(line.endswith("[button] Cylinders") for line in lines[i:i + 12])

    def test_descriptor_forms(self, voyager_elements):
        e = next(x for x in voyager_elements if x.label == "Cylinders")
        assert e.descriptor == f"#{e.index} [button] Cylinders"
        assert e.target_descriptor == "[button] Cylinders"


class TestEquality:
    def test_equal_ignores_node_ids(self):
        a = parse_snapshot(doc([node(0, "html", children=[1, 2]),
                                node(1, "p", "x"), node(2, "p", "y")]))
        b = a.copy()
        # renumber: same structure, different ids
        b.nodes[1].node_id = 2
        b.nodes[2].node_id = 1
        b.nodes[0].children = [2, 1]
        assert snapshot_equal(a, b)

    def test_text_difference_detected(self):
        a = parse_snapshot(doc([node(0, "html", children=[1]), node(1, "p", "x")]))
        b = a.copy()
        b.nodes[1].text = "changed"
        assert not snapshot_equal(a, b)

    def test_ignore_assist_tags(self):
        a = parse_snapshot(doc([node(0, "html", children=[1]), node(1, "p", "x")]))
        b = a.copy()
        b.nodes[1].attributes["data-insitu-plan"] = "p1:0"
        assert not snapshot_equal(a, b)
        assert snapshot_equal(a, b, ignore_assist_tags=True)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_random_snapshots_roundtrip(seed):
    rng = random.Random(seed)
    raw = random_snapshot_doc(rng)
    snap = parse_snapshot(raw)
    again = parse_snapshot(serialize_snapshot(snap))
    assert snapshot_equal(snap, again)
    assert [e.descriptor for e in extract_interactables(snap)] == [
        e.descriptor for e in extract_interactables(again)
    ]
